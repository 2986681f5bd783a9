#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "effectsize/design_metrics.hpp"
#include "effectsize/design_metrics_json.hpp"
#include "effectsize/effect_model.hpp"
#include "effectsize/effect_model_json.hpp"
#include "effectsize/elicitation.hpp"
#include "effectsize/errors.hpp"
#include "effectsize/scenario_bench.hpp"
#include "effectsize/session_store.hpp"

namespace effectsize {

inline constexpr int kApiSchemaVersion = 1;
inline constexpr std::size_t kDefaultDraws = 200'000;

struct ApiResponse {
    int status = 200;
    std::string body; // application/json, UTF-8
};

inline std::string envelope(const json& payload) {
    return json{{"schema_version", kApiSchemaVersion}, {"payload", payload}}.dump();
}

inline std::string error_envelope(const std::string& code, const std::string& message, json extra = json::object()) {
    json err{{"code", code}, {"message", message}};
    for (auto& [k, v] : extra.items()) err[k] = v;
    return json{{"schema_version", kApiSchemaVersion}, {"error", err}}.dump();
}

// Library-level request handlers shared by the HTTP server and tests. The
// compute endpoints are stateless; sessions live in the store.
class Service {
public:
    Service(SessionStore& store, ScenarioRegistry registry) : store_(store), registry_(std::move(registry)) {}

    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) {
        try {
            return route(method, path, body);
        } catch (const json::exception& e) {
            return {400, error_envelope("bad_request", std::string("malformed JSON: ") + e.what())};
        } catch (const StageMismatchError& e) {
            return {422, error_envelope("stage_mismatch", e.what(), {{"expected_stage", e.expected_stage()}})};
        } catch (const SchemaVersionError& e) {
            return {422, error_envelope("schema_version", e.what(),
                                        {{"found", e.found()}, {"supported", e.supported()}})};
        } catch (const ValidationError& e) {
            json extra = json::object();
            if (!e.field().empty()) extra["field"] = e.field();
            return {422, error_envelope("validation", e.what(), extra)};
        } catch (const NotFoundError& e) {
            return {404, error_envelope("not_found", e.what())};
        } catch (const ConflictError& e) {
            return {409, error_envelope("conflict", e.what(), {{"retryable", true}})};
        } catch (const std::exception& e) {
            return {500, error_envelope("internal", e.what())};
        }
    }

    // --- compute -----------------------------------------------------------

    static json compute_ate(const json& req) {
        if (!req.is_object()) throw ValidationError("request must be a JSON object", "body");
        json out = json::object();
        std::optional<EffectDistribution> dist;
        if (req.contains("types")) {
            const auto model = detail::types_from_json(req.at("types"));
            const auto r = binary_type_ate(model);
            out["treat_rate"] = r.treat_rate;
            out["control_rate"] = r.control_rate;
            dist = binary_to_distribution(model);
        } else if (req.contains("range") || req.contains("balls")) {
            EffectComponent base = EffectComponent::point_mass(0.0);
            if (req.contains("range")) {
                const auto r = detail::numbers_at(req, "range");
                if (r.size() != 2) throw ValidationError("range must be [lo, hi]", "range");
                base = from_plausible_range({r[0], r[1]});
            } else {
                json balls = req.at("balls");
                if (!balls.is_object()) throw ValidationError("balls must be a JSON object", "balls");
                balls["type"] = "balls";
                base = balls_component(std::get<BallsAllocation>(allocation_from_json(balls)));
            }
            dist = with_null_mass(base, detail::number_at(req, "p_null"));
        } else if (req.contains("distribution")) {
            dist = distribution_from_json(req.at("distribution"));
            if (req.contains("p_null"))
                throw ValidationError("p_null applies to range or balls input, not to a full distribution", "p_null");
        } else {
            throw ValidationError("request needs one of range, balls, types or distribution", "body");
        }
        out["ate"] = mixture_mean(*dist);
        out["variance"] = mixture_variance(*dist);
        out["distribution"] = to_json(*dist);
        return out;
    }

    static json compute_diagnostics(const json& req) {
        if (!req.is_object()) throw ValidationError("request must be a JSON object", "body");
        DiagnosticsInputs in;
        if (req.contains("design")) {
            in.design = design_from_json(req.at("design"));
            in.alpha = in.design->alpha;
            in.sides = in.design->sides;
        }
        if (req.contains("alpha")) in.alpha = detail::number_at(req, "alpha");
        if (req.contains("sides")) in.sides = sides_from_string(detail::string_at(req, "sides"));

        const bool has_effect = req.contains("effect");
        const bool has_dist = req.contains("distribution");
        if (has_effect == has_dist) throw ValidationError("request needs exactly one of effect or distribution", "effect");
        if (has_effect) in.effect = detail::number_at(req, "effect");
        if (has_dist) in.distribution = distribution_from_json(req.at("distribution"));

        const double center = in.effect ? *in.effect : mixture_mean(*in.distribution);
        if (req.contains("se")) {
            in.se = detail::number_at(req, "se");
        } else if (in.design) {
            in.se = se_for(*in.design, center);
        } else {
            throw ValidationError("request needs se or design", "se");
        }

        DesignDiagnostics d;
        if (in.effect) {
            d = diagnostics_fixed(*in.effect, in.se, in.alpha, in.sides);
        } else {
            if (req.contains("draws")) {
                const json& v = req.at("draws");
                if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError("draws must be a count", "draws");
                in.draws = v.get<std::size_t>();
            } else {
                in.draws = kDefaultDraws;
            }
            if (req.contains("seed")) {
                const json& v = req.at("seed");
                if (!v.is_number_unsigned()) throw ValidationError("seed must be a nonnegative integer", "seed");
                in.seed = v.get<std::uint64_t>();
            } else {
                in.seed = fresh_seed();
            }
            d = diagnostics_mixture(*in.distribution, in.se, in.alpha, in.sides, *in.draws, *in.seed);
        }
        return diagnostics_report(in, d);
    }

private:
    static std::uint64_t fresh_seed() {
        std::random_device rd;
        // Kept below 2^53 so every JSON client reads the echoed seed exactly.
        return ((static_cast<std::uint64_t>(rd()) << 32) | rd()) & ((std::uint64_t{1} << 53) - 1);
    }

    static json parse_body(const std::string& body) {
        if (body.empty()) return json::object();
        return json::parse(body);
    }

    json session_view(const ElicitationSession& s) const {
        json out{{"id", s.id}, {"session", to_json(s)}};
        if (s.stage >= Stage::derived) out["comparison"] = to_json(comparison_report(s));
        return out;
    }

    ApiResponse route(const std::string& method, const std::string& path, const std::string& body) {
        static const std::regex session_re(R"(^/v1/sessions/([A-Za-z0-9_-]+)$)");
        static const std::regex advance_re(R"(^/v1/sessions/([A-Za-z0-9_-]+)/advance$)");
        static const std::regex scenario_run_re(R"(^/v1/scenarios/([A-Za-z0-9_.-]+)/run$)");
        std::smatch m;

        if (path == "/v1/sessions") {
            if (method != "POST") return method_not_allowed();
            return create_session(parse_body(body));
        }
        if (std::regex_match(path, m, advance_re)) {
            if (method != "POST") return method_not_allowed();
            return advance_session(m[1].str(), parse_body(body));
        }
        if (std::regex_match(path, m, session_re)) {
            if (method != "GET") return method_not_allowed();
            return {200, envelope(session_view(store_.load(m[1].str())))};
        }
        if (path == "/v1/diagnostics") {
            if (method != "POST") return method_not_allowed();
            return {200, envelope(compute_diagnostics(parse_body(body)))};
        }
        if (path == "/v1/ate") {
            if (method != "POST") return method_not_allowed();
            return {200, envelope(compute_ate(parse_body(body)))};
        }
        if (path == "/v1/scenarios") {
            if (method != "GET") return method_not_allowed();
            return {200, envelope(json{{"scenarios", registry_.names()}})};
        }
        if (std::regex_match(path, m, scenario_run_re)) {
            if (method != "POST") return method_not_allowed();
            return {200, envelope(to_json(registry_.run(m[1].str())))};
        }
        return {404, error_envelope("not_found", "no route for " + path)};
    }

    static ApiResponse method_not_allowed() { return {405, error_envelope("method_not_allowed", "method not allowed")}; }

    ApiResponse create_session(const json& req) {
        ElicitationSession s = new_session();
        if (req.contains("context")) s = advance(s, context_from_json(req.at("context")));
        store_.commit(s, 0);
        return {201, envelope(session_view(s))};
    }

    // Optional "expected_log_length" makes the advance conditional on the
    // caller having seen the latest state.
    ApiResponse advance_session(const std::string& id, const json& req) {
        const ElicitationSession current = store_.load(id);
        const std::size_t length = current.log.size();
        if (req.contains("expected_log_length")) {
            const json& v = req.at("expected_log_length");
            if (!v.is_number_unsigned()) throw ValidationError("expected_log_length must be a count", "expected_log_length");
            if (v.get<std::size_t>() != length)
                throw ConflictError("session '" + id + "' has advanced since log length " + std::to_string(v.get<std::size_t>()));
        }
        json payload = req;
        payload.erase("expected_log_length");
        ElicitationSession next = advance(current, payload_from_json(payload));
        store_.commit(next, length);
        return {200, envelope(session_view(next))};
    }

    SessionStore& store_;
    ScenarioRegistry registry_;
};

} // namespace effectsize
