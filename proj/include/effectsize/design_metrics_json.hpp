#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "effectsize/design_metrics.hpp"
#include "effectsize/effect_model_json.hpp"

namespace effectsize {

inline constexpr int kDiagnosticsSchemaVersion = 1;

inline std::string to_string(Sides s) { return s == Sides::two_sided ? "two_sided" : "one_sided"; }

inline Sides sides_from_string(const std::string& s) {
    if (s == "two_sided") return Sides::two_sided;
    if (s == "one_sided") return Sides::one_sided;
    throw ValidationError("sides must be 'two_sided' or 'one_sided'", "sides");
}

inline json to_json(const OutcomeModel& outcome) {
    if (const auto* b = std::get_if<BinaryOutcome>(&outcome)) {
        if (b->base_rate) return json{{"type", "binary"}, {"base_rate", *b->base_rate}};
        return json{{"type", "binary"}, {"conservative", true}};
    }
    return json{{"type", "continuous"}, {"sd", std::get<ContinuousOutcome>(outcome).sd}};
}

inline OutcomeModel outcome_from_json(const json& j) {
    const json& type = detail::require_key(j, "type");
    if (type == "continuous") return ContinuousOutcome{detail::number_at(j, "sd")};
    if (type != "binary") throw ValidationError("outcome type must be 'binary' or 'continuous'", "type");
    if (j.contains("base_rate")) {
        const double p = detail::number_at(j, "base_rate");
        detail::require_probability(p, "base_rate");
        return BinaryOutcome{p};
    }
    return BinaryOutcome{};
}

inline json to_json(const DesignSpec& d) {
    return json{{"n_treat", d.n_treat}, {"n_control", d.n_control}, {"outcome", to_json(d.outcome)},
                {"alpha", d.alpha}, {"sides", to_string(d.sides)}};
}

inline DesignSpec design_from_json(const json& j) {
    DesignSpec d;
    auto count = [&](const char* key) {
        const json& v = detail::require_key(j, key);
        if (!v.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer", key);
        return v.get<long long>();
    };
    d.n_treat = count("n_treat");
    d.n_control = count("n_control");
    d.outcome = j.contains("outcome") ? outcome_from_json(j.at("outcome")) : OutcomeModel{BinaryOutcome{}};
    if (j.contains("alpha")) d.alpha = detail::number_at(j, "alpha");
    if (j.contains("sides")) d.sides = sides_from_string(j.at("sides").get<std::string>());
    d.validate();
    return d;
}

inline json to_json(const DesignDiagnostics& d) {
    json j{{"power", d.power}, {"type_s", d.type_s}, {"se", d.se}, {"z_crit", d.z_crit}};
    j["exaggeration"] = d.exaggeration ? json(*d.exaggeration) : json("undefined");
    if (d.mc_se)
        j["mc_se"] = json{{"power", d.mc_se->power}, {"type_s", d.mc_se->type_s},
                          {"exaggeration", d.mc_se->exaggeration}};
    if (d.significant_draws) j["significant_draws"] = *d.significant_draws;
    if (d.median_abs_significant) j["median_abs_significant"] = *d.median_abs_significant;
    j["warnings"] = d.warnings;
    return j;
}

// Inputs echoed next to the diagnostics so a report can be replayed.
struct DiagnosticsInputs {
    std::optional<double> effect;
    std::optional<EffectDistribution> distribution;
    double se = 0.0;
    std::optional<DesignSpec> design;
    double alpha = 0.05;
    Sides sides = Sides::two_sided;
    std::optional<std::size_t> draws;
    std::optional<std::uint64_t> seed;
};

inline json diagnostics_report(const DiagnosticsInputs& in, const DesignDiagnostics& d) {
    json inputs{{"se", in.se}, {"alpha", in.alpha}, {"sides", to_string(in.sides)}};
    if (in.effect) inputs["effect"] = *in.effect;
    if (in.distribution) inputs["distribution"] = to_json(*in.distribution);
    if (in.design) inputs["design"] = to_json(*in.design);
    if (in.draws) inputs["draws"] = *in.draws;
    if (in.seed) inputs["seed"] = *in.seed;
    return json{{"schema_version", kDiagnosticsSchemaVersion},
                {"method", in.distribution ? "monte_carlo" : "closed_form"},
                {"inputs", inputs},
                {"diagnostics", to_json(d)}};
}

inline json to_json(const RequiredN& r) {
    return json{{"n_treat", r.n_treat}, {"n_control", r.n_control}, {"n_total", r.total()},
                {"achieved_power", r.achieved_power}};
}

inline json to_json(const PilotReport& r) {
    json mult = json::array();
    for (const auto& m : r.n_multipliers) mult.push_back({{"true_effect", m.true_effect}, {"n_multiplier", m.multiplier}});
    return json{{"estimate", r.estimate}, {"se", r.se}, {"z_crit", r.z_crit}, {"interval_lo", r.interval_lo},
                {"interval_hi", r.interval_hi}, {"n_multipliers", mult}};
}

} // namespace effectsize
