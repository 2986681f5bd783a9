#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "effectsize/effect_model.hpp"
#include "effectsize/effect_model_json.hpp"
#include "effectsize/errors.hpp"

namespace effectsize {

inline constexpr int kSessionSchemaVersion = 1;

// Protocol stages in order. A session sits at the stage whose input it is
// waiting for; `derived` waits for the researcher's reflection and
// `compared` is terminal.
enum class Stage { context, ate_pre, extremes, allocation, null_share, derived, compared };

inline constexpr std::array<Stage, 7> kAllStages{Stage::context,    Stage::ate_pre, Stage::extremes,
                                                 Stage::allocation, Stage::null_share, Stage::derived,
                                                 Stage::compared};

inline std::string to_string(Stage s) {
    switch (s) {
    case Stage::context: return "context";
    case Stage::ate_pre: return "ate_pre";
    case Stage::extremes: return "extremes";
    case Stage::allocation: return "allocation";
    case Stage::null_share: return "null_share";
    case Stage::derived: return "derived";
    case Stage::compared: return "compared";
    }
    return "unknown";
}

inline Stage stage_from_string(const std::string& s) {
    for (Stage st : kAllStages)
        if (to_string(st) == s) return st;
    throw ValidationError("unknown stage '" + s + "'", "stage");
}

struct StudyContext {
    std::string population;
    long long sample_size_estimate = 1;
    std::string treatment;
    std::string control;
    std::string outcome_measure;
    std::string analysis_plan;
    std::string effect_units;
    friend bool operator==(const StudyContext&, const StudyContext&) = default;
};

enum class ExtremeKind { largest, smallest };

struct ExtremeJudgment {
    ExtremeKind kind = ExtremeKind::largest;
    double effect = 0.0;
    std::string description; // who these units are
    double uncertainty = 0.0;
    double tail_share = 0.0; // fraction expected at this effect or beyond
    friend bool operator==(const ExtremeJudgment&, const ExtremeJudgment&) = default;
};

struct Extremes {
    ExtremeJudgment largest;
    ExtremeJudgment smallest;
    friend bool operator==(const Extremes&, const Extremes&) = default;
};

struct BallsAllocation {
    std::vector<double> bin_edges; // k + 1 strictly increasing edges
    std::vector<long long> balls;  // k counts
    long long total_balls = 20;
    friend bool operator==(const BallsAllocation&, const BallsAllocation&) = default;
};

struct MidpointSplit {
    double share_lower = 0.5; // between the smallest effect and the midpoint
    double share_upper = 0.5;
    friend bool operator==(const MidpointSplit&, const MidpointSplit&) = default;
};

struct AtePre {
    double value = 0.0;
};

struct NullShare {
    double p_null = 0.0;
};

struct Reflection {
    std::string text;
};

using StagePayload =
    std::variant<StudyContext, AtePre, Extremes, BallsAllocation, MidpointSplit, NullShare, Reflection>;

using Allocation = std::variant<std::monostate, BallsAllocation, MidpointSplit>;

inline Stage payload_stage(const StagePayload& p) {
    constexpr Stage stages[] = {Stage::context,    Stage::ate_pre,    Stage::extremes, Stage::allocation,
                                Stage::allocation, Stage::null_share, Stage::derived};
    return stages[p.index()];
}

struct LogEntry {
    std::int64_t timestamp_ms = 0;
    Stage from = Stage::context;
    Stage to = Stage::context;
    json payload;
    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

// Immutable value: advance() returns a new session.
struct ElicitationSession {
    std::string id;
    Stage stage = Stage::context;
    std::optional<StudyContext> context;
    std::optional<double> ate_pre;
    std::optional<Extremes> extremes;
    Allocation allocation;
    std::optional<double> p_null;
    std::optional<double> ate_post;
    std::optional<EffectDistribution> distribution;
    std::optional<std::string> reflection;
    std::vector<std::string> warnings;
    std::vector<LogEntry> log;
    friend bool operator==(const ElicitationSession&, const ElicitationSession&) = default;
};

inline std::string generate_session_id() {
    std::random_device rd;
    std::uniform_int_distribution<int> hex(0, 15);
    std::string id;
    for (int i = 0; i < 32; ++i) id.push_back("0123456789abcdef"[hex(rd)]);
    return id;
}

inline ElicitationSession new_session(std::string id = generate_session_id()) {
    if (id.empty()) throw ValidationError("session id must be nonempty", "id");
    ElicitationSession s;
    s.id = std::move(id);
    return s;
}

// ---------------------------------------------------------------------------
// Payload JSON (also the log payload format)
// ---------------------------------------------------------------------------

inline json to_json(const StudyContext& c) {
    return json{{"population", c.population},         {"sample_size_estimate", c.sample_size_estimate},
                {"treatment", c.treatment},           {"control", c.control},
                {"outcome_measure", c.outcome_measure}, {"analysis_plan", c.analysis_plan},
                {"effect_units", c.effect_units}};
}

inline json to_json(const ExtremeJudgment& e) {
    return json{{"kind", e.kind == ExtremeKind::largest ? "largest" : "smallest"},
                {"effect", e.effect},
                {"description", e.description},
                {"uncertainty", e.uncertainty},
                {"tail_share", e.tail_share}};
}

inline json to_json(const Extremes& e) { return json{{"largest", to_json(e.largest)}, {"smallest", to_json(e.smallest)}}; }

inline json to_json(const BallsAllocation& b) {
    return json{{"type", "balls"}, {"bin_edges", b.bin_edges}, {"balls", b.balls}, {"total_balls", b.total_balls}};
}

inline json to_json(const MidpointSplit& m) {
    return json{{"type", "midpoint"}, {"share_lower", m.share_lower}, {"share_upper", m.share_upper}};
}

// {"stage": <stage name>, "value": <stage-specific value>}
inline json payload_to_json(const StagePayload& p) {
    json value = std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AtePre>) return v.value;
            else if constexpr (std::is_same_v<T, NullShare>) return v.p_null;
            else if constexpr (std::is_same_v<T, Reflection>) return v.text;
            else return to_json(v);
        },
        p);
    return json{{"stage", to_string(payload_stage(p))}, {"value", std::move(value)}};
}

namespace detail {

inline std::string string_at(const json& j, const char* key) {
    const json& v = require_key(j, key);
    if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string", key);
    return v.get<std::string>();
}

inline long long integer_at(const json& j, const char* key) {
    const json& v = require_key(j, key);
    if (!v.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer", key);
    return v.get<long long>();
}

} // namespace detail

inline StudyContext context_from_json(const json& j) {
    StudyContext c;
    c.population = detail::string_at(j, "population");
    c.sample_size_estimate = detail::integer_at(j, "sample_size_estimate");
    c.treatment = detail::string_at(j, "treatment");
    c.control = detail::string_at(j, "control");
    c.outcome_measure = detail::string_at(j, "outcome_measure");
    c.analysis_plan = detail::string_at(j, "analysis_plan");
    c.effect_units = detail::string_at(j, "effect_units");
    return c;
}

inline ExtremeJudgment extreme_from_json(const json& j, ExtremeKind expected) {
    ExtremeJudgment e;
    const auto kind = j.contains("kind") ? detail::string_at(j, "kind")
                                         : std::string(expected == ExtremeKind::largest ? "largest" : "smallest");
    if (kind != "largest" && kind != "smallest") throw ValidationError("extreme kind must be largest or smallest", "kind");
    e.kind = kind == "largest" ? ExtremeKind::largest : ExtremeKind::smallest;
    if (e.kind != expected) throw ValidationError("extreme judgment has the wrong kind", "kind");
    e.effect = detail::number_at(j, "effect");
    e.description = j.contains("description") ? detail::string_at(j, "description") : std::string{};
    e.uncertainty = j.contains("uncertainty") ? detail::number_at(j, "uncertainty") : 0.0;
    e.tail_share = j.contains("tail_share") ? detail::number_at(j, "tail_share") : 0.0;
    return e;
}

inline Extremes extremes_from_json(const json& j) {
    return {extreme_from_json(detail::require_key(j, "largest"), ExtremeKind::largest),
            extreme_from_json(detail::require_key(j, "smallest"), ExtremeKind::smallest)};
}

inline std::variant<BallsAllocation, MidpointSplit> allocation_from_json(const json& j) {
    const auto type = detail::string_at(j, "type");
    if (type == "midpoint") return MidpointSplit{detail::number_at(j, "share_lower"), detail::number_at(j, "share_upper")};
    if (type != "balls") throw ValidationError("allocation type must be 'balls' or 'midpoint'", "type");
    BallsAllocation b;
    b.bin_edges = detail::numbers_at(j, "bin_edges");
    const json& balls = detail::require_key(j, "balls");
    if (!balls.is_array()) throw ValidationError("field 'balls' must be an array", "balls");
    for (const auto& x : balls) {
        if (!x.is_number_integer()) throw ValidationError("ball counts must be integers", "balls");
        b.balls.push_back(x.get<long long>());
    }
    b.total_balls = j.contains("total_balls") ? detail::integer_at(j, "total_balls") : 20;
    return b;
}

inline StagePayload payload_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("payload must be a JSON object", "payload");
    const Stage stage = stage_from_string(detail::string_at(j, "stage"));
    const json& v = detail::require_key(j, "value");
    switch (stage) {
    case Stage::context: return context_from_json(v);
    case Stage::ate_pre:
        if (!v.is_number()) throw ValidationError("ate_pre must be a number", "value");
        return AtePre{v.get<double>()};
    case Stage::extremes: return extremes_from_json(v);
    case Stage::allocation: {
        auto a = allocation_from_json(v);
        if (auto* b = std::get_if<BallsAllocation>(&a)) return *b;
        return std::get<MidpointSplit>(a);
    }
    case Stage::null_share:
        if (!v.is_number()) throw ValidationError("p_null must be a number", "value");
        return NullShare{v.get<double>()};
    case Stage::derived:
        if (!v.is_string()) throw ValidationError("reflection must be a string", "value");
        return Reflection{v.get<std::string>()};
    case Stage::compared: break;
    }
    throw ValidationError("no input is accepted at stage 'compared'", "stage");
}

// ---------------------------------------------------------------------------
// Validation and derivation
// ---------------------------------------------------------------------------

namespace detail {

inline void validate(const StudyContext& c) {
    const std::pair<const char*, const std::string*> fields[] = {
        {"population", &c.population},       {"treatment", &c.treatment},
        {"control", &c.control},             {"outcome_measure", &c.outcome_measure},
        {"analysis_plan", &c.analysis_plan}, {"effect_units", &c.effect_units}};
    for (const auto& [name, value] : fields)
        if (value->empty()) throw ValidationError(std::string(name) + " must be nonempty", name);
    if (c.sample_size_estimate < 1)
        throw ValidationError("sample_size_estimate must be at least 1", "sample_size_estimate");
}

inline void validate(const ExtremeJudgment& e, const char* which) {
    const std::string prefix = which;
    if (!std::isfinite(e.effect)) throw ValidationError(prefix + ".effect must be finite", prefix + ".effect");
    if (!(e.uncertainty >= 0.0) || !std::isfinite(e.uncertainty))
        throw ValidationError(prefix + ".uncertainty must be >= 0", prefix + ".uncertainty");
    if (!(e.tail_share >= 0.0 && e.tail_share <= 1.0))
        throw ValidationError(prefix + ".tail_share must lie in [0, 1]", prefix + ".tail_share");
}

inline void validate(const Extremes& e) {
    if (e.largest.kind != ExtremeKind::largest || e.smallest.kind != ExtremeKind::smallest)
        throw ValidationError("extremes must hold one largest and one smallest judgment", "kind");
    validate(e.largest, "largest");
    validate(e.smallest, "smallest");
    if (e.largest.effect < e.smallest.effect)
        throw ValidationError("largest effect must be >= smallest effect", "largest.effect");
}

inline void validate(const BallsAllocation& b) {
    const std::size_t k = b.balls.size();
    if (k < 2) throw ValidationError("allocation needs at least 2 bins", "balls");
    if (b.bin_edges.size() != k + 1) throw ValidationError("allocation needs k + 1 bin edges for k bins", "bin_edges");
    for (double e : b.bin_edges)
        if (!std::isfinite(e)) throw ValidationError("bin edges must be finite", "bin_edges");
    for (std::size_t i = 1; i < b.bin_edges.size(); ++i)
        if (!(b.bin_edges[i] > b.bin_edges[i - 1]))
            throw ValidationError("bin edges must be strictly increasing", "bin_edges");
    if (b.total_balls < 1) throw ValidationError("total_balls must be at least 1", "total_balls");
    long long sum = 0;
    for (long long n : b.balls) {
        if (n < 0) throw ValidationError("ball counts must be nonnegative", "balls");
        sum += n;
    }
    if (sum != b.total_balls)
        throw ValidationError("ball counts must sum to total_balls (" + std::to_string(sum) + " != " +
                                  std::to_string(b.total_balls) + ")",
                              "balls");
}

// Within a session the bins must also lie inside the elicited extremes.
inline void validate(const BallsAllocation& b, const Extremes& ex) {
    validate(b);
    const double slack = 1e-12 * std::max(1.0, std::abs(ex.largest.effect) + std::abs(ex.smallest.effect));
    if (b.bin_edges.front() < ex.smallest.effect - slack || b.bin_edges.back() > ex.largest.effect + slack)
        throw ValidationError("bin edges must lie within [smallest.effect, largest.effect]", "bin_edges");
}

inline void validate(const MidpointSplit& m) {
    require_probability(m.share_lower, "share_lower");
    require_probability(m.share_upper, "share_upper");
    if (std::abs(m.share_lower + m.share_upper - 1.0) > kSumTolerance)
        throw ValidationError("share_lower + share_upper must equal 1", "share_lower");
}

// Beyond a factor of two counts as a discrepancy; a zero against a nonzero
// share always does.
inline bool tail_mismatch(double elicited, double allocated) {
    if (elicited == 0.0 && allocated == 0.0) return false;
    if (elicited == 0.0 || allocated == 0.0) return true;
    const double r = elicited / allocated;
    return r > 2.0 || r < 0.5;
}

} // namespace detail

// Bin midpoints with masses balls / total.
inline EffectComponent balls_component(const BallsAllocation& b) {
    detail::validate(b);
    std::vector<double> values, masses;
    for (std::size_t i = 0; i < b.balls.size(); ++i) {
        values.push_back(0.5 * (b.bin_edges[i] + b.bin_edges[i + 1]));
        masses.push_back(static_cast<double>(b.balls[i]) / static_cast<double>(b.total_balls));
    }
    return EffectComponent::discrete(std::move(values), std::move(masses));
}

// Representative effects for an allocation: bin midpoints, or the two
// quarter points of [smallest, largest] weighted by the midpoint split.
inline EffectComponent allocation_component(const Allocation& allocation, const Extremes& ex) {
    if (const auto* b = std::get_if<BallsAllocation>(&allocation)) return balls_component(*b);
    if (const auto* m = std::get_if<MidpointSplit>(&allocation)) {
        const double lo = ex.smallest.effect;
        const double hi = ex.largest.effect;
        const double mid = 0.5 * (lo + hi);
        return EffectComponent::discrete({0.5 * (lo + mid), 0.5 * (mid + hi)}, {m->share_lower, m->share_upper});
    }
    throw ValidationError("allocation has not been elicited", "allocation");
}

struct Derivation {
    EffectDistribution distribution;
    double ate_post;
    std::vector<std::string> warnings;
};

inline Derivation derive(const ElicitationSession& s) {
    if (!s.extremes || std::holds_alternative<std::monostate>(s.allocation) || !s.p_null)
        throw ValidationError("session needs extremes, allocation and p_null before deriving ATE_post", "stage");
    detail::require_probability(*s.p_null, "p_null");
    EffectDistribution dist(
        std::vector<WeightedComponent>{{*s.p_null, EffectComponent::point_mass(0.0)},
                                       {detail::complement(*s.p_null), allocation_component(s.allocation, *s.extremes)}},
        s.context ? s.context->effect_units : std::string{});
    std::vector<std::string> warnings;
    if (const auto* b = std::get_if<BallsAllocation>(&s.allocation)) {
        const double low = static_cast<double>(b->balls.front()) / static_cast<double>(b->total_balls);
        const double high = static_cast<double>(b->balls.back()) / static_cast<double>(b->total_balls);
        if (detail::tail_mismatch(s.extremes->smallest.tail_share, low))
            warnings.push_back("lowest bin holds " + std::to_string(low) + " of the mass but the smallest-effect tail share is " +
                               std::to_string(s.extremes->smallest.tail_share));
        if (detail::tail_mismatch(s.extremes->largest.tail_share, high))
            warnings.push_back("highest bin holds " + std::to_string(high) + " of the mass but the largest-effect tail share is " +
                               std::to_string(s.extremes->largest.tail_share));
    }
    const double ate = mixture_mean(dist);
    return {std::move(dist), ate, std::move(warnings)};
}

// Proportion-weighted average over the elicited distribution, nulls included.
inline double derive_ate_post(const ElicitationSession& s) { return derive(s).ate_post; }

inline std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline ElicitationSession advance(const ElicitationSession& session, const StagePayload& payload,
                                  std::int64_t timestamp_ms) {
    if (session.stage == Stage::compared)
        throw StageMismatchError("session is complete; no further input is accepted", to_string(Stage::compared));
    const Stage given = payload_stage(payload);
    if (given != session.stage)
        throw StageMismatchError("session expects input for stage '" + to_string(session.stage) + "', got '" +
                                     to_string(given) + "'",
                                 to_string(session.stage));

    ElicitationSession next = session;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StudyContext>) {
                detail::validate(v);
                next.context = v;
                next.stage = Stage::ate_pre;
            } else if constexpr (std::is_same_v<T, AtePre>) {
                detail::require_finite(v.value, "ate_pre");
                next.ate_pre = v.value;
                next.stage = Stage::extremes;
            } else if constexpr (std::is_same_v<T, Extremes>) {
                detail::validate(v);
                next.extremes = v;
                next.stage = Stage::allocation;
            } else if constexpr (std::is_same_v<T, BallsAllocation>) {
                detail::validate(v, *session.extremes);
                next.allocation = v;
                next.stage = Stage::null_share;
            } else if constexpr (std::is_same_v<T, MidpointSplit>) {
                detail::validate(v);
                next.allocation = v;
                next.stage = Stage::null_share;
            } else if constexpr (std::is_same_v<T, NullShare>) {
                detail::require_probability(v.p_null, "p_null");
                next.p_null = v.p_null;
                auto d = derive(next);
                next.distribution = std::move(d.distribution);
                next.ate_post = d.ate_post;
                next.warnings = std::move(d.warnings);
                next.stage = Stage::derived;
            } else {
                next.reflection = v.text;
                next.stage = Stage::compared;
            }
        },
        payload);
    next.log.push_back({timestamp_ms, session.stage, next.stage, payload_to_json(payload)});
    return next;
}

inline ElicitationSession advance(const ElicitationSession& session, const StagePayload& payload) {
    return advance(session, payload, now_ms());
}

struct ComparisonReport {
    double ate_pre = 0.0;
    double ate_post = 0.0;
    std::optional<double> ratio; // nullopt when ate_pre is zero
    double absolute_difference = 0.0;
    bool unchanged = false;
    EffectDistribution distribution;
    std::optional<Extremes> extremes;
    std::vector<std::string> prompts;
    std::optional<std::string> reflection;
    std::vector<std::string> warnings;
};

inline ComparisonReport comparison_report(const ElicitationSession& s) {
    if (s.stage < Stage::derived || !s.ate_post || !s.distribution || !s.ate_pre)
        throw StageMismatchError("comparison needs a derived session (stage is '" + to_string(s.stage) + "')",
                                 to_string(Stage::derived));
    ComparisonReport r{*s.ate_pre, *s.ate_post, std::nullopt, std::abs(*s.ate_post - *s.ate_pre), false,
                       *s.distribution, s.extremes, {}, s.reflection, s.warnings};
    if (*s.ate_pre != 0.0) r.ratio = *s.ate_post / *s.ate_pre;
    r.unchanged = r.absolute_difference <= 1e-12 * std::max(1.0, std::abs(*s.ate_pre));
    if (r.unchanged) {
        r.prompts.push_back("ATE_post is unchanged from ATE_pre.");
    } else {
        r.prompts.push_back("Your distribution implies an average effect of " + std::to_string(r.ate_post) +
                            ", compared with your initial estimate of " + std::to_string(r.ate_pre) + ".");
        r.prompts.push_back("Which of the two better matches what you know about the people in this study?");
    }
    r.prompts.push_back("What would change your view of the smallest and largest individual effects?");
    return r;
}

inline json to_json(const ComparisonReport& r) {
    json j{{"ate_pre", r.ate_pre},
           {"ate_post", r.ate_post},
           {"absolute_difference", r.absolute_difference},
           {"unchanged", r.unchanged},
           {"distribution", to_json(r.distribution)},
           {"prompts", r.prompts},
           {"warnings", r.warnings}};
    j["ratio"] = r.ratio ? json(*r.ratio) : json("undefined");
    if (r.extremes) j["extremes"] = to_json(*r.extremes);
    j["reflection"] = r.reflection ? json(*r.reflection) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Session JSON (versioned)
// ---------------------------------------------------------------------------

inline json to_json(const ElicitationSession& s) {
    auto opt = [](const auto& o) -> json {
        if (!o) return nullptr;
        if constexpr (std::is_arithmetic_v<std::decay_t<decltype(*o)>> ||
                      std::is_same_v<std::decay_t<decltype(*o)>, std::string>)
            return *o;
        else
            return to_json(*o);
    };
    json alloc = std::visit(
        [](const auto& a) -> json {
            if constexpr (std::is_same_v<std::decay_t<decltype(a)>, std::monostate>) return nullptr;
            else return to_json(a);
        },
        s.allocation);
    json log = json::array();
    for (const auto& e : s.log)
        log.push_back({{"timestamp_ms", e.timestamp_ms}, {"from", to_string(e.from)}, {"to", to_string(e.to)},
                       {"payload", e.payload}});
    return json{{"schema_version", kSessionSchemaVersion},
                {"id", s.id},
                {"stage", to_string(s.stage)},
                {"context", opt(s.context)},
                {"ate_pre", opt(s.ate_pre)},
                {"extremes", opt(s.extremes)},
                {"allocation", alloc},
                {"p_null", opt(s.p_null)},
                {"ate_post", opt(s.ate_post)},
                {"distribution", opt(s.distribution)},
                {"reflection", opt(s.reflection)},
                {"warnings", s.warnings},
                {"log", log}};
}

// Strict reader: the schema version must match exactly. There are no older
// versions to migrate from.
inline ElicitationSession session_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("session must be a JSON object", "session");
    detail::check_schema_version(j, kSessionSchemaVersion, true);
    ElicitationSession s;
    s.id = detail::string_at(j, "id");
    s.stage = stage_from_string(detail::string_at(j, "stage"));
    auto present = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
    if (present("context")) s.context = context_from_json(j.at("context"));
    if (present("ate_pre")) s.ate_pre = detail::number_at(j, "ate_pre");
    if (present("extremes")) s.extremes = extremes_from_json(j.at("extremes"));
    if (present("allocation"))
        std::visit([&](auto&& a) { s.allocation = std::move(a); }, allocation_from_json(j.at("allocation")));
    if (present("p_null")) s.p_null = detail::number_at(j, "p_null");
    if (present("ate_post")) s.ate_post = detail::number_at(j, "ate_post");
    if (present("distribution")) s.distribution = distribution_from_json(j.at("distribution"));
    if (present("reflection")) s.reflection = detail::string_at(j, "reflection");
    if (j.contains("warnings"))
        for (const auto& w : j.at("warnings")) s.warnings.push_back(w.get<std::string>());
    if (j.contains("log")) {
        for (const auto& e : j.at("log")) {
            LogEntry entry;
            const json& ts = detail::require_key(e, "timestamp_ms");
            if (!ts.is_number_integer()) throw ValidationError("log timestamp must be an integer", "timestamp_ms");
            entry.timestamp_ms = ts.get<std::int64_t>();
            entry.from = stage_from_string(detail::string_at(e, "from"));
            entry.to = stage_from_string(detail::string_at(e, "to"));
            entry.payload = detail::require_key(e, "payload");
            s.log.push_back(std::move(entry));
        }
    }
    if (s.ate_post.has_value() != (s.stage >= Stage::derived))
        throw ValidationError("ate_post must be present exactly when the stage is derived or later", "ate_post");
    return s;
}

} // namespace effectsize
