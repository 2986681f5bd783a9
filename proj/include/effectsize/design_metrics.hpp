#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "effectsize/effect_model.hpp"
#include "effectsize/errors.hpp"
#include "effectsize/normal.hpp"
#include "effectsize/random.hpp"

namespace effectsize {

enum class Sides { two_sided, one_sided };

inline constexpr std::size_t kMinMixtureDraws = 10'000;
// Below this |effect| the exaggeration ratio is reported as undefined.
inline constexpr double kZeroEffect = 1e-12;
// Below this |mixture mean| the mixture exaggeration ratio is undefined.
inline constexpr double kZeroMixtureMean = 1e-6;

inline double z_critical(double alpha, Sides sides) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)", "alpha");
    return sides == Sides::two_sided ? normal_quantile(1.0 - 0.5 * alpha) : normal_quantile(1.0 - alpha);
}

namespace detail {

inline void require_count(long long n, const char* field) {
    if (n < 2) throw ValidationError(std::string(field) + " must be at least 2", field);
}

inline void require_se(double se) {
    if (!(se > 0.0) || !std::isfinite(se)) throw ValidationError("se must be a finite value > 0", "se");
}

} // namespace detail

inline double se_two_proportion(double p1, double p2, long long n1, long long n2) {
    detail::require_probability(p1, "p1");
    detail::require_probability(p2, "p2");
    detail::require_count(n1, "n1");
    detail::require_count(n2, "n2");
    return std::sqrt(p1 * (1.0 - p1) / static_cast<double>(n1) + p2 * (1.0 - p2) / static_cast<double>(n2));
}

// Upper bound on the SE of a difference in proportions (rates at 0.5).
inline double se_conservative_binary(long long n1, long long n2) { return se_two_proportion(0.5, 0.5, n1, n2); }

inline double se_two_mean(double sd, long long n1, long long n2) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw ValidationError("sd must be a finite value > 0", "sd");
    detail::require_count(n1, "n1");
    detail::require_count(n2, "n2");
    return sd * std::sqrt(1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
}

// One-sided tests are taken in the direction of the hypothesized effect
// (positive when the effect is zero).
inline double power_fixed(double effect, double se, double alpha, Sides sides) {
    detail::require_se(se);
    const double c = z_critical(alpha, sides);
    const double z = std::abs(effect) / se;
    if (sides == Sides::one_sided) return normal_sf(c - z);
    return normal_cdf(-c - z) + normal_sf(c - z);
}

struct McErrors {
    double power = 0.0;
    double type_s = 0.0;
    double exaggeration = 0.0;
};

struct DesignDiagnostics {
    double power = 0.0;
    double type_s = 0.0;
    std::optional<double> exaggeration; // nullopt means "undefined"
    double se = 0.0;
    double z_crit = 0.0;

    // Monte Carlo only.
    std::optional<McErrors> mc_se;
    std::optional<std::size_t> significant_draws;
    // Substitute for an undefined mixture exaggeration: median |significant estimate|.
    std::optional<double> median_abs_significant;
    std::vector<std::string> warnings;
};

// Closed form under estimate ~ Normal(effect, se^2).
//
// type_s    = P(significant with the sign opposite the effect) / power
// exaggeration = E[|estimate| | significant] / |effect|
//
// The conditional expectation uses the truncated-normal partial moments
//   int_a^inf y phi(y - z) dy = z (1 - Phi(a - z)) + phi(a - z).
// A zero effect counts as positive, so type_s there is the lower-tail share.
inline DesignDiagnostics diagnostics_fixed(double effect, double se, double alpha, Sides sides) {
    detail::require_se(se);
    DesignDiagnostics out;
    out.se = se;
    out.z_crit = z_critical(alpha, sides);
    const double c = out.z_crit;
    const double z = std::abs(effect) / se;

    const double upper = normal_sf(c - z);
    const double upper_moment = z * upper + normal_pdf(c - z); // E[y; y > c], y = |estimate| / se
    if (sides == Sides::one_sided) {
        out.power = upper;
        out.type_s = 0.0;
        if (std::abs(effect) >= kZeroEffect) out.exaggeration = se * upper_moment / upper / std::abs(effect);
        return out;
    }

    const double lower = normal_cdf(-c - z);
    const double lower_moment = normal_pdf(c + z) - z * lower; // E[-y; y < -c]
    out.power = lower + upper;
    out.type_s = lower / out.power;
    if (std::abs(effect) >= kZeroEffect)
        out.exaggeration = se * (upper_moment + lower_moment) / out.power / std::abs(effect);
    return out;
}

namespace detail {

struct MixtureTally {
    std::size_t significant = 0;
    std::size_t wrong_sign = 0;
    double sum_abs = 0.0;
    double sum_abs_sq = 0.0;
    std::vector<double> abs_significant;
};

} // namespace detail

// Monte Carlo: effect ~ dist, estimate ~ Normal(effect, se^2). Sign errors
// are judged against each draw's own effect; a zero effect is judged
// against the sign of the mixture mean (positive when the mean is zero).
// One-sided tests point the same way.
inline DesignDiagnostics diagnostics_mixture(const EffectDistribution& dist, double se, double alpha, Sides sides,
                                             std::size_t draws, std::uint64_t seed,
                                             unsigned threads = default_threads()) {
    detail::require_se(se);
    if (draws < kMinMixtureDraws)
        throw ValidationError("draws must be at least " + std::to_string(kMinMixtureDraws), "draws");

    DesignDiagnostics out;
    out.se = se;
    out.z_crit = z_critical(alpha, sides);
    const double threshold = out.z_crit * se;
    const double mean = mixture_mean(dist);
    const double reference = mean < 0.0 ? -1.0 : 1.0;
    const bool keep_abs = std::abs(mean) < kZeroMixtureMean;

    auto tallies = run_chunked<detail::MixtureTally>(
        draws, seed,
        [&](std::size_t, std::size_t begin, std::size_t end, Engine& engine) {
            detail::MixtureTally t;
            EffectSampler effect_draw(dist);
            std::normal_distribution<double> noise(0.0, 1.0);
            for (std::size_t k = begin; k < end; ++k) {
                const double effect = effect_draw(engine);
                const double estimate = effect + se * noise(engine);
                const bool significant = sides == Sides::two_sided ? std::abs(estimate) > threshold
                                                                   : estimate * reference > threshold;
                if (!significant) continue;
                const double sign = effect > 0.0 ? 1.0 : (effect < 0.0 ? -1.0 : reference);
                ++t.significant;
                if (estimate * sign < 0.0) ++t.wrong_sign;
                const double a = std::abs(estimate);
                t.sum_abs += a;
                t.sum_abs_sq += a * a;
                if (keep_abs) t.abs_significant.push_back(a);
            }
            return t;
        },
        threads);

    detail::MixtureTally total;
    for (auto& t : tallies) {
        total.significant += t.significant;
        total.wrong_sign += t.wrong_sign;
        total.sum_abs += t.sum_abs;
        total.sum_abs_sq += t.sum_abs_sq;
        total.abs_significant.insert(total.abs_significant.end(), t.abs_significant.begin(),
                                     t.abs_significant.end());
    }

    const double n = static_cast<double>(draws);
    const double k = static_cast<double>(total.significant);
    out.power = k / n;
    out.significant_draws = total.significant;
    McErrors err;
    err.power = std::sqrt(out.power * (1.0 - out.power) / n);
    if (total.significant > 0) {
        out.type_s = static_cast<double>(total.wrong_sign) / k;
        err.type_s = std::sqrt(out.type_s * (1.0 - out.type_s) / k);
    } else {
        out.warnings.emplace_back("no significant draws; type_s and exaggeration are not estimable");
    }

    if (keep_abs) {
        out.warnings.emplace_back("mixture mean is near zero; exaggeration ratio is undefined");
        if (!total.abs_significant.empty()) {
            auto& v = total.abs_significant;
            const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
            std::nth_element(v.begin(), mid, v.end());
            double median = *mid;
            if (v.size() % 2 == 0) median = 0.5 * (median + *std::max_element(v.begin(), mid));
            out.median_abs_significant = median;
        }
    } else if (total.significant > 0) {
        const double m = total.sum_abs / k;
        out.exaggeration = m / std::abs(mean);
        const double var = total.significant > 1 ? std::max(0.0, (total.sum_abs_sq - k * m * m) / (k - 1.0)) : 0.0;
        err.exaggeration = std::sqrt(var / k) / std::abs(mean);
    }
    out.mc_se = err;
    return out;
}

// Outcome models for the per-arm standard error.
struct BinaryOutcome {
    std::optional<double> base_rate; // nullopt: conservative bound (rates at 0.5)
    friend bool operator==(const BinaryOutcome&, const BinaryOutcome&) = default;
};

struct ContinuousOutcome {
    double sd = 1.0;
    friend bool operator==(const ContinuousOutcome&, const ContinuousOutcome&) = default;
};

using OutcomeModel = std::variant<BinaryOutcome, ContinuousOutcome>;

struct DesignSpec {
    long long n_treat = 2;
    long long n_control = 2;
    OutcomeModel outcome = BinaryOutcome{};
    double alpha = 0.05;
    Sides sides = Sides::two_sided;

    void validate() const {
        detail::require_count(n_treat, "n_treat");
        detail::require_count(n_control, "n_control");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)", "alpha");
        if (const auto* b = std::get_if<BinaryOutcome>(&outcome); b && b->base_rate)
            detail::require_probability(*b->base_rate, "base_rate");
        if (const auto* c = std::get_if<ContinuousOutcome>(&outcome); c && !(c->sd > 0.0))
            throw ValidationError("sd must be > 0", "sd");
    }
};

// SE of the difference for the given arms. With a base rate the treated
// arm's rate is base_rate + effect.
inline double se_for(const OutcomeModel& outcome, double effect, long long n_treat, long long n_control) {
    if (const auto* b = std::get_if<BinaryOutcome>(&outcome)) {
        if (!b->base_rate) return se_conservative_binary(n_treat, n_control);
        const double treated = *b->base_rate + effect;
        if (!(treated >= 0.0 && treated <= 1.0))
            throw ValidationError("base_rate + effect must lie in [0, 1]", "effect");
        return se_two_proportion(treated, *b->base_rate, n_treat, n_control);
    }
    return se_two_mean(std::get<ContinuousOutcome>(outcome).sd, n_treat, n_control);
}

inline double se_for(const DesignSpec& design, double effect) {
    design.validate();
    return se_for(design.outcome, effect, design.n_treat, design.n_control);
}

struct RequiredN {
    long long n_treat = 0;
    long long n_control = 0;
    double achieved_power = 0.0;

    long long total() const { return n_treat + n_control; }
};

// Smallest n_treat (n_control = ceil(allocation * n_treat)) reaching the
// target power. Power is monotone in n, so the search is doubling followed
// by bisection.
inline RequiredN required_n(double effect, const OutcomeModel& outcome, double alpha, Sides sides,
                            double target_power, double allocation = 1.0) {
    if (!std::isfinite(effect) || std::abs(effect) < kZeroEffect)
        throw ValidationError("effect must be nonzero; zero effect cannot reach any target power", "effect");
    if (!(target_power > 0.0 && target_power < 1.0))
        throw ValidationError("target_power must lie in (0, 1)", "target_power");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)", "alpha");
    if (target_power <= alpha)
        throw ValidationError("target_power must exceed alpha", "target_power");
    if (!(allocation > 0.0) || !std::isfinite(allocation))
        throw ValidationError("allocation ratio must be > 0", "allocation");

    auto control_for = [&](long long nt) {
        return std::max<long long>(2, static_cast<long long>(std::ceil(allocation * static_cast<double>(nt))));
    };
    auto power_at = [&](long long nt) {
        return power_fixed(effect, se_for(outcome, effect, nt, control_for(nt)), alpha, sides);
    };

    constexpr long long kMaxN = 1LL << 50;
    long long lo = 1; // power_at(lo) < target, or lo is below the minimum
    long long hi = 2;
    while (power_at(hi) < target_power) {
        lo = hi;
        hi *= 2;
        if (hi > kMaxN) throw ValidationError("target power unreachable at any sample size", "target_power");
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (power_at(mid) >= target_power)
            hi = mid;
        else
            lo = mid;
    }
    return {hi, control_for(hi), power_at(hi)};
}

struct PilotResult {
    long long successes_treat = 0;
    long long n_treat = 0;
    long long successes_control = 0;
    long long n_control = 0;
};

struct NMultiplier {
    double true_effect = 0.0;
    double multiplier = 0.0; // required_n(true_effect) / required_n(estimate), per arm
};

struct PilotReport {
    double estimate = 0.0;
    double se = 0.0;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    double z_crit = 0.0;
    std::vector<NMultiplier> n_multipliers;
};

// Default candidate true effects: nonzero multiples of estimate/4 inside
// the interval.
inline std::vector<double> pilot_candidates(double estimate, double lo, double hi) {
    std::vector<double> out;
    if (std::abs(estimate) < kZeroEffect) return out;
    const double step = std::abs(estimate) / 4.0;
    const long long first = static_cast<long long>(std::ceil(lo / step - 1e-9));
    const long long last = static_cast<long long>(std::floor(hi / step + 1e-9));
    for (long long k = first; k <= last; ++k)
        if (k != 0) out.push_back(static_cast<double>(k) * step);
    return out;
}

// Sample sizes use the conservative binary SE at equal allocation.
inline PilotReport pilot_report(const PilotResult& pilot, double alpha, std::vector<double> candidates = {},
                                double target_power = 0.8) {
    if (pilot.n_treat < 1 || pilot.n_control < 1) throw ValidationError("pilot arms must be nonempty", "n_treat");
    if (pilot.successes_treat < 0 || pilot.successes_treat > pilot.n_treat)
        throw ValidationError("successes_treat must lie in [0, n_treat]", "successes_treat");
    if (pilot.successes_control < 0 || pilot.successes_control > pilot.n_control)
        throw ValidationError("successes_control must lie in [0, n_control]", "successes_control");

    PilotReport r;
    const double pt = static_cast<double>(pilot.successes_treat) / static_cast<double>(pilot.n_treat);
    const double pc = static_cast<double>(pilot.successes_control) / static_cast<double>(pilot.n_control);
    r.estimate = pt - pc;
    r.se = std::sqrt(pt * (1.0 - pt) / static_cast<double>(pilot.n_treat) +
                     pc * (1.0 - pc) / static_cast<double>(pilot.n_control));
    r.z_crit = z_critical(alpha, Sides::two_sided);
    r.interval_lo = r.estimate - r.z_crit * r.se;
    r.interval_hi = r.estimate + r.z_crit * r.se;

    if (std::abs(r.estimate) < kZeroEffect) return r;
    if (candidates.empty()) candidates = pilot_candidates(r.estimate, r.interval_lo, r.interval_hi);
    const OutcomeModel conservative = BinaryOutcome{};
    const auto base = required_n(r.estimate, conservative, alpha, Sides::two_sided, target_power);
    for (double c : candidates) {
        if (std::abs(c) < kZeroEffect) continue;
        const auto n = required_n(c, conservative, alpha, Sides::two_sided, target_power);
        r.n_multipliers.push_back({c, static_cast<double>(n.n_treat) / static_cast<double>(base.n_treat)});
    }
    return r;
}

} // namespace effectsize
