#pragma once

// Test-only brute-force Monte Carlo oracle. Deliberately shares no code with
// the library: its own 32-bit engine, its own Box-Muller normals, plain
// loops, no chunking.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace oracle {

class BoxMuller {
public:
    explicit BoxMuller(std::uint32_t seed) : engine_(seed) {}

    double uniform() {
        // (0, 1) from 53 random bits built out of two 32-bit draws.
        const std::uint64_t hi = engine_() >> 5;
        const std::uint64_t lo = engine_() >> 6;
        return (static_cast<double>(hi * 67108864ULL + lo) + 0.5) / 9007199254740992.0;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double t = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct Estimate {
    double power = 0.0, power_se = 0.0;
    double type_s = 0.0, type_s_se = 0.0;
    double exaggeration = 0.0, exaggeration_se = 0.0;
};

// Replicate studies with true effect drawn by `effect_of(rng)` and
// estimate = effect + se * N(0, 1). Two-sided test at critical value
// `z_crit`. Sign errors are judged against each draw's effect; a zero
// effect is judged against `reference_sign`. Exaggeration divides by
// |mean_effect|.
template <typename EffectFn>
Estimate simulate(EffectFn effect_of, double mean_effect, double se, double z_crit, long long draws,
                  std::uint32_t seed, double reference_sign = 1.0) {
    BoxMuller rng(seed);
    long long sig = 0, wrong = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (long long i = 0; i < draws; ++i) {
        const double effect = effect_of(rng);
        const double est = effect + se * rng.normal();
        if (std::abs(est) <= z_crit * se) continue;
        ++sig;
        const double ref = effect > 0 ? 1.0 : (effect < 0 ? -1.0 : reference_sign);
        if (est * ref < 0) ++wrong;
        sum += std::abs(est);
        sum_sq += est * est;
    }
    Estimate e;
    const double n = static_cast<double>(draws), k = static_cast<double>(sig);
    e.power = k / n;
    e.power_se = std::sqrt(e.power * (1 - e.power) / n);
    e.type_s = wrong / k;
    e.type_s_se = std::sqrt(e.type_s * (1 - e.type_s) / k);
    const double m = sum / k;
    e.exaggeration = m / std::abs(mean_effect);
    e.exaggeration_se = std::sqrt((sum_sq / k - m * m) / k) / std::abs(mean_effect);
    return e;
}

inline Estimate fixed_effect(double effect, double se, double z_crit, long long draws, std::uint32_t seed) {
    return simulate([effect](BoxMuller&) { return effect; }, effect, se, z_crit, draws, seed);
}

} // namespace oracle
