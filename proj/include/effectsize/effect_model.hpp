#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "effectsize/errors.hpp"
#include "effectsize/random.hpp"

namespace effectsize {

// Tolerance within which weights (and discrete masses) are accepted as a
// probability vector and silently renormalized.
inline constexpr double kSumTolerance = 1e-9;

// Named null-share presets. Defaults only; nothing applies them implicitly.
namespace null_share {
inline constexpr double direct_intervention = 0.5;
inline constexpr double indirect_marketing = 0.9;
} // namespace null_share

namespace detail {

inline void require_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError(std::string(field) + " must lie in [0, 1]", field);
}

inline void require_finite(double x, const char* field) {
    if (!std::isfinite(x)) throw ValidationError(std::string(field) + " must be finite", field);
}

// 1 - p, taken on the shortest decimal that round-trips to p. Shares are
// entered as decimals, and 1 - 0.9 in binary is 0.09999999999999998, not 0.1.
// Falls back to binary subtraction when p needs more than 17 decimals.
inline double complement(double p) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, p, std::chars_format::fixed);
    const std::string text(buf, r.ptr);
    const auto dot = text.find('.');
    if (dot == std::string::npos) return 1.0 - p;
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 17 || text.substr(0, dot) != "0") return 1.0 - p;
    std::uint64_t scale = 1, digits = 0;
    for (char c : frac) {
        scale *= 10;
        digits = digits * 10 + static_cast<std::uint64_t>(c - '0');
    }
    std::string out = std::to_string(scale - digits);
    out = "0." + std::string(frac.size() - out.size(), '0') + out;
    double q = 0.0;
    std::from_chars(out.data(), out.data() + out.size(), q);
    return q;
}

// Validates a probability vector and rescales it to sum to 1.
inline std::vector<double> normalized(std::vector<double> p, const char* field) {
    if (p.empty()) throw ValidationError(std::string(field) + " must be nonempty", field);
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError(std::string(field) + " must be nonnegative", field);
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw ValidationError(std::string(field) + " must sum to 1 (got " + std::to_string(sum) + ")",
                              field);
    // Sums within rounding of 1 are left alone: dividing by them moves the
    // values by an ulp each time, so reloading a saved vector would drift.
    if (std::abs(sum - 1.0) > 8.0 * std::numeric_limits<double>::epsilon())
        for (double& v : p) v /= sum;
    return p;
}

} // namespace detail

struct PointMass {
    double value = 0.0;
    friend bool operator==(const PointMass&, const PointMass&) = default;
};

struct Uniform {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct Normal {
    double center = 0.0;
    double scale = 1.0;
    friend bool operator==(const Normal&, const Normal&) = default;
};

struct Discrete {
    std::vector<double> values;
    std::vector<double> masses;
    friend bool operator==(const Discrete&, const Discrete&) = default;
};

// One shape of individual-effect distribution. Construct through the
// factories below so the invariants hold.
class EffectComponent {
public:
    using Kind = std::variant<PointMass, Uniform, Normal, Discrete>;

    static EffectComponent point_mass(double value) {
        detail::require_finite(value, "value");
        return EffectComponent(PointMass{value});
    }

    static EffectComponent uniform(double lo, double hi) {
        detail::require_finite(lo, "lo");
        detail::require_finite(hi, "hi");
        if (lo > hi) throw ValidationError("uniform component requires lo <= hi", "lo");
        return EffectComponent(Uniform{lo, hi});
    }

    static EffectComponent normal(double center, double scale) {
        detail::require_finite(center, "center");
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw ValidationError("normal component requires a finite scale > 0", "scale");
        return EffectComponent(Normal{center, scale});
    }

    static EffectComponent discrete(std::vector<double> values, std::vector<double> masses) {
        if (values.empty() || values.size() != masses.size())
            throw ValidationError("discrete component needs equal-length, nonempty values and masses",
                                  "values");
        for (double v : values) detail::require_finite(v, "values");
        return EffectComponent(Discrete{std::move(values), detail::normalized(std::move(masses), "masses")});
    }

    const Kind& kind() const noexcept { return kind_; }

    template <typename T>
    const T* get_if() const noexcept {
        return std::get_if<T>(&kind_);
    }

    double mean() const {
        return std::visit(
            [](const auto& c) -> double {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, PointMass>) {
                    return c.value;
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    return 0.5 * (c.lo + c.hi);
                } else if constexpr (std::is_same_v<T, Normal>) {
                    return c.center;
                } else {
                    return std::inner_product(c.values.begin(), c.values.end(), c.masses.begin(), 0.0);
                }
            },
            kind_);
    }

    double variance() const {
        return std::visit(
            [](const auto& c) -> double {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, PointMass>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    const double w = c.hi - c.lo;
                    return w * w / 12.0;
                } else if constexpr (std::is_same_v<T, Normal>) {
                    return c.scale * c.scale;
                } else {
                    double mu = 0.0;
                    for (std::size_t i = 0; i < c.values.size(); ++i) mu += c.masses[i] * c.values[i];
                    double var = 0.0;
                    for (std::size_t i = 0; i < c.values.size(); ++i) {
                        const double d = c.values[i] - mu;
                        var += c.masses[i] * d * d;
                    }
                    return var;
                }
            },
            kind_);
    }

    friend bool operator==(const EffectComponent&, const EffectComponent&) = default;

private:
    explicit EffectComponent(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

struct WeightedComponent {
    double weight = 1.0;
    EffectComponent component;
    friend bool operator==(const WeightedComponent&, const WeightedComponent&) = default;
};

// Weighted mixture of effect components: the hypothesized distribution of
// individual treatment effects.
class EffectDistribution {
public:
    explicit EffectDistribution(std::vector<WeightedComponent> components, std::string units = {})
        : components_(std::move(components)), units_(std::move(units)) {
        if (components_.empty()) throw ValidationError("distribution needs at least one component", "components");
        std::vector<double> w;
        w.reserve(components_.size());
        for (const auto& c : components_) w.push_back(c.weight);
        w = detail::normalized(std::move(w), "weight");
        for (std::size_t i = 0; i < w.size(); ++i) components_[i].weight = w[i];
    }

    // Convenience: a single component with weight 1.
    explicit EffectDistribution(EffectComponent single, std::string units = {})
        : EffectDistribution(std::vector<WeightedComponent>{{1.0, std::move(single)}}, std::move(units)) {}

    std::span<const WeightedComponent> components() const noexcept { return components_; }
    const std::string& units() const noexcept { return units_; }

    friend bool operator==(const EffectDistribution&, const EffectDistribution&) = default;

private:
    std::vector<WeightedComponent> components_;
    std::string units_;
};

inline double mixture_mean(const EffectDistribution& dist) {
    double mean = 0.0;
    for (const auto& [w, c] : dist.components()) mean += w * c.mean();
    return mean;
}

// Law of total variance over the components.
inline double mixture_variance(const EffectDistribution& dist) {
    const double mu = mixture_mean(dist);
    double second = 0.0;
    for (const auto& [w, c] : dist.components()) {
        const double m = c.mean();
        second += w * (c.variance() + (m - mu) * (m - mu));
    }
    return second;
}

// Stateful per-stream drawer; one per engine. Component choice uses the
// mixture weights, then the chosen component is drawn from.
class EffectSampler {
public:
    explicit EffectSampler(const EffectDistribution& dist) : dist_(&dist) {
        std::vector<double> w;
        for (const auto& c : dist.components()) w.push_back(c.weight);
        pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
        for (const auto& c : dist.components()) {
            if (const auto* d = c.component.get_if<Discrete>())
                discrete_.emplace_back(d->masses.begin(), d->masses.end());
            else
                discrete_.emplace_back();
        }
    }

    double operator()(Engine& engine) {
        const std::size_t i = dist_->components().size() == 1 ? 0 : pick_(engine);
        const EffectComponent& comp = dist_->components()[i].component;
        return std::visit(
            [&](const auto& c) -> double {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, PointMass>) {
                    return c.value;
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    return std::uniform_real_distribution<double>(c.lo, c.hi)(engine);
                } else if constexpr (std::is_same_v<T, Normal>) {
                    return std::normal_distribution<double>(c.center, c.scale)(engine);
                } else {
                    return c.values[discrete_[i](engine)];
                }
            },
            comp.kind());
    }

private:
    const EffectDistribution* dist_;
    std::discrete_distribution<std::size_t> pick_;
    std::vector<std::discrete_distribution<std::size_t>> discrete_;
};

// n independent draws, deterministic given the seed.
inline std::vector<double> sample(const EffectDistribution& dist, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample size must be at least 1", "n");
    std::vector<double> out(n);
    run_chunked<int>(
        n, seed,
        [&](std::size_t, std::size_t begin, std::size_t end, Engine& engine) {
            EffectSampler draw(dist);
            for (std::size_t k = begin; k < end; ++k) out[k] = draw(engine);
            return 0;
        });
    return out;
}

struct PlausibleRange {
    double lo = 0.0;
    double hi = 0.0;
};

// normal(midpoint, half-width); for (0, X) this is normal(X/2, X/2). The
// normal is deliberately left untruncated.
inline EffectComponent from_plausible_range(const PlausibleRange& range) {
    detail::require_finite(range.lo, "lo");
    detail::require_finite(range.hi, "hi");
    if (!(range.lo < range.hi)) throw ValidationError("plausible range requires lo < hi", "lo");
    return EffectComponent::normal(0.5 * (range.lo + range.hi), 0.5 * (range.hi - range.lo));
}

inline EffectDistribution with_null_mass(const EffectComponent& base, double p_null) {
    detail::require_probability(p_null, "p_null");
    return EffectDistribution(
        std::vector<WeightedComponent>{{p_null, EffectComponent::point_mass(0.0)}, {detail::complement(p_null), base}});
}

// X / (2 / (1 - p_null)): the average implied by a (0, X) range with a null
// share, written as a divisor so the presets give exactly X/4 and X/20.
inline double heuristic_ate(double x, double p_null) {
    detail::require_probability(p_null, "p_null");
    if (p_null == 1.0) return 0.0;
    return x / (2.0 / detail::complement(p_null));
}

// Potential-outcome types for a binary outcome.
struct BinaryTypeModel {
    double p_always = 0.0; // outcome 1 under either arm
    double p_saved = 0.0;  // outcome 1 only under treatment
    double p_harmed = 0.0; // outcome 1 only under control
    double p_never = 0.0;  // outcome 0 under either arm

    static BinaryTypeModel make(double p_always, double p_saved, double p_harmed, double p_never) {
        detail::require_probability(p_always, "p_always");
        detail::require_probability(p_saved, "p_saved");
        detail::require_probability(p_harmed, "p_harmed");
        detail::require_probability(p_never, "p_never");
        const double sum = p_always + p_saved + p_harmed + p_never;
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw ValidationError("type shares must sum to 1", "p_always");
        return {p_always, p_saved, p_harmed, p_never};
    }
};

struct BinaryTypeAte {
    double ate = 0.0;
    double treat_rate = 0.0;
    double control_rate = 0.0;
};

inline BinaryTypeAte binary_type_ate(const BinaryTypeModel& m) {
    return {m.p_saved - m.p_harmed, m.p_always + m.p_saved, m.p_always + m.p_harmed};
}

inline EffectDistribution binary_to_distribution(const BinaryTypeModel& m) {
    std::vector<WeightedComponent> parts;
    if (m.p_saved > 0.0) parts.push_back({m.p_saved, EffectComponent::point_mass(1.0)});
    if (m.p_harmed > 0.0) parts.push_back({m.p_harmed, EffectComponent::point_mass(-1.0)});
    const double unaffected = m.p_always + m.p_never;
    if (unaffected > 0.0 || parts.empty()) parts.push_back({unaffected, EffectComponent::point_mass(0.0)});
    return EffectDistribution(std::move(parts), "probability difference");
}

struct Stratum {
    std::string label;
    double effect = 0.0;
    double population_share = 0.0;
    double sample_share = 0.0;
};

class StratifiedEffectCurve {
public:
    explicit StratifiedEffectCurve(std::vector<Stratum> strata) : strata_(std::move(strata)) {
        if (strata_.empty()) throw ValidationError("curve needs at least one stratum", "strata");
        std::vector<double> pop, smp;
        for (const auto& s : strata_) {
            detail::require_finite(s.effect, "effect");
            pop.push_back(s.population_share);
            smp.push_back(s.sample_share);
        }
        pop = detail::normalized(std::move(pop), "population_share");
        smp = detail::normalized(std::move(smp), "sample_share");
        for (std::size_t i = 0; i < strata_.size(); ++i) {
            strata_[i].population_share = pop[i];
            strata_[i].sample_share = smp[i];
        }
    }

    std::span<const Stratum> strata() const noexcept { return strata_; }

private:
    std::vector<Stratum> strata_;
};

enum class Weighting { population, sample };

inline double stratified_ate(const StratifiedEffectCurve& curve, Weighting weighting) {
    double ate = 0.0;
    for (const auto& s : curve.strata())
        ate += s.effect * (weighting == Weighting::population ? s.population_share : s.sample_share);
    return ate;
}

} // namespace effectsize
