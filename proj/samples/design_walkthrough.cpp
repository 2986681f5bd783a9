// Walks a two-arm binary-outcome design from a hypothesized effect
// distribution to power, type S error and exaggeration.
#include <cstdio>

#include "effectsize/design_metrics.hpp"
#include "effectsize/effect_model.hpp"

using namespace effectsize;

int main() {
    // Plausible effect between 0 and 0.2 if it works; half of similar
    // interventions do nothing.
    const auto base = from_plausible_range({0.0, 0.2});
    const auto dist = with_null_mass(base, null_share::direct_intervention);
    std::printf("hypothesized mean effect  %.4f\n", mixture_mean(dist));

    const double se = se_conservative_binary(200, 200);
    std::printf("standard error (n=200/arm) %.4f\n", se);

    const auto fixed = diagnostics_fixed(mixture_mean(dist), se, 0.05, Sides::two_sided);
    std::printf("fixed effect: power %.3f  type S %.4f  exaggeration %.2f\n", fixed.power, fixed.type_s,
                fixed.exaggeration.value_or(0.0));

    const auto mc = diagnostics_mixture(dist, se, 0.05, Sides::two_sided, 200000, 1);
    std::printf("mixture:      power %.3f  type S %.4f  exaggeration %.2f\n", mc.power, mc.type_s,
                mc.exaggeration.value_or(0.0));

    const auto n = required_n(0.05, BinaryOutcome{}, 0.05, Sides::two_sided, 0.8);
    std::printf("n per arm for 80%% power at 0.05: %lld\n", n.n_treat);
}
