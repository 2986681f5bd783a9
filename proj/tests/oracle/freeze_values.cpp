// Prints oracle values that are frozen into the test suites. Not part of
// the ctest run; rebuild and rerun only when a frozen constant is revisited.

#include <cstdio>

#include "brute_force.hpp"

int main() {
    const double z = 1.959963984540054;
    for (double ratio : {0.25, 0.5, 1.0, 1.7, 2.8}) {
        const auto e = oracle::fixed_effect(ratio, 1.0, z, 10'000'000, 20240601);
        std::printf("fixed z=%.2f power=%.6f(%.6f) type_s=%.8f(%.8f) exag=%.6f(%.6f)\n", ratio, e.power,
                    e.power_se, e.type_s, e.type_s_se, e.exaggeration, e.exaggeration_se);
    }

    // 0.5 * point_mass(0) + 0.5 * normal(0.1, 0.1), se = 0.04
    {
        const auto e = oracle::simulate(
            [](oracle::BoxMuller& r) { return r.uniform() < 0.5 ? 0.0 : 0.1 + 0.1 * r.normal(); }, 0.05, 0.04, z,
            10'000'000, 777);
        std::printf("null_half se=0.04 power=%.6f(%.6f) type_s=%.6f(%.6f) exag=%.6f(%.6f)\n", e.power, e.power_se,
                    e.type_s, e.type_s_se, e.exaggeration, e.exaggeration_se);
    }

    // Red-clothing style: 0.8 null, 0.1 normal(0.05, 0.05), 0.1 normal(-0.03, 0.05); se = log(3) / 2.
    {
        const double se = 0.5493061443340549;
        const double mean = 0.1 * 0.05 + 0.1 * -0.03;
        const auto e = oracle::simulate(
            [](oracle::BoxMuller& r) {
                const double u = r.uniform();
                if (u < 0.8) return 0.0;
                if (u < 0.9) return 0.05 + 0.05 * r.normal();
                return -0.03 + 0.05 * r.normal();
            },
            mean, se, z, 1'000'000, 4242);
        std::printf("red_clothing mean=%.6f power=%.6f(%.6f) type_s=%.6f(%.6f) exag=%.6f(%.6f)\n", mean, e.power,
                    e.power_se, e.type_s, e.type_s_se, e.exaggeration, e.exaggeration_se);
    }
    return 0;
}
