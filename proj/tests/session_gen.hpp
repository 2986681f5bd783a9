#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "effectsize/elicitation.hpp"

namespace testing_support {

using namespace effectsize;

// Random but valid session, stopped at a random stage.
inline ElicitationSession random_session(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-5.0, 5.0), p(0.0, 1.0);
    std::uniform_int_distribution<int> stop(0, 6), len(0, 12), ch(0, 5);
    auto text = [&] {
        static const char* pieces[] = {"a", "Z", " ", "\xc3\xa9", "\"", "\\n"};
        std::string s;
        for (int i = 0, n = len(rng) + 1; i < n; ++i) s += pieces[ch(rng)];
        return s;
    };
    std::uniform_int_distribution<std::int64_t> ts(0, 4'000'000'000'000LL);
    auto s = new_session(generate_session_id());
    const int last = stop(rng);
    if (last >= 1) s = advance(s, StudyContext{text(), 1 + static_cast<long long>(p(rng) * 1e6), text(), text(), text(), text(), text()}, ts(rng));
    if (last >= 2) s = advance(s, AtePre{u(rng)}, ts(rng));
    double lo = 0, hi = 0;
    if (last >= 3) {
        lo = u(rng);
        hi = lo + 0.01 + p(rng) * 5.0;
        Extremes e{{ExtremeKind::largest, hi, text(), p(rng), p(rng)}, {ExtremeKind::smallest, lo, text(), p(rng), p(rng)}};
        s = advance(s, e, ts(rng));
    }
    if (last >= 4) {
        if (p(rng) < 0.5) {
            const double share = p(rng);
            s = advance(s, MidpointSplit{share, 1.0 - share}, ts(rng));
        } else {
            std::uniform_int_distribution<int> k_dist(2, 7);
            const int k = k_dist(rng);
            BallsAllocation b;
            for (int i = 0; i <= k; ++i) b.bin_edges.push_back(lo + (hi - lo) * i / k);
            b.total_balls = 20;
            long long left = 20;
            for (int i = 0; i < k; ++i) {
                std::uniform_int_distribution<long long> take(0, left);
                const long long n = i + 1 == k ? left : take(rng);
                b.balls.push_back(n);
                left -= n;
            }
            s = advance(s, b, ts(rng));
        }
    }
    if (last >= 5) s = advance(s, NullShare{p(rng)}, ts(rng));
    if (last >= 6) s = advance(s, Reflection{text()}, ts(rng));
    return s;
}

} // namespace testing_support
