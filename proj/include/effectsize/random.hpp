#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace effectsize {

using Engine = std::mt19937_64;

// Draws are produced in fixed-size chunks, each with its own engine seeded
// from (seed, chunk index). Results therefore depend only on the seed and
// the draw count, never on how chunks are spread over threads.
inline constexpr std::size_t kChunkSize = std::size_t{1} << 16;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Engine chunk_engine(std::uint64_t seed, std::size_t chunk) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(static_cast<std::uint64_t>(chunk) + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
    return Engine(seq);
}

inline std::size_t chunk_count(std::size_t draws) { return (draws + kChunkSize - 1) / kChunkSize; }

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs `body(chunk_index, begin, end, engine)` for every chunk and returns
// the per-chunk results in chunk order. `Acc` must be default constructible.
template <typename Acc, typename Body>
std::vector<Acc> run_chunked(std::size_t draws, std::uint64_t seed, Body body,
                             unsigned threads = default_threads()) {
    const std::size_t chunks = chunk_count(draws);
    std::vector<Acc> out(chunks);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t c = first; c < chunks; c += stride) {
            Engine engine = chunk_engine(seed, c);
            const std::size_t begin = c * kChunkSize;
            const std::size_t end = std::min(draws, begin + kChunkSize);
            out[c] = body(c, begin, end, engine);
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(std::max(1u, threads), chunks);
    if (n_threads <= 1) {
        work(0, 1);
        return out;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
    pool.clear();
    return out;
}

} // namespace effectsize
