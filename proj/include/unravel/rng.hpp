// rng.hpp — Deterministic per-trajectory noise streams.  Stream i is derived
// from (master_seed, i) by counter-based mixing, so any trajectory can be
// regenerated in isolation and results never depend on scheduling order.

#pragma once

#include <cstdint>
#include <random>

namespace unravel {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(index * 0xda942042e4dd58b5ULL + 1));
}

class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(splitmix64(seed)),
                          static_cast<std::uint32_t>(splitmix64(seed) >> 32)};
        engine_.seed(seq);
    }

    double standard_normal() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace unravel
