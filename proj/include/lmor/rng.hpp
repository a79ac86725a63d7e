#pragma once

#include "lmor/types.hpp"

#include <cstdint>
#include <random>

namespace lmor {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent stream for (seed, stream id); results do not depend on scheduling order.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

inline Vec normal_vector(std::mt19937_64& rng, Index n)
{
    std::normal_distribution<double> d;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

inline Vec uniform_vector(std::mt19937_64& rng, Index n, double lo = -1, double hi = 1)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

}  // namespace lmor
