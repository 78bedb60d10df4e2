// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace argcore {

// splitmix64 step; used to derive independent stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t t : tags) s = splitmix64(s ^ t);
    return s;
}

// Deterministic RNG. std::mt19937_64 is fully specified by the standard, and
// all value transformations below are hand-written, so sequences are identical
// across platforms and compilers (the std distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [lo, hi], inclusive; unbiased via rejection
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return lo + static_cast<std::int64_t>(v % span);
    }

    bool coin() { return (next_u64() & 1ULL) != 0; }

    // Box-Muller; consumes exactly two uniforms per call
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace argcore
