#pragma once

#include <cstdint>
#include <random>

#include "padis/tensor.hpp"

namespace padis {

// Deterministic stream of uniforms/normals. Box-Muller is hand-rolled so the
// draw sequence does not depend on the standard library implementation; each
// normal() consumes exactly two engine outputs.
struct RandomStream {
    std::mt19937_64 eng;

    explicit RandomStream(uint64_t seed) : eng(seed) {}

    // [0,1)
    double uniform() {
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }

    double normal() {
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // inclusive bounds, rejection sampling to avoid modulo bias
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x;
        do {
            x = eng();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    Image normal_image(int h, int w, int c, double stdev = 1.0) {
        Image z(h, w, c);
        for (double& x : z.v) x = stdev * normal();
        return z;
    }
};

// splitmix64-based mixing for deriving independent child seeds
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace padis
