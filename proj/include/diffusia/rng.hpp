#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace diffusia {

// splitmix64: tiny, portable, bit-exact across platforms. All randomness in
// the project flows through this so that artifacts are byte-identical per seed.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) {
        return next_u64() % n;
    }

    // standard normal via Box-Muller (always consumes two draws)
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // derive an independent stream; used to isolate RNG per component
    Rng stream(uint64_t salt) const {
        uint64_t z = state ^ (salt * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL);
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
        return Rng(z ^ (z >> 33));
    }
};

// FNV-1a, used for content hashes in manifests and model headers.
inline uint64_t fnv1a(std::string_view data, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace diffusia
