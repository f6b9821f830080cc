#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "lupi/core.hpp"

namespace lupi {

// xoshiro256++ with splitmix64 seeding. We carry our own generator because
// std::uniform_*_distribution is implementation-defined and the extraction /
// training contracts require byte-identical reruns.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, bound), bias-free via rejection.
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw ArgumentError("Rng::below: bound must be positive");
        const uint64_t threshold = -bound % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    int64_t range(int64_t lo, int64_t hi_inclusive) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one spare kept so consecutive calls stay cheap.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Independent sub-stream derived from this generator's seed material and a
    // label. Children with distinct labels never collide in practice and do
    // not advance the parent.
    Rng child(std::string_view label) const {
        uint64_t mixed = fnv1a64(label);
        for (uint64_t word : state_) {
            mixed ^= word;
            mixed *= 0x100000001b3ull;
        }
        return Rng(mixed);
    }

    Rng child_index(std::string_view label, uint64_t index) const {
        Rng c = child(label);
        uint64_t x = c.state_[0] ^ (index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
        for (auto& word : c.state_) word = splitmix64(x);
        c.has_spare_ = false;
        return c;
    }

    // Stable scalar seed for a labelled sub-computation.
    static uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t index = 0) {
        uint64_t h = fnv1a64(label);
        uint64_t x = h ^ (seed * 0x9e3779b97f4a7c15ull) ^ (index + 0x2545f4914f6cdd1dull);
        return splitmix64(x);
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lupi
