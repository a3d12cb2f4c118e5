#ifndef RINGVEIL_RNG_HPP
#define RINGVEIL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "ringveil/bytes.hpp"

namespace ringveil {

// Seedable deterministic generator. All randomness in the library flows
// through an Rng so any run is reproducible from a single u64 seed.
// mt19937_64 output is fixed by the standard, so sequences are portable;
// std::uniform_int_distribution is not, hence the hand-rolled sampling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw DomainError("Rng::below: zero bound");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do { v = gen_(); } while (v >= limit);
        return v % bound;
    }

    // Uniform in [lo, hi] inclusive.
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
        if (lo > hi) throw DomainError("Rng::range: lo > hi");
        return lo + below(hi - lo + 1);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    void fill(std::uint8_t* p, std::size_t len) {
        std::size_t i = 0;
        while (i + 8 <= len) {
            std::uint64_t v = gen_();
            for (int s = 0; s < 8; ++s) p[i++] = static_cast<std::uint8_t>(v >> (8 * s));
        }
        if (i < len) {
            std::uint64_t v = gen_();
            while (i < len) { p[i++] = static_cast<std::uint8_t>(v); v >>= 8; }
        }
    }

    Bytes bytes(std::size_t len) {
        Bytes out(len);
        if (len) fill(out.data(), len);
        return out;
    }

    // Independent child stream. The tag decorrelates forks taken at the
    // same point in the parent sequence.
    Rng fork(std::string_view tag) {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a
        for (char c : tag) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 1099511628211ull;
        }
        return Rng(gen_() ^ h);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace ringveil

#endif
