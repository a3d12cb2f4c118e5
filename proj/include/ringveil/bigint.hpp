#ifndef RINGVEIL_BIGINT_HPP
#define RINGVEIL_BIGINT_HPP

#include <cstddef>
#include <cstdint>

#include <gmpxx.h>

#include "ringveil/bytes.hpp"
#include "ringveil/rng.hpp"

// GMP provides the multiple-precision arithmetic; encoding and sampling
// conventions live here so every module agrees on them.
namespace ringveil {

using Bigint = mpz_class;

inline std::size_t bit_length(const Bigint& v) {
    if (v == 0) return 0;
    return mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline std::size_t byte_length(const Bigint& v) {
    return (bit_length(v) + 7) / 8 == 0 ? 1 : (bit_length(v) + 7) / 8;
}

// Fixed-width big-endian encoding; the value must fit.
inline Bytes to_bytes_be(const Bigint& v, std::size_t width) {
    if (sgn(v) < 0) throw DomainError("cannot encode negative integer");
    if (byte_length(v) > width && v != 0)
        throw DomainError("integer does not fit requested width");
    Bytes out(width, 0);
    std::size_t count = 0;
    mpz_export(out.data() + (width - byte_length(v)), &count, 1, 1, 1, 0, v.get_mpz_t());
    return out;
}

inline Bigint from_bytes_be(ByteView data) {
    Bigint v;
    if (!data.empty()) mpz_import(v.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
    return v;
}

// Uniform integer with exactly `bits` bits (top bit set).
inline Bigint random_bits(Rng& rng, unsigned bits) {
    if (bits == 0) throw DomainError("random_bits: zero width");
    const std::size_t nbytes = (bits + 7) / 8;
    Bytes raw = rng.bytes(nbytes);
    const unsigned top = (bits - 1) % 8;
    raw[0] &= static_cast<std::uint8_t>((1u << (top + 1)) - 1);
    raw[0] |= static_cast<std::uint8_t>(1u << top);
    return from_bytes_be(raw);
}

// Uniform in [0, bound) by rejection on fixed-width byte blocks.
inline Bigint random_below(Rng& rng, const Bigint& bound) {
    if (bound <= 0) throw DomainError("random_below: bound must be positive");
    const std::size_t nbytes = byte_length(bound);
    const unsigned top_bits = (bit_length(bound) - 1) % 8;
    for (;;) {
        Bytes raw = rng.bytes(nbytes);
        raw[0] &= static_cast<std::uint8_t>((1u << (top_bits + 1)) - 1);
        Bigint v = from_bytes_be(raw);
        if (v < bound) return v;
    }
}

inline bool is_probable_prime(const Bigint& v) {
    return mpz_probab_prime_p(v.get_mpz_t(), 30) > 0;
}

inline Bigint next_prime(const Bigint& v) {
    Bigint p;
    mpz_nextprime(p.get_mpz_t(), v.get_mpz_t());
    return p;
}

inline Bigint gcd(const Bigint& a, const Bigint& b) {
    Bigint g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

inline Bigint powmod(const Bigint& base, const Bigint& exp, const Bigint& mod) {
    Bigint r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
    return r;
}

} // namespace ringveil

#endif
