#ifndef RINGVEIL_TIMELOCK_HPP
#define RINGVEIL_TIMELOCK_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>

#include "ringveil/bigint.hpp"
#include "ringveil/command.hpp"
#include "ringveil/crypto.hpp"
#include "ringveil/rng.hpp"

// RSA time-lock puzzles. A puzzle hides a symmetric key k as
// E_k = k + a^(2^t_hat) mod n; recovering it takes exactly t_hat sequential
// modular squarings unless the holder knows phi(n), in which case the
// exponent collapses to 2^t_hat mod phi(n) and the same value falls out in
// O(log) multiplications.
namespace ringveil::timelock {

struct PuzzleParams {
    Bigint p;      // secret
    Bigint q;      // secret
    Bigint n;      // public modulus p*q
    Bigint a;      // public base, gcd(a, n) = 1
    Bigint phi_n;  // secret (p-1)(q-1)
};

// Sentinel deadline for puzzles that never expire.
inline constexpr std::uint64_t no_deadline = std::numeric_limits<std::uint64_t>::max();

struct Puzzle {
    Bigint n;
    Bigint a;
    std::uint64_t t_hat = 0;   // squaring count
    Bytes e_z;                 // AEAD ciphertext||tag of the command
    crypto::Nonce nonce{};     // nonce for e_z
    Bigint e_k;                // masked key, in [0, n)
    std::uint64_t t_val_us = no_deadline;
};

struct SolveReceipt {
    Bigint key;
    Command command;
    std::uint64_t squarings_performed = 0;
};

// Generates two distinct primes of security_bits/2 bits each plus a base a
// coprime to n. Deterministic for a fixed seed.
inline PuzzleParams param_gen(unsigned security_bits, std::uint64_t seed) {
    if (security_bits < 16) throw ParamError("security_bits must be at least 16");
    Rng rng(seed);
    const unsigned prime_bits = (security_bits + 1) / 2;

    auto draw_prime = [&]() { return next_prime(random_bits(rng, prime_bits)); };

    PuzzleParams params;
    params.p = draw_prime();
    int attempts = 0;
    do {
        params.q = draw_prime();
        if (++attempts > 64) throw ParamError("failed to generate distinct primes");
    } while (params.q == params.p);
    params.n = params.p * params.q;
    params.phi_n = (params.p - 1) * (params.q - 1);

    attempts = 0;
    do {
        params.a = 2 + random_below(rng, params.n - 2);
        if (++attempts > 64) throw ParamError("failed to generate coprime base");
    } while (gcd(params.a, params.n) != 1);
    return params;
}

// Squarings per second of this host's solver, measured over a timed loop.
// Simulated devices read S from their config instead of calling this.
inline std::uint64_t calibrate(std::uint64_t probe_iterations) {
    if (probe_iterations < 1000) throw DomainError("calibration budget must be >= 1000 iterations");
    const PuzzleParams params = param_gen(128, 0xca11b7a7e);
    Bigint x = params.a;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < probe_iterations; ++i) {
        x = (x * x) % params.n;
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed <= 0.0) return probe_iterations; // sub-tick loop; report the budget itself
    const double rate = static_cast<double>(probe_iterations) / elapsed;
    return rate < 1.0 ? 1 : static_cast<std::uint64_t>(rate);
}

// t_hat = round(S * t'), half-up.
inline std::uint64_t difficulty(std::uint64_t squarings_per_sec, double t_prime_seconds) {
    if (squarings_per_sec == 0) throw DomainError("S must be positive");
    if (t_prime_seconds < 0) throw DomainError("target delay must be non-negative");
    const long double scaled =
        static_cast<long double>(squarings_per_sec) * static_cast<long double>(t_prime_seconds) + 0.5L;
    if (scaled >= 0x1p63L) throw DomainError("difficulty overflows iteration counter");
    return static_cast<std::uint64_t>(std::floor(scaled));
}

// Totient shortcut: a^(2^t_hat mod phi(n)) mod n. Owner/hub side only.
inline Bigint fast_eval(const PuzzleParams& params, std::uint64_t t_hat) {
    Bigint reduced;
    mpz_powm_ui(reduced.get_mpz_t(), Bigint(2).get_mpz_t(), t_hat, params.phi_n.get_mpz_t());
    return powmod(params.a, reduced, params.n);
}

// Key material for e_z: SHA-256 of the key encoded big-endian at the
// modulus width.
inline crypto::Key puzzle_kdf(const Bigint& key, const Bigint& n) {
    return crypto::sha256(to_bytes_be(key, byte_length(n)));
}

inline Puzzle puzzle_gen(const PuzzleParams& params, std::uint64_t t_hat, const Command& command,
                         const Bigint& key, std::uint64_t t_val_us, Rng& rng) {
    if (key < 0 || key >= params.n) throw DomainError("puzzle key must lie in [0, n)");
    Puzzle puzzle;
    puzzle.n = params.n;
    puzzle.a = params.a;
    puzzle.t_hat = t_hat;
    puzzle.t_val_us = t_val_us;
    puzzle.e_k = (key + fast_eval(params, t_hat)) % params.n;
    puzzle.nonce = crypto::make_nonce(rng);
    puzzle.e_z = crypto::aead_encrypt(puzzle_kdf(key, params.n), puzzle.nonce, encode_command(command));
    return puzzle;
}

// Solves by exactly t_hat sequential modular squarings; the receipt carries
// the instrumented count so callers can assert the cost was paid.
inline SolveReceipt solve(const Puzzle& puzzle) {
    Bigint x = puzzle.a % puzzle.n;
    std::uint64_t squarings = 0;
    for (std::uint64_t i = 0; i < puzzle.t_hat; ++i) {
        x = (x * x) % puzzle.n;
        ++squarings;
    }
    SolveReceipt receipt;
    receipt.squarings_performed = squarings;
    receipt.key = (puzzle.e_k - x) % puzzle.n;
    if (receipt.key < 0) receipt.key += puzzle.n;
    Bytes plain;
    try {
        plain = crypto::aead_decrypt(puzzle_kdf(receipt.key, puzzle.n), puzzle.nonce, puzzle.e_z);
    } catch (const TamperError&) {
        throw TamperError("puzzle solution does not authenticate: puzzle was tampered with");
    }
    try {
        receipt.command = decode_command(plain);
    } catch (const FramingError&) {
        throw TamperError("puzzle payload malformed after authentication");
    }
    return receipt;
}

// Exposes only the modular value, for verification paths that need the
// sequential route without a command payload.
inline Bigint solve_value(const Bigint& a, const Bigint& n, std::uint64_t t_hat) {
    Bigint x = a % n;
    for (std::uint64_t i = 0; i < t_hat; ++i) x = (x * x) % n;
    return x;
}

// True iff t_cur <= t_val + t_diff.
inline bool check_validity(std::uint64_t t_val_us, std::uint64_t t_cur_us, std::uint64_t t_diff_us) {
    const std::uint64_t slack = (t_val_us > no_deadline - t_diff_us) ? no_deadline : t_val_us + t_diff_us;
    return t_cur_us <= slack;
}

// Wire form (big-endian, length-prefixed):
// [2B n_len][n][2B a_len][a][8B t_hat][8B t_val][2B ek_len][e_k][12B nonce][4B ez_len][e_z]
// a and e_k are padded to the modulus width so the size depends only on
// |n| bits and |e_z| bytes; p, q and phi(n) never appear.
inline Bytes encode_puzzle(const Puzzle& puzzle) {
    const std::size_t width = byte_length(puzzle.n);
    if (width > 0xffff) throw DomainError("modulus too wide for wire format");
    Bytes out;
    put_u16(out, static_cast<std::uint16_t>(width));
    Bytes n_bytes = to_bytes_be(puzzle.n, width);
    out.insert(out.end(), n_bytes.begin(), n_bytes.end());
    put_u16(out, static_cast<std::uint16_t>(width));
    Bytes a_bytes = to_bytes_be(puzzle.a, width);
    out.insert(out.end(), a_bytes.begin(), a_bytes.end());
    put_u64(out, puzzle.t_hat);
    put_u64(out, puzzle.t_val_us);
    put_u16(out, static_cast<std::uint16_t>(width));
    Bytes ek_bytes = to_bytes_be(puzzle.e_k, width);
    out.insert(out.end(), ek_bytes.begin(), ek_bytes.end());
    out.insert(out.end(), puzzle.nonce.begin(), puzzle.nonce.end());
    if (puzzle.e_z.size() > 0xffffffff) throw DomainError("e_z too long for wire format");
    put_u32(out, static_cast<std::uint32_t>(puzzle.e_z.size()));
    out.insert(out.end(), puzzle.e_z.begin(), puzzle.e_z.end());
    return out;
}

inline Puzzle decode_puzzle(ByteView data) {
    ByteReader r(data);
    Puzzle puzzle;
    puzzle.n = from_bytes_be(r.raw(r.u16()));
    puzzle.a = from_bytes_be(r.raw(r.u16()));
    puzzle.t_hat = r.u64();
    puzzle.t_val_us = r.u64();
    puzzle.e_k = from_bytes_be(r.raw(r.u16()));
    ByteView nonce = r.raw(crypto::nonce_bytes);
    std::copy(nonce.begin(), nonce.end(), puzzle.nonce.begin());
    puzzle.e_z = r.bytes(r.u32());
    if (!r.done()) throw FramingError("trailing bytes after puzzle");
    if (puzzle.n == 0) throw FramingError("puzzle modulus is zero");
    return puzzle;
}

} // namespace ringveil::timelock

#endif
