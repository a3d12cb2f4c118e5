#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ringveil/timelock.hpp"

using namespace ringveil;
using namespace ringveil::timelock;

namespace {

// Independent oracles, kept free of the implementation paths they check.

std::uint64_t euclid_gcd(std::uint64_t a, std::uint64_t b) {
    while (b != 0) {
        const std::uint64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

bool trial_division_prime(std::uint64_t v) {
    if (v < 2) return false;
    for (std::uint64_t d = 2; d * d <= v; ++d)
        if (v % d == 0) return false;
    return true;
}

// Brute-force sequential squaring: a -> a^2 -> a^4 -> ... (t_hat steps).
Bigint squaring_oracle(const Bigint& a, const Bigint& n, std::uint64_t t_hat) {
    Bigint x = a % n;
    for (std::uint64_t i = 0; i < t_hat; ++i) x = (x * x) % n;
    return x;
}

PuzzleParams forced_params_5_11() {
    PuzzleParams p;
    p.p = 5;
    p.q = 11;
    p.n = 55;
    p.a = 2;
    p.phi_n = 40;
    return p;
}

Command sample_command() { return Command{"D1", SwitchState::on, 1500}; }

} // namespace

TEST_CASE("param_gen definition on forced primes") {
    const PuzzleParams p = forced_params_5_11();
    CHECK(p.n == 55);
    CHECK(p.phi_n == 40);
}

TEST_CASE("param_gen is deterministic for a fixed seed") {
    const PuzzleParams a = param_gen(16, 42);
    const PuzzleParams b = param_gen(16, 42);
    CHECK(a.p == b.p);
    CHECK(a.q == b.q);
    CHECK(a.n == b.n);
    CHECK(a.a == b.a);
    CHECK(a.phi_n == b.phi_n);
    const PuzzleParams c = param_gen(16, 43);
    CHECK((c.p != a.p || c.q != a.q || c.a != a.a));
}

TEST_CASE("param_gen invariants against independent oracles") {
    for (std::uint64_t seed : {42u, 7u, 99u, 1234u}) {
        const PuzzleParams p = param_gen(16, seed);
        const std::uint64_t pu = p.p.get_ui(), qu = p.q.get_ui();
        CHECK(trial_division_prime(pu));
        CHECK(trial_division_prime(qu));
        CHECK(pu != qu);
        CHECK(p.n == p.p * p.q);
        CHECK(p.phi_n == (p.p - 1) * (p.q - 1));
        CHECK(euclid_gcd(p.a.get_ui(), p.n.get_ui()) == 1);
        CHECK(p.a >= 2);
        CHECK(p.a < p.n);
    }
}

TEST_CASE("param_gen rejects tiny security levels") {
    CHECK_THROWS_AS(param_gen(8, 1), ParamError);
}

TEST_CASE("difficulty rounds half-up") {
    CHECK(difficulty(10000, 2.0) == 20000);
    CHECK(difficulty(10000, 0.0) == 0);
    CHECK(difficulty(7, 1.5) == 11); // 10.5 rounds up
    CHECK_THROWS_AS(difficulty(0, 1.0), DomainError);
    CHECK_THROWS_AS(difficulty(1, -1.0), DomainError);
    CHECK_THROWS_AS(difficulty(UINT64_MAX, 1e18), DomainError);
}

TEST_CASE("calibrate measures a positive squaring rate") {
    CHECK(calibrate(20000) > 0);
    CHECK_THROWS_AS(calibrate(999), DomainError);
}

TEST_CASE("puzzle_gen worked example on n=55") {
    const PuzzleParams p = forced_params_5_11();
    Rng rng(1);
    // 2^(2^3) mod 55 = 256 mod 55 = 36, so e_k = (7 + 36) mod 55 = 43
    const Puzzle puzzle = puzzle_gen(p, 3, sample_command(), 7, no_deadline, rng);
    CHECK(puzzle.e_k == 43);
    CHECK(squaring_oracle(p.a, p.n, 3) == 36);

    // zero squarings: a^(2^0) = a
    const Puzzle zero = puzzle_gen(p, 0, sample_command(), 0, no_deadline, rng);
    CHECK(zero.e_k == 2);

    CHECK_THROWS_AS(puzzle_gen(p, 3, sample_command(), 55, no_deadline, rng), DomainError);
    CHECK_THROWS_AS(puzzle_gen(p, 3, sample_command(), 100, no_deadline, rng), DomainError);
}

TEST_CASE("solve recovers key and command with exact squaring count") {
    const PuzzleParams p = forced_params_5_11();
    Rng rng(2);
    const Command cmd = sample_command();
    const Puzzle puzzle = puzzle_gen(p, 3, cmd, 7, no_deadline, rng);
    const SolveReceipt receipt = solve(puzzle);
    CHECK(receipt.key == 7);
    CHECK(receipt.command == cmd);
    CHECK(receipt.squarings_performed == 3);
}

TEST_CASE("solve with t_hat zero uses the base directly") {
    const PuzzleParams p = forced_params_5_11();
    Rng rng(3);
    const Puzzle puzzle = puzzle_gen(p, 0, sample_command(), 9, no_deadline, rng);
    // key = (e_k - a) mod n
    Bigint expect = (puzzle.e_k - puzzle.a) % puzzle.n;
    if (expect < 0) expect += puzzle.n;
    const SolveReceipt receipt = solve(puzzle);
    CHECK(receipt.key == expect);
    CHECK(receipt.key == 9);
    CHECK(receipt.squarings_performed == 0);
}

TEST_CASE("corrupting e_z trips the authentication check") {
    const PuzzleParams p = param_gen(64, 5);
    Rng rng(4);
    Puzzle puzzle = puzzle_gen(p, 10, sample_command(), 3, no_deadline, rng);
    puzzle.e_z[0] ^= 0x01;
    CHECK_THROWS_AS(solve(puzzle), TamperError);
}

TEST_CASE("solve round-trips random small puzzles") {
    const PuzzleParams p = param_gen(32, 77);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        Command cmd;
        cmd.device_id = "D" + std::to_string(i % 7);
        cmd.state = i % 2 ? SwitchState::on : SwitchState::off;
        cmd.exec_delay_us = rng.below(1 << 20);
        const std::uint64_t t_hat = rng.below(200);
        const Bigint key = random_below(rng, p.n);
        const SolveReceipt receipt = solve(puzzle_gen(p, t_hat, cmd, key, no_deadline, rng));
        REQUIRE(receipt.key == key);
        REQUIRE(receipt.command == cmd);
        REQUIRE(receipt.squarings_performed == t_hat);
    }
}

TEST_CASE("fast_eval equals the sequential oracle") {
    const PuzzleParams forced = forced_params_5_11();
    CHECK(fast_eval(forced, 3) == 36);
    CHECK(fast_eval(forced, 0) == forced.a % forced.n);

    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        const PuzzleParams p = param_gen(64, rng.next_u64());
        const std::uint64_t t_hat = rng.below(10'000);
        REQUIRE(fast_eval(p, t_hat) == squaring_oracle(p.a, p.n, t_hat));
    }
}

TEST_CASE("doubling t_hat doubles the instrumented work") {
    const PuzzleParams p = param_gen(64, 8);
    Rng rng(9);
    for (const std::uint64_t t_hat : {1ull, 10ull, 123ull, 999ull}) {
        const auto once = solve(puzzle_gen(p, t_hat, sample_command(), 1, no_deadline, rng));
        const auto twice = solve(puzzle_gen(p, 2 * t_hat, sample_command(), 1, no_deadline, rng));
        CHECK(once.squarings_performed == t_hat);
        CHECK(twice.squarings_performed == 2 * t_hat);
    }
}

TEST_CASE("check_validity honors the drift allowance") {
    CHECK(check_validity(1000, 1000, 0));
    CHECK_FALSE(check_validity(1000, 1001, 0));
    CHECK(check_validity(1000, 1004, 5));
    CHECK(check_validity(no_deadline, UINT64_MAX, 5)); // saturating
}

TEST_CASE("puzzle wire format golden bytes") {
    Puzzle puzzle;
    puzzle.n = 55;
    puzzle.a = 2;
    puzzle.t_hat = 3;
    puzzle.t_val_us = 1000;
    puzzle.e_k = 43;
    for (std::size_t i = 0; i < puzzle.nonce.size(); ++i)
        puzzle.nonce[i] = static_cast<std::uint8_t>(i);
    puzzle.e_z = {0xde, 0xad, 0xbe, 0xef};
    const std::string expected =
        "000137"                     // [2B n_len][n]
        "000102"                     // [2B a_len][a]
        "0000000000000003"           // t_hat
        "00000000000003e8"           // t_val
        "00012b"                     // [2B ek_len][e_k]
        "000102030405060708090a0b"   // nonce
        "00000004" "deadbeef";       // [4B ez_len][e_z]
    CHECK(to_hex(encode_puzzle(puzzle)) == expected);

    const Puzzle back = decode_puzzle(encode_puzzle(puzzle));
    CHECK(back.n == puzzle.n);
    CHECK(back.a == puzzle.a);
    CHECK(back.t_hat == puzzle.t_hat);
    CHECK(back.t_val_us == puzzle.t_val_us);
    CHECK(back.e_k == puzzle.e_k);
    CHECK(back.nonce == puzzle.nonce);
    CHECK(back.e_z == puzzle.e_z);
}

TEST_CASE("puzzle wire size depends only on modulus bits and e_z length") {
    const PuzzleParams p = param_gen(64, 21);
    Rng rng(22);
    const Command cmd = sample_command();
    const std::size_t len0 = encode_puzzle(puzzle_gen(p, 1, cmd, 0, no_deadline, rng)).size();
    for (int i = 0; i < 20; ++i) {
        const Bigint key = random_below(rng, p.n);
        const std::uint64_t t_hat = rng.below(100000);
        CHECK(encode_puzzle(puzzle_gen(p, t_hat, cmd, key, no_deadline, rng)).size() == len0);
    }
}

TEST_CASE("wire round-trip across random puzzles") {
    Rng rng(23);
    for (int i = 0; i < 30; ++i) {
        const PuzzleParams p = param_gen(64, rng.next_u64());
        Command cmd;
        cmd.device_id = "device-" + std::to_string(rng.below(1000));
        cmd.state = SwitchState::off;
        cmd.exec_delay_us = rng.next_u64() >> 20;
        const Puzzle puzzle =
            puzzle_gen(p, rng.below(1 << 20), cmd, random_below(rng, p.n), rng.next_u64(), rng);
        const Puzzle back = decode_puzzle(encode_puzzle(puzzle));
        REQUIRE(encode_puzzle(back) == encode_puzzle(puzzle));
        REQUIRE(solve(back).command == cmd);
    }
}

TEST_CASE("serialized puzzles never leak p, q or phi(n)") {
    Rng rng(24);
    for (int i = 0; i < 20; ++i) {
        const PuzzleParams p = param_gen(128, rng.next_u64());
        const Puzzle puzzle =
            puzzle_gen(p, rng.below(1000), sample_command(), random_below(rng, p.n), no_deadline, rng);
        const Bytes wire = encode_puzzle(puzzle);
        for (const Bigint& secret : {p.p, p.q, p.phi_n}) {
            const Bytes pattern = to_bytes_be(secret, byte_length(secret));
            const bool found =
                std::search(wire.begin(), wire.end(), pattern.begin(), pattern.end()) != wire.end();
            REQUIRE_FALSE(found);
        }
    }
}

TEST_CASE("truncated puzzle bytes are rejected") {
    const PuzzleParams p = forced_params_5_11();
    Rng rng(25);
    Bytes wire = encode_puzzle(puzzle_gen(p, 3, sample_command(), 7, no_deadline, rng));
    wire.pop_back();
    CHECK_THROWS_AS(decode_puzzle(wire), FramingError);
    wire.push_back(0);
    wire.push_back(0);
    CHECK_THROWS_AS(decode_puzzle(wire), FramingError); // trailing bytes
}
