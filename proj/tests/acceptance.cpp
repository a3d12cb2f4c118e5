// Acceptance suite: one line per criterion, every threshold pinned here.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "ringveil/bench.hpp"
#include "ringveil/netsim.hpp"
#include "ringveil/observer.hpp"
#include "ringveil/schedule.hpp"
#include "ringveil/timelock.hpp"
#include "ringveil/token.hpp"

using namespace ringveil;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %-26s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

Command dummy_command() { return Command{"D1", SwitchState::on, 0}; }

// --- 1. Puzzle oracle equivalence -----------------------------------------
// 200 random puzzles at 64-bit primes, t_hat <= 1e4: the solver's modular
// value equals the totient shortcut exactly, in under 10 seconds total.
void puzzle_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(101);
    bool all_equal = true;
    for (int i = 0; i < 200 && all_equal; ++i) {
        const auto params = timelock::param_gen(128, rng.next_u64());
        const std::uint64_t t_hat = rng.below(10'001);
        const Bigint key = random_below(rng, params.n);
        const auto puzzle =
            timelock::puzzle_gen(params, t_hat, dummy_command(), key, timelock::no_deadline, rng);
        const auto receipt = timelock::solve(puzzle);
        Bigint solved_base = (puzzle.e_k - receipt.key) % puzzle.n;
        if (solved_base < 0) solved_base += puzzle.n;
        all_equal = solved_base == timelock::fast_eval(params, t_hat) && receipt.key == key;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report("puzzle-oracle-equivalence", all_equal && secs < 10.0,
           fmt("200 puzzles exact, %.2fs (< 10s)", secs));
}

// --- 2. Sequential-cost exactness ------------------------------------------
// The instrumented squaring count equals t_hat for every solve, and
// doubling t_hat exactly doubles the count.
void sequential_cost_exactness() {
    Rng rng(102);
    const auto params = timelock::param_gen(128, 555);
    bool ok = true;
    for (const std::uint64_t t_hat : {0ull, 1ull, 17ull, 256ull, 4999ull}) {
        const auto once = timelock::solve(
            timelock::puzzle_gen(params, t_hat, dummy_command(), 1, timelock::no_deadline, rng));
        const auto twice = timelock::solve(
            timelock::puzzle_gen(params, 2 * t_hat, dummy_command(), 1, timelock::no_deadline, rng));
        ok = ok && once.squarings_performed == t_hat && twice.squarings_performed == 2 * t_hat;
    }
    report("sequential-cost-exactness", ok, "count == t_hat; 2*t_hat doubles the count");
}

// --- 3. Linear-extension soundness ------------------------------------------
// 100 random chain-posets with <= 6 devices: chain()'s output is in the
// brute-force extension set and count_linear_extensions matches factorial
// enumeration.
void linear_extension_soundness() {
    Rng rng(103);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        schedule::Schedule s;
        const std::size_t n = 1 + rng.below(6);
        std::size_t made = 0;
        int name = 0;
        while (made < n) {
            const std::size_t len = 1 + rng.below(std::min<std::size_t>(3, n - made));
            std::vector<Command> chain;
            std::uint64_t delay = rng.below(100);
            for (std::size_t i = 0; i < len; ++i) {
                chain.push_back(Command{"D" + std::to_string(++name), SwitchState::on, delay});
                delay += 1 + rng.below(100);
            }
            s.chains.push_back(std::move(chain));
            made += len;
        }

        // brute-force enumeration, independent of chain_order
        std::vector<std::string> ids = schedule::devices_of(s);
        std::sort(ids.begin(), ids.end());
        std::vector<std::vector<std::string>> extensions;
        do {
            std::map<std::string, std::size_t> pos;
            for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
            bool valid = true;
            for (const auto& chain : s.chains)
                for (std::size_t i = 0; valid && i + 1 < chain.size(); ++i)
                    valid = pos[chain[i].device_id] < pos[chain[i + 1].device_id];
            if (valid) extensions.push_back(ids);
        } while (std::next_permutation(ids.begin(), ids.end()));

        const auto order = schedule::chain_order(s);
        ok = std::find(extensions.begin(), extensions.end(), order) != extensions.end() &&
             schedule::count_linear_extensions(s) == extensions.size();
    }
    schedule::Schedule two_pairs;
    two_pairs.chains = {{Command{"D1", {}, 0}, Command{"D2", {}, 1}},
                        {Command{"D3", {}, 0}, Command{"D4", {}, 1}}};
    ok = ok && schedule::count_linear_extensions(two_pairs) == 6;
    report("linear-extension-soundness", ok, "100 posets in oracle set; two 2-chains -> 6");
}

// --- 4. Constant token size --------------------------------------------------
// 1000 rounds mixing 0-4 commands and 0-2 uploads per round: the sealed
// token length column has zero variance.
void constant_token_size() {
    netsim::SimConfig cfg;
    cfg.seed = 104;
    cfg.latency.alpha_us = 200;
    netsim::RingConfig ring =
        netsim::build_ring("r1", bench::device_names(6), netsim::Topology::ring, 4096, 0);
    ring.token_period_us = 10'000;
    cfg.rings.push_back(std::move(ring));
    cfg.duration_us = 10'000 * 1000; // 1000 fixed-period rounds
    cfg.workload.enabled = true;
    cfg.workload.max_commands_per_round = 4;
    cfg.workload.max_uploads_per_round = 2;
    cfg.workload.max_upload_bytes = 512;
    const auto result = netsim::run(cfg);

    std::set<std::uint32_t> lengths;
    for (const auto& r : result.rounds) lengths.insert(r.sealed_length);
    const bool ok = result.rounds.size() >= 1000 && lengths.size() == 1;
    report("constant-token-size", ok,
           fmt("%zu rounds, %zu distinct sealed lengths (want 1)", result.rounds.size(),
               lengths.size()));
}

// --- 5. Decoupling test ------------------------------------------------------
// The indistinguishability test passes on ring traces for the sample
// workload (a Set, a Set, a Read, a Read at 10-second spacing) and fails
// on the star baseline for the same workload.
void decoupling() {
    const auto result = bench::decouple_experiment(105);
    const bool ok = result.ring_pass() && result.star_leaks();
    report("decoupling", ok,
           fmt("ring pass=%d (ks=%.3f), star leak detected=%d", int(result.ring_pass()),
               result.ring_report.interarrival_ks_stat, int(result.star_leaks())));
}

// --- 6. XOR upload round-trip -------------------------------------------------
// 100 random payloads (1 B - 1 KB) survive overwrite/recover exactly, and
// the data-field byte histogram passes chi-square uniformity at p > 0.01
// over 1e6 bytes.
void xor_upload_roundtrip() {
    Rng rng(106);
    const std::uint32_t sub_size = 4096;
    const token::TokenConfig cfg{8, sub_size, 2};
    const token::SubField sf{"D1", 0, sub_size};

    bool exact = true;
    for (int i = 0; i < 100 && exact; ++i) {
        token::PadLedger ledger;
        token::Token t = token::make_token(cfg, static_cast<std::uint64_t>(i), 2, rng);
        t = token::fill_data_field(std::move(t), token::DataLayout{{sf}, {}}, 1, ledger, rng);
        const Bytes payload = rng.bytes(1 + rng.below(1024));
        t = token::overwrite_data(std::move(t), sf, payload, rng);
        exact = token::recover_data(ledger, t, 1, 0, sf) == payload;
    }

    std::vector<std::uint64_t> hist(256, 0);
    std::uint64_t total = 0;
    while (total < 1'000'000) {
        token::PadLedger ledger;
        token::Token t = token::make_token(cfg, total, 2, rng);
        t = token::fill_data_field(std::move(t), token::DataLayout{{sf}, {}}, 1, ledger, rng);
        t = token::overwrite_data(std::move(t), sf, Bytes(2048, 0x55), rng); // regular payload
        for (const std::uint8_t b : t.data_field) ++hist[b];
        total += t.data_field.size();
    }
    double chi2 = 0;
    const double expected = static_cast<double>(total) / 256.0;
    for (const auto count : hist) {
        const double diff = static_cast<double>(count) - expected;
        chi2 += diff * diff / expected;
    }
    const boost::math::chi_squared dist(255);
    const double p = boost::math::cdf(boost::math::complement(dist, chi2));
    const bool ok = exact && p > 0.01;
    report("xor-upload-roundtrip", ok, fmt("100 exact round-trips; chi2=%.1f p=%.3f (> 0.01)", chi2, p));
}

// --- 7. Latency scaling -------------------------------------------------------
// One-ring sweep N in [3, 75]: affine mean latency with zero residual in
// deterministic mode, and R^2 > 0.95 with a jittered latency model.
void latency_scaling() {
    const std::vector<std::uint32_t> ns{3, 15, 27, 39, 51, 63, 75};
    netsim::LatencyModel det;
    det.alpha_us = 3300;
    const auto det_points = bench::latency_sweep(ns, 10, det, 107);
    std::vector<double> xs, ys;
    for (const auto& p : det_points) {
        xs.push_back(p.devices);
        ys.push_back(p.mean_latency_us);
    }
    const auto det_fit = bench::fit_affine(xs, ys);

    netsim::LatencyModel jit = det;
    jit.jitter_us = 500;
    const auto jit_points = bench::latency_sweep(ns, 20, jit, 108);
    std::vector<double> jys;
    for (const auto& p : jit_points) jys.push_back(p.mean_latency_us);
    const auto jit_fit = bench::fit_affine(xs, jys);

    const bool ok = det_fit.max_abs_residual < 1e-6 && jit_fit.r_squared > 0.95;
    report("latency-scaling", ok,
           fmt("deterministic residual=%.2g us (=0), jittered R^2=%.4f (> 0.95)",
               det_fit.max_abs_residual, jit_fit.r_squared));
}

// --- 8. Token length scaling ---------------------------------------------------
// Sweep N in {3, 27, 51, 63, 75}: sealed token lengths strictly increase
// and fit an affine trend with R^2 > 0.999.
void token_length_scaling() {
    const std::vector<std::uint32_t> ns{3, 27, 51, 63, 75};
    const auto points = bench::token_length_sweep(ns, 109);
    bool increasing = true;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < points.size(); ++i) {
        xs.push_back(points[i].devices);
        ys.push_back(points[i].sealed_length);
        if (i > 0) increasing = increasing && points[i].sealed_length > points[i - 1].sealed_length;
    }
    const auto fit = bench::fit_affine(xs, ys);
    const bool ok = increasing && fit.r_squared > 0.999;
    report("token-length-scaling", ok,
           fmt("lengths %u..%u strictly increasing, R^2=%.6f (> 0.999)", points.front().sealed_length,
               points.back().sealed_length, fit.r_squared));
}

// --- 9. Parallel-ring speedup ---------------------------------------------------
// 75 devices split into 3 rings: per-ring latency within 10% of one third
// of the single-ring latency.
void parallel_ring_speedup() {
    netsim::LatencyModel latency;
    latency.alpha_us = 3300;
    const auto points = bench::parallel_rings_sweep(75, {1, 3}, 10, latency, 110);
    const double one = points[0].per_ring_mean_latency_us;
    const double three = points[1].per_ring_mean_latency_us;
    const double deviation = std::abs(three / (one / 3.0) - 1.0);
    const bool ok = deviation <= 0.10;
    report("parallel-ring-speedup", ok,
           fmt("1 ring %.1f ms -> 3 rings %.1f ms; |3x/1x - 1/3| = %.1f%% (<= 10%%)", one / 1000.0,
               three / 1000.0, deviation * 100));
}

// --- 10. Skew separation ----------------------------------------------------------
// 90/10 non-skew/skew at N=40: the non-skew ring's sealed token length and
// latency are both below 5% of the mixed single-ring values.
void skew_separation() {
    const auto cmp = bench::skew_experiment(40, 0.10, 5, 111);
    const double len_ratio =
        static_cast<double>(cmp.nonskew_sealed_length) / static_cast<double>(cmp.mixed_sealed_length);
    const double lat_ratio = cmp.nonskew_mean_latency_us / cmp.mixed_mean_latency_us;
    const bool ok = len_ratio < 0.05 && lat_ratio < 0.05;
    report("skew-separation", ok,
           fmt("len %.2f%%, latency %.2f%% of mixed (both < 5%%)", len_ratio * 100, lat_ratio * 100));
}

// --- 11. Delay verification end-to-end ---------------------------------------------
// 100 randomized honest runs all verify; 100 runs with one injected order
// violation or forged solve value are all rejected.
void delay_verification() {
    int honest_ok = 0, tampered_rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(112 * 1000 + trial);
        netsim::SimConfig cfg;
        cfg.seed = rng.next_u64();
        cfg.latency.alpha_us = 100 + rng.below(2000);
        const std::uint32_t n = 4 + static_cast<std::uint32_t>(rng.below(3));
        netsim::RingConfig ring =
            netsim::build_ring("r1", bench::device_names(n), netsim::Topology::ring, 8192, 0);
        ring.token_period_us = 60'000'000;
        cfg.rings.push_back(std::move(ring));
        cfg.duration_us = 1;

        // one comparable pair plus random singletons
        schedule::Schedule sched;
        const std::uint64_t base = 100'000 + rng.below(400'000);
        sched.chains.push_back({Command{bench::device_name(0), SwitchState::on, base},
                                Command{bench::device_name(1), SwitchState::off,
                                        base + 50'000 + rng.below(200'000)}});
        for (std::uint32_t d = 2; d < n; ++d)
            if (rng.below(2))
                sched.chains.push_back(
                    {Command{bench::device_name(d), SwitchState::on, rng.below(300'000)}});
        cfg.schedules.push_back(netsim::ScheduleDispatch{"r1", sched});

        const auto result = netsim::run(cfg);
        if (netsim::verify_run(result.owner_params, sched, result.executions)) ++honest_ok;

        auto forged = result.executions;
        if (trial % 2 == 0) {
            // order violation: the second device of the pair claims an
            // earlier actuation than the first
            for (auto& e : forged)
                if (e.device_id == bench::device_name(1)) e.t_com_us = 0;
        } else {
            for (auto& e : forged)
                if (e.device_id == bench::device_name(0)) e.solve_value_hex = "deadbeef";
        }
        if (!netsim::verify_run(result.owner_params, sched, forged)) ++tampered_rejected;
    }
    const bool ok = honest_ok == 100 && tampered_rejected == 100;
    report("delay-verification", ok,
           fmt("honest accepted %d/100, tampered rejected %d/100", honest_ok, tampered_rejected));
}

// --- 12. Record-attack bound ----------------------------------------------------------
// The empirical identification rate stays within 3 sigma of 1/l for
// l in {2, 4, 8} over 1000 trials each.
void record_attack_bound() {
    bool ok = true;
    std::string detail;
    for (const std::uint32_t l : {2u, 4u, 8u}) {
        const std::uint32_t trials = 1000;
        const double rate = observer::record_attack_game(l, trials, 113 + l);
        const double p = 1.0 / l;
        const double sigma = std::sqrt(p * (1 - p) / trials);
        const bool in_band = std::abs(rate - p) <= 3 * sigma;
        ok = ok && in_band;
        detail += fmt("l=%u: %.3f (1/l=%.3f) ", l, rate, p);
    }
    report("record-attack-bound", ok, detail + "all within 3 sigma");
}

// --- 13. Churn invisibility --------------------------------------------------------------
// Flower mode with a 10-round absence: the per-round (sender, receiver,
// size) multisets are identical before, during and after.
void churn_invisibility() {
    netsim::SimConfig cfg;
    cfg.seed = 114;
    cfg.latency.alpha_us = 1000;
    netsim::RingConfig flower =
        netsim::build_ring("f1", {"D1", "D2", "D3", "D4"}, netsim::Topology::flower, 512, 0);
    flower.token_period_us = 1'000'000;
    cfg.rings.push_back(std::move(flower));
    cfg.duration_us = 30'000'000;
    cfg.churn.push_back(netsim::ChurnEvent{"D3", 5'500'000, true});
    cfg.churn.push_back(netsim::ChurnEvent{"D3", 15'500'000, false}); // back after 10 rounds

    const auto result = netsim::run(cfg);
    using Item = std::tuple<std::string, std::string, std::uint32_t>;
    std::vector<std::multiset<Item>> per_round;
    for (const auto& round : result.rounds) {
        std::multiset<Item> items;
        for (const auto& e : result.events)
            if (e.time_us >= round.t_h_beg_us && e.time_us <= round.t_h_end_us)
                items.insert({e.sender, e.receiver, e.length});
        per_round.push_back(std::move(items));
    }
    bool identical = !per_round.empty();
    for (std::size_t i = 1; i < per_round.size(); ++i)
        identical = identical && per_round[i] == per_round[0];
    const bool ok = identical && !result.stalled && result.rounds.size() >= 25;
    report("churn-invisibility", ok,
           fmt("%zu rounds, multisets identical through a 10-round absence", result.rounds.size()));
}

} // namespace

int main() {
    puzzle_oracle_equivalence();
    sequential_cost_exactness();
    linear_extension_soundness();
    constant_token_size();
    decoupling();
    xor_upload_roundtrip();
    latency_scaling();
    token_length_scaling();
    parallel_ring_speedup();
    skew_separation();
    delay_verification();
    record_attack_bound();
    churn_invisibility();

    std::printf("%d of 13 criteria passed\n", 13 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
