#ifndef RINGVEIL_OBSERVER_HPP
#define RINGVEIL_OBSERVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringveil/rng.hpp"
#include "ringveil/schedule.hpp"
#include "ringveil/timelock.hpp"
#include "ringveil/trace.hpp"

// The adversary harness. The passive observer works on ChannelEvent
// metadata alone; it never touches keys, tokens, or plaintext. The attack
// games additionally play the challenger role, handing the adversary
// exactly the bytes the games allow it to see.
namespace ringveil::observer {

// Command/data sightings per device, as the eavesdropper collects them.
struct Sighting {
    std::string device_id;
    std::uint64_t time_us = 0;

    bool operator==(const Sighting&) const = default;
};

struct AdversarialView {
    std::vector<Sighting> in_c; // hub -> device transmissions
    std::vector<Sighting> op_d; // device -> hub transmissions
};

inline AdversarialView extract_view(const std::vector<ChannelEvent>& trace,
                                    const std::string& hub = "hub") {
    AdversarialView view;
    for (const auto& e : trace) {
        if (e.sender == hub) view.in_c.push_back(Sighting{e.receiver, e.time_us});
        else if (e.receiver == hub) view.op_d.push_back(Sighting{e.sender, e.time_us});
        else view.in_c.push_back(Sighting{e.receiver, e.time_us}); // device-to-device delivery
    }
    return view;
}

// ---- baseline without the ring ----

enum class StarCommandKind { set, read };

struct StarCommand {
    std::string device_id;
    StarCommandKind kind = StarCommandKind::set;
    std::uint64_t at_us = 0;
    std::uint32_t response_bytes = 512;
};

struct StarOptions {
    std::uint64_t hop_latency_us = 1000;
    std::uint64_t device_turnaround_us = 2000;
    std::uint32_t request_bytes = 256;
};

// Hub talks to each device directly: every command is a visible request
// and, for reads, a visible per-device response. This is the traffic shape
// the ring exists to remove.
inline std::vector<ChannelEvent> baseline_star_run(const std::vector<StarCommand>& commands,
                                                   const StarOptions& opt = {}) {
    std::vector<ChannelEvent> events;
    for (const auto& cmd : commands) {
        events.push_back(ChannelEvent{cmd.at_us, "hub", cmd.device_id, opt.request_bytes});
        if (cmd.kind == StarCommandKind::read) {
            const std::uint64_t reply = cmd.at_us + opt.hop_latency_us + opt.device_turnaround_us;
            events.push_back(ChannelEvent{reply, cmd.device_id, "hub", cmd.response_bytes});
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ChannelEvent& a, const ChannelEvent& b) { return a.time_us < b.time_us; });
    return events;
}

// ---- indistinguishability ----

struct IndistinguishabilityReport {
    bool count_per_link_equal = false;
    bool length_multiset_equal = false;
    double interarrival_ks_stat = 0.0;
    double ks_threshold = 0.1;

    bool pass() const {
        return count_per_link_equal && length_multiset_equal && interarrival_ks_stat < ks_threshold;
    }
};

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|. Ties advance
// both sides before the CDFs are compared.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return 1.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && j < b.size()) v = std::min(a[i], b[j]);
        else v = i < a.size() ? a[i] : b[j];
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

inline std::vector<double> interarrival_times(const std::vector<ChannelEvent>& trace) {
    std::vector<std::uint64_t> times;
    times.reserve(trace.size());
    for (const auto& e : trace) times.push_back(e.time_us);
    std::sort(times.begin(), times.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < times.size(); ++i)
        gaps.push_back(static_cast<double>(times[i] - times[i - 1]));
    return gaps;
}

// Compares what the eavesdropper can tally: events per directed link, the
// multiset of transmission lengths, and the inter-arrival distribution.
// The protocol passes only if the first two are exactly equal and the KS
// statistic stays under the threshold.
inline IndistinguishabilityReport indistinguishability_test(
        const std::vector<ChannelEvent>& trace_a, const std::vector<ChannelEvent>& trace_b,
        double ks_threshold = 0.1,
        std::optional<std::uint64_t> rounds_a = std::nullopt,
        std::optional<std::uint64_t> rounds_b = std::nullopt) {
    if (rounds_a && rounds_b && *rounds_a != *rounds_b)
        throw ComparisonError("traces cover different round counts: " + std::to_string(*rounds_a) +
                              " vs " + std::to_string(*rounds_b));
    IndistinguishabilityReport report;
    report.ks_threshold = ks_threshold;

    std::map<std::pair<std::string, std::string>, std::size_t> links_a, links_b;
    for (const auto& e : trace_a) links_a[{e.sender, e.receiver}]++;
    for (const auto& e : trace_b) links_b[{e.sender, e.receiver}]++;
    report.count_per_link_equal = links_a == links_b;

    std::vector<std::uint32_t> lens_a, lens_b;
    for (const auto& e : trace_a) lens_a.push_back(e.length);
    for (const auto& e : trace_b) lens_b.push_back(e.length);
    std::sort(lens_a.begin(), lens_a.end());
    std::sort(lens_b.begin(), lens_b.end());
    report.length_multiset_equal = lens_a == lens_b;

    report.interarrival_ks_stat = ks_statistic(interarrival_times(trace_a), interarrival_times(trace_b));
    return report;
}

inline nlohmann::json report_to_json(const IndistinguishabilityReport& r) {
    return nlohmann::json{{"count_per_link_equal", r.count_per_link_equal},
                          {"length_multiset_equal", r.length_multiset_equal},
                          {"interarrival_ks_stat", r.interarrival_ks_stat},
                          {"ks_threshold", r.ks_threshold},
                          {"pass", r.pass()}};
}

// ---- attack games ----

// Record attack: the challenger builds c_l with one entry of known
// difficulty at a secret position; the adversary must name the position
// from the observable bytes alone. Success should track 1/l.
inline double record_attack_game(std::uint32_t l, std::uint32_t trials, std::uint64_t seed,
                                 unsigned puzzle_bits = 64) {
    if (l < 2) throw DomainError("record attack needs at least 2 commands");
    if (trials < 100) throw DomainError("record attack needs at least 100 trials");
    Rng rng(seed);
    const timelock::PuzzleParams params = timelock::param_gen(puzzle_bits, rng.next_u64());

    std::vector<std::string> ids;
    std::vector<std::array<std::uint8_t, 32>> pubkeys;
    for (std::uint32_t i = 0; i < l; ++i) {
        const std::string id = "D" + std::to_string(i + 1);
        ids.push_back(id);
        pubkeys.push_back(crypto::box_keypair_from_seed(crypto::derive_seed(seed, "box:" + id)).pk);
    }

    const std::uint64_t known_t_hat = 5000;
    std::uint32_t hits = 0;
    for (std::uint32_t trial = 0; trial < trials; ++trial) {
        const std::uint32_t target = static_cast<std::uint32_t>(rng.below(l));
        schedule::OrderedCommands c_l;
        for (std::uint32_t i = 0; i < l; ++i) {
            const std::uint64_t t_hat =
                i == target ? known_t_hat : known_t_hat + 1000 * (1 + rng.below(100));
            Command cmd{ids[i], SwitchState::on, t_hat};
            const timelock::Puzzle puzzle = timelock::puzzle_gen(
                params, t_hat, cmd, random_below(rng, params.n), timelock::no_deadline, rng);
            c_l.entries.push_back(schedule::OrderedEntry{
                ids[i], crypto::hybrid_encrypt(pubkeys[i], timelock::encode_puzzle(puzzle), rng)});
        }

        // Adversary heuristic: hash each blob and pick the largest value.
        // Any deterministic rule over properly encrypted bytes does no
        // better than chance.
        std::uint64_t best_score = 0;
        std::uint32_t guess = 0;
        for (std::uint32_t i = 0; i < c_l.entries.size(); ++i) {
            const crypto::Digest d = crypto::sha256(c_l.entries[i].blob);
            std::uint64_t score = 0;
            for (int b = 0; b < 8; ++b) score = (score << 8) | d[b];
            if (score >= best_score) {
                best_score = score;
                guess = i;
            }
        }
        if (guess == target) ++hits;
    }
    return static_cast<double>(hits) / trials;
}

struct CloneAttackReport {
    std::uint64_t device_squarings = 0;
    std::uint64_t adversary_squarings = 0;
    double device_time_s = 0.0;
    double adversary_time_s = 0.0;
    std::uint64_t trapdoor_multiplications = 0; // owner path, for contrast
    bool trapdoor_matches = false;
};

namespace detail {
// Binary exponentiation with an explicit multiplication counter, used to
// show the owner's O(log) trapdoor next to the adversary's t_hat cost.
inline Bigint powmod_counting(const Bigint& base, const Bigint& exp, const Bigint& mod,
                              std::uint64_t& mults) {
    Bigint result = 1, b = base % mod, e = exp;
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) {
            result = (result * b) % mod;
            ++mults;
        }
        b = (b * b) % mod;
        ++mults;
        e >>= 1;
    }
    return result;
}
} // namespace detail

// Clone attack cost model: without phi(n) both parties pay exactly t_hat
// sequential squarings; a slower adversary (S' < S) just takes
// proportionally longer. The owner's totient path is counted for contrast
// and flagged as the trapdoor, not a break.
inline CloneAttackReport clone_attack_game(const timelock::PuzzleParams& params,
                                           std::uint64_t t_hat, std::uint64_t device_rate,
                                           std::uint64_t adversary_rate) {
    if (device_rate == 0 || adversary_rate == 0) throw DomainError("solver rates must be positive");
    CloneAttackReport report;

    Bigint x = params.a % params.n;
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < t_hat; ++i) {
        x = (x * x) % params.n;
        ++count;
    }
    report.device_squarings = count;
    report.adversary_squarings = count; // no shortcut exists without phi(n)
    report.device_time_s = static_cast<double>(t_hat) / static_cast<double>(device_rate);
    report.adversary_time_s = static_cast<double>(t_hat) / static_cast<double>(adversary_rate);

    Bigint reduced;
    mpz_powm_ui(reduced.get_mpz_t(), Bigint(2).get_mpz_t(), t_hat, params.phi_n.get_mpz_t());
    std::uint64_t mults = 0;
    const Bigint trapdoor = detail::powmod_counting(params.a, reduced, params.n, mults);
    report.trapdoor_multiplications = mults;
    report.trapdoor_matches = trapdoor == x;
    return report;
}

} // namespace ringveil::observer

#endif
