#ifndef RINGVEIL_WALLCLOCK_HPP
#define RINGVEIL_WALLCLOCK_HPP

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ringveil/netsim.hpp"

// Wall-clock mode: every node is its own thread, hops are message-queue
// deliveries of real sealed tokens, puzzles are solved by the real
// sequential solver, and timestamps come from the steady clock. Intended
// for small rings; determinism is only guaranteed by the virtual-time
// engine.
namespace ringveil::wallclock {

namespace detail {

class Mailbox {
public:
    void post(std::optional<Bytes> msg) {
        {
            std::lock_guard lock(m_);
            box_.push_back(std::move(msg));
        }
        cv_.notify_one();
    }

    // nullopt is the shutdown sentinel
    std::optional<Bytes> wait() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return !box_.empty(); });
        std::optional<Bytes> msg = std::move(box_.front());
        box_.pop_front();
        return msg;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::optional<Bytes>> box_;
};

struct SharedLog {
    std::mutex m;
    std::vector<ChannelEvent> events;
    std::vector<ExecutionRecord> executions;
    std::vector<UploadRecord> uploads;

    void emit(std::uint64_t t, const std::string& from, const std::string& to, std::uint32_t len) {
        std::lock_guard lock(m);
        events.push_back(ChannelEvent{t, from, to, len});
    }
};

} // namespace detail

struct WallClockOptions {
    std::uint64_t rounds = 5;
    std::uint64_t max_t_hat = 2'000'000; // refuse puzzles beyond this in real-solve mode
};

// Runs a single ring with real crypto on every hop. Returns the same
// artifact shape as the virtual engine.
inline netsim::SimResult run(const netsim::SimConfig& cfg, const WallClockOptions& opt = {}) {
    if (cfg.rings.size() != 1)
        throw ConfigError("wall-clock mode runs a single ring");
    const netsim::RingConfig& ring = cfg.rings.front();
    if (ring.topology != netsim::Topology::ring)
        throw ConfigError("wall-clock mode supports the ring topology");
    if (ring.devices.size() > 8)
        throw ConfigError("wall-clock mode is for small rings (at most 8 devices)");

    const std::size_t n = ring.devices.size();
    netsim::SimResult result;
    Rng world(cfg.seed);
    result.owner_params = timelock::param_gen(cfg.puzzle_bits, world.fork("params").next_u64());
    const crypto::SignKeyPair owner_sign =
        crypto::sign_keypair_from_seed(crypto::derive_seed(cfg.seed, "sign:owner"));
    const crypto::Key ring_key = crypto::derive_seed(cfg.seed, "ring-key:" + ring.ring_id);

    std::map<std::string, crypto::BoxKeyPair> box_keys;
    std::map<std::string, std::uint64_t> rates;
    std::uint32_t data_capacity = ring.data_capacity;
    for (const auto& id : ring.devices) {
        box_keys[id] = crypto::box_keypair_from_seed(crypto::derive_seed(cfg.seed, "box:" + id));
        auto it = cfg.devices.find(id);
        rates[id] = it != cfg.devices.end() ? it->second.solver_rate : 1'000'000;
        if (ring.data_capacity == 0)
            data_capacity += it != cfg.devices.end() ? it->second.upload_subfield_bytes
                                                     : netsim::non_skew_subfield_bytes;
    }
    const token::TokenConfig tcfg{ring.command_capacity, data_capacity,
                                  static_cast<std::uint16_t>(n)};

    detail::SharedLog log;
    std::vector<detail::Mailbox> boxes(n);
    detail::Mailbox hub_box;
    const auto t0 = std::chrono::steady_clock::now();
    auto now_us = [&] {
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                              std::chrono::steady_clock::now() - t0)
                                              .count());
    };

    std::vector<std::thread> solvers;
    std::mutex solver_m;

    auto device_main = [&](std::size_t index) {
        const std::string id = ring.devices[index];
        const crypto::BoxKeyPair& box = box_keys.at(id);
        std::set<std::uint64_t> seen;
        for (;;) {
            std::optional<Bytes> msg = boxes[index].wait();
            if (!msg) break;
            const std::uint64_t t_rcv = now_us();
            token::Token tok = token::open(token::decode_sealed(*msg), ring_key);
            if (!seen.contains(tok.token_id)) {
                seen.insert(tok.token_id);
                if (const auto c_l = token::extract_commands(tok)) {
                    for (const auto& entry : c_l->entries) {
                        if (entry.device_id != id) continue;
                        timelock::Puzzle puzzle;
                        try {
                            puzzle = timelock::decode_puzzle(crypto::hybrid_decrypt(box, entry.blob));
                        } catch (const Error&) {
                            continue;
                        }
                        if (!timelock::check_validity(puzzle.t_val_us, t_rcv, cfg.t_diff_us)) continue;
                        if (puzzle.t_hat > opt.max_t_hat)
                            throw ConfigError("puzzle difficulty too high for wall-clock mode");
                        std::lock_guard lock(solver_m);
                        solvers.emplace_back([&log, puzzle, id, &now_us] {
                            const timelock::SolveReceipt receipt = timelock::solve(puzzle);
                            Bigint base = (puzzle.e_k - receipt.key) % puzzle.n;
                            if (base < 0) base += puzzle.n;
                            ExecutionRecord rec;
                            rec.device_id = id;
                            rec.t_com_us = now_us();
                            rec.t_hat = puzzle.t_hat;
                            rec.solve_value_hex = base.get_str(16);
                            rec.squarings = receipt.squarings_performed;
                            std::lock_guard lg(log.m);
                            log.executions.push_back(std::move(rec));
                        });
                    }
                }
            }
            tok.counter -= 1;
            // reseal with a thread-local nonce stream before forwarding
            thread_local Rng reseal_rng(0x5ea1 ^ std::hash<std::thread::id>{}(std::this_thread::get_id()));
            const Bytes sealed = token::encode_sealed(token::seal(tok, ring_key, reseal_rng));
            const std::uint64_t t_fwd = now_us();
            if (index + 1 < n && tok.counter != 0) {
                log.emit(t_fwd, id, ring.devices[index + 1], static_cast<std::uint32_t>(sealed.size()));
                boxes[index + 1].post(sealed);
            } else {
                log.emit(t_fwd, id, netsim::hub_name, static_cast<std::uint32_t>(sealed.size()));
                hub_box.post(sealed);
            }
        }
    };

    std::vector<std::thread> device_threads;
    for (std::size_t i = 0; i < n; ++i) device_threads.emplace_back(device_main, i);

    // Hub: one schedule (the first dispatch, if any) rides the first round.
    std::deque<schedule::Schedule> pending;
    for (const auto& dispatch : cfg.schedules)
        if (dispatch.ring_id == ring.ring_id) pending.push_back(dispatch.sched);

    Rng hub_rng = world.fork("hub");
    for (std::uint64_t round = 1; round <= opt.rounds; ++round) {
        token::Token tok = token::make_token(tcfg, round, static_cast<std::uint32_t>(n), hub_rng);
        schedule::OrderedCommands c_l;
        if (!pending.empty()) {
            schedule::DevicePubKeys pubkeys;
            schedule::CreateOrderOptions order_opt;
            for (const auto& id : schedule::devices_of(pending.front())) {
                pubkeys[id] = box_keys.at(id).pk;
                order_opt.solver_rates[id] = rates.at(id);
            }
            schedule::SignedOrder order = schedule::sign_order(
                owner_sign, "owner", netsim::hub_name,
                schedule::create_order(pending.front(), pubkeys, result.owner_params, order_opt, hub_rng));
            pending.pop_front();
            if (!schedule::verify_order(order, owner_sign.pk))
                throw ProtocolError("hub rejected owner order");
            c_l = std::move(order.commands);
        }
        tok = token::load_commands(std::move(tok), c_l, hub_rng);
        const Bytes sealed = token::encode_sealed(token::seal(tok, ring_key, hub_rng));

        RoundTrace trace;
        trace.round_id = round;
        trace.ring_id = ring.ring_id;
        trace.t_h_beg_us = now_us();
        trace.sealed_length = static_cast<std::uint32_t>(sealed.size());
        log.emit(trace.t_h_beg_us, netsim::hub_name, ring.devices[0],
                 static_cast<std::uint32_t>(sealed.size()));
        boxes[0].post(sealed);

        std::optional<Bytes> returned = hub_box.wait();
        trace.t_h_end_us = now_us();
        trace.t_sum_us = trace.duration_us(); // hop timings live on the devices in this mode
        result.rounds.push_back(trace);
        (void)returned;
    }

    for (auto& box : boxes) box.post(std::nullopt);
    for (auto& t : device_threads) t.join();
    {
        std::lock_guard lock(solver_m);
        for (auto& t : solvers) t.join();
    }

    result.events = std::move(log.events);
    result.executions = std::move(log.executions);
    std::stable_sort(result.executions.begin(), result.executions.end(),
                     [](const ExecutionRecord& a, const ExecutionRecord& b) {
                         return a.t_com_us != b.t_com_us ? a.t_com_us < b.t_com_us
                                                         : a.device_id < b.device_id;
                     });

    netsim::RingSummary summary;
    summary.ring_id = ring.ring_id;
    summary.rounds = result.rounds.size();
    std::set<std::uint32_t> lens;
    double mean = 0;
    for (const auto& r : result.rounds) {
        mean += static_cast<double>(r.duration_us());
        lens.insert(r.sealed_length);
    }
    if (!result.rounds.empty()) mean /= static_cast<double>(result.rounds.size());
    double var = 0;
    for (const auto& r : result.rounds) {
        const double d = static_cast<double>(r.duration_us()) - mean;
        var += d * d;
    }
    if (!result.rounds.empty()) var /= static_cast<double>(result.rounds.size());
    summary.mean_latency_us = mean;
    summary.var_latency_us = var;
    if (!lens.empty()) summary.sealed_length = *lens.begin();
    summary.constant_sealed_length = lens.size() <= 1;
    result.ring_summaries[summary.ring_id] = summary;
    return result;
}

} // namespace ringveil::wallclock

#endif
