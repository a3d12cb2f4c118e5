#ifndef RINGVEIL_NETSIM_HPP
#define RINGVEIL_NETSIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringveil/crypto.hpp"
#include "ringveil/rng.hpp"
#include "ringveil/schedule.hpp"
#include "ringveil/timelock.hpp"
#include "ringveil/token.hpp"
#include "ringveil/trace.hpp"

// Deterministic discrete-event simulator of hub and devices over ring and
// flower topologies, in integer virtual microseconds. Puzzle solving
// consumes t_hat / S virtual seconds on the device timeline; the sequential
// solver itself runs only when real_solve is set, so large sweeps stay
// cheap while the cost model stays faithful.
namespace ringveil::netsim {

inline const std::string hub_name = "hub";

enum class Topology { ring, flower };
enum class DeviceKind { non_skew, skew };
enum class PeriodMode { fixed, random_uniform };
enum class LoadMode { peak, non_peak };

// (rho, gamma, resources): expected command instants, the devices whose
// commands must precede this one, and an abstract resource score.
struct DeviceProfile {
    std::vector<std::uint64_t> rho_command_instants_us;
    std::set<std::string> gamma;
    double resources = 1.0;
};

inline constexpr std::uint32_t non_skew_subfield_bytes = 1024;       // 1 KB
inline constexpr std::uint32_t skew_subfield_bytes = 1024 * 1024;    // 1 MB

struct DeviceSpec {
    std::string id;
    std::uint64_t solver_rate = 1'000'000; // S, squarings per second
    std::int64_t clock_offset_us = 0;      // bounded by t_diff
    std::uint64_t dwell_us = 0;            // hold time before forwarding
    DeviceKind kind = DeviceKind::non_skew;
    std::uint32_t upload_subfield_bytes = non_skew_subfield_bytes;
    DeviceProfile profile;
};

struct LatencyModel {
    std::uint64_t alpha_us = 1000;
    double beta_us_per_byte = 0.0;
    std::uint64_t jitter_us = 0; // uniform [0, jitter_us] per hop when nonzero

    std::uint64_t expected_hop_us(std::uint32_t bytes) const {
        return alpha_us + static_cast<std::uint64_t>(std::llround(beta_us_per_byte * bytes));
    }

    std::uint64_t hop_us(std::uint32_t bytes, Rng& rng) const {
        std::uint64_t t = expected_hop_us(bytes);
        if (jitter_us > 0) t += rng.below(jitter_us + 1);
        return t;
    }
};

struct RingConfig {
    std::string ring_id;
    std::vector<std::string> devices; // visit order, hub implicit origin
    Topology topology = Topology::ring;
    std::uint64_t token_period_us = 1'000'000;
    PeriodMode period_mode = PeriodMode::fixed;
    std::uint32_t command_capacity = 2048;
    std::uint32_t data_capacity = 0;    // 0: sum of member sub-field sizes
    std::uint32_t simulated_devices = 0; // hop-counter target; 0: physical count
    bool active = true;
};

inline RingConfig build_ring(std::string ring_id, std::vector<std::string> devices, Topology topology,
                             std::uint32_t command_capacity, std::uint32_t data_capacity) {
    if (devices.empty()) throw ConfigError("ring " + ring_id + " has no devices");
    RingConfig cfg;
    cfg.ring_id = std::move(ring_id);
    cfg.devices = std::move(devices);
    cfg.topology = topology;
    cfg.command_capacity = command_capacity;
    cfg.data_capacity = data_capacity;
    return cfg;
}

// Transmissions per round: a ring passes the token N+1 times, a flower
// routes every hop through the hub, twice per petal.
inline std::size_t hops_per_round(const RingConfig& cfg) {
    const std::size_t n = cfg.devices.size();
    return cfg.topology == Topology::ring ? n + 1 : 2 * n;
}

struct ScheduleDispatch {
    std::string ring_id;
    schedule::Schedule sched;
};

struct UploadRequest {
    std::string device_id;
    std::uint64_t at_us = 0;
    std::uint32_t payload_bytes = 0;
};

struct ChurnEvent {
    std::string device_id;
    std::uint64_t at_us = 0;
    bool leave = true; // false: join
};

// Per-round random activity mix, for constant-size stress runs.
struct RandomWorkload {
    bool enabled = false;
    std::uint32_t max_commands_per_round = 0;
    std::uint32_t max_uploads_per_round = 0;
    std::uint32_t max_upload_bytes = 256;
};

struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t duration_us = 10'000'000;
    std::uint64_t t_diff_us = 1000;
    std::uint64_t hub_dispatch_gap_us = 1000; // sequential token origination across rings
    unsigned puzzle_bits = 128;
    bool real_solve = false;
    LatencyModel latency;
    std::vector<RingConfig> rings;
    std::map<std::string, DeviceSpec> devices;
    std::vector<ScheduleDispatch> schedules;
    std::vector<UploadRequest> uploads;
    std::map<std::string, std::uint32_t> upload_on_exec; // device -> payload bytes per execution
    std::vector<ChurnEvent> churn;
    RandomWorkload workload;
};

struct RingSummary {
    std::string ring_id;
    std::uint64_t rounds = 0;
    double mean_latency_us = 0.0;
    double var_latency_us = 0.0;
    std::uint32_t sealed_length = 0;
    bool constant_sealed_length = true;
    bool stalled = false;
    std::uint64_t stalled_round = 0;
};

struct UploadSent {
    std::string device_id;
    std::uint64_t at_us = 0;
    std::uint32_t payload_bytes = 0;
    std::string payload_sha256_hex;
};

struct SimResult {
    std::vector<RoundTrace> rounds;
    std::vector<ChannelEvent> events;
    std::vector<ExecutionRecord> executions;
    std::vector<UploadRecord> uploads_recovered;
    std::vector<UploadSent> uploads_sent;
    std::map<std::string, RingSummary> ring_summaries;
    timelock::PuzzleParams owner_params; // owner-side secret, never serialized into run outputs
    bool stalled = false;
};

// ---- ring partitioning policies ----

// Devices touched by any gamma dependency are comparable, the rest are
// incomparable. Comparable devices are concentrated into x rings (peak
// mode keeps exactly one of them active); incomparable devices are spread
// round-robin across x parallel rings. Assignment is by ascending id.
inline std::vector<RingConfig> partition_rings(const std::map<std::string, DeviceProfile>& profiles,
                                               std::uint32_t x, LoadMode mode) {
    if (profiles.empty()) throw PartitionError("no device profiles to partition");
    if (x == 0) throw PartitionError("ring count must be at least 1");
    std::set<std::string> comparable;
    for (const auto& [id, p] : profiles) {
        if (p.gamma.contains(id)) throw ConfigError("device " + id + " lists itself in gamma");
        if (!p.gamma.empty()) comparable.insert(id);
        for (const auto& dep : p.gamma) comparable.insert(dep);
    }
    std::vector<std::string> comp, incomp;
    for (const auto& [id, p] : profiles)
        (comparable.contains(id) ? comp : incomp).push_back(id);
    if (!comp.empty() && x > comp.size())
        throw PartitionError("cannot spread " + std::to_string(comp.size()) +
                             " comparable devices over " + std::to_string(x) + " rings");

    std::vector<RingConfig> rings;
    if (!comp.empty()) {
        std::vector<std::vector<std::string>> buckets(x);
        for (std::size_t i = 0; i < comp.size(); ++i) buckets[i % x].push_back(comp[i]);
        for (std::uint32_t r = 0; r < x; ++r) {
            RingConfig cfg = build_ring("cmp-" + std::to_string(r), buckets[r], Topology::ring, 2048, 0);
            cfg.active = (mode == LoadMode::peak) && r == 0;
            rings.push_back(std::move(cfg));
        }
    }
    if (!incomp.empty()) {
        const std::uint32_t spread = std::min<std::uint32_t>(x, static_cast<std::uint32_t>(incomp.size()));
        std::vector<std::vector<std::string>> buckets(spread);
        for (std::size_t i = 0; i < incomp.size(); ++i) buckets[i % spread].push_back(incomp[i]);
        for (std::uint32_t r = 0; r < spread; ++r) {
            RingConfig cfg = build_ring("inc-" + std::to_string(r), buckets[r], Topology::ring, 2048, 0);
            cfg.active = mode == LoadMode::non_peak;
            rings.push_back(std::move(cfg));
        }
    }
    return rings;
}

// Non-skew devices share a small-sub-field ring; skew devices get their
// own ring with large sub-fields so they stop taxing everyone else.
inline std::vector<RingConfig> partition_by_skew(const std::map<std::string, DeviceSpec>& devices) {
    std::vector<std::string> skew, non_skew;
    for (const auto& [id, spec] : devices)
        (spec.kind == DeviceKind::skew ? skew : non_skew).push_back(id);
    std::vector<RingConfig> rings;
    if (!non_skew.empty())
        rings.push_back(build_ring("nonskew", non_skew, Topology::ring, 2048, 0));
    if (!skew.empty())
        rings.push_back(build_ring("skew", skew, Topology::ring, 2048, 0));
    return rings;
}

// ---- simulation engine ----

class Simulation {
public:
    explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)) { validate_config(); }

    SimResult run() {
        setup();
        pump();
        finish();
        return std::move(result_);
    }

private:
    struct DeviceRt {
        DeviceSpec spec;
        std::uint16_t position = 0; // index in its ring's device list
        crypto::BoxKeyPair box{};
        crypto::SignKeyPair sign{};
        bool present = true;
        bool needs_auth = false;
        std::set<std::uint64_t> seen_tokens;
        std::deque<std::pair<Bytes, std::string>> upload_queue; // payload, sha hex
        std::optional<Rng> rng;
    };

    struct RingRt {
        RingConfig cfg;
        token::TokenConfig tcfg;
        std::optional<Rng> rng;
        token::PadLedger ledger;
        std::deque<token::Grant> grant_queue;
        std::set<std::string> queued;
        token::DataLayout layout;
        std::deque<schedule::Schedule> pending;
        Bytes last_toggles;
        token::Token tok;
        std::uint32_t sealed_len = 0;
        RoundTrace trace;
        std::size_t position = 0;
        std::uint64_t round = 0;
        std::uint64_t last_beg = 0;
        bool stalled = false;
        std::uint64_t stalled_round = 0;
        std::vector<std::uint64_t> durations;
    };

    struct Ev {
        std::uint64_t t;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct EvAfter {
        bool operator()(const Ev& a, const Ev& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    void at(std::uint64_t t, std::function<void()> fn) {
        queue_.push(Ev{t, seq_++, std::move(fn)});
    }

    void validate_config() {
        if (cfg_.rings.empty()) throw ConfigError("simulation needs at least one ring");
        std::set<std::string> assigned;
        for (const auto& ring : cfg_.rings) {
            if (ring.devices.empty()) throw ConfigError("ring " + ring.ring_id + " has no devices");
            if (ring.token_period_us == 0)
                throw ConfigError("ring " + ring.ring_id + " has zero token period");
            for (const auto& id : ring.devices)
                if (!assigned.insert(id).second)
                    throw ConfigError("device " + id + " appears in more than one ring");
        }
        for (const auto& [id, spec] : cfg_.devices) {
            const std::uint64_t drift = static_cast<std::uint64_t>(
                spec.clock_offset_us < 0 ? -spec.clock_offset_us : spec.clock_offset_us);
            if (drift > cfg_.t_diff_us)
                throw ConfigError("device " + id + " clock offset exceeds t_diff");
            if (spec.solver_rate == 0) throw ConfigError("device " + id + " has zero solver rate");
        }
        for (const auto& dispatch : cfg_.schedules) {
            const RingConfig* ring = nullptr;
            for (const auto& r : cfg_.rings)
                if (r.ring_id == dispatch.ring_id) ring = &r;
            if (!ring) throw ConfigError("schedule targets unknown ring " + dispatch.ring_id);
            schedule::validate(dispatch.sched);
            for (const auto& id : schedule::devices_of(dispatch.sched))
                if (std::find(ring->devices.begin(), ring->devices.end(), id) == ring->devices.end())
                    throw ConfigError("scheduled device " + id + " is not in ring " + dispatch.ring_id);
        }
    }

    DeviceSpec spec_or_default(const std::string& id) const {
        auto it = cfg_.devices.find(id);
        if (it != cfg_.devices.end()) return it->second;
        DeviceSpec spec;
        spec.id = id;
        return spec;
    }

    void setup() {
        Rng world(cfg_.seed);
        result_.owner_params = timelock::param_gen(cfg_.puzzle_bits, world.fork("params").next_u64());
        owner_sign_ = crypto::sign_keypair_from_seed(crypto::derive_seed(cfg_.seed, "sign:owner"));

        for (const auto& ring : cfg_.rings) {
            for (std::size_t i = 0; i < ring.devices.size(); ++i) {
                const std::string& id = ring.devices[i];
                DeviceRt rt;
                rt.spec = spec_or_default(id);
                rt.spec.id = id;
                if (rt.spec.kind == DeviceKind::skew &&
                    rt.spec.upload_subfield_bytes == non_skew_subfield_bytes)
                    rt.spec.upload_subfield_bytes = skew_subfield_bytes;
                rt.position = static_cast<std::uint16_t>(i);
                rt.box = crypto::box_keypair_from_seed(crypto::derive_seed(cfg_.seed, "box:" + id));
                rt.sign = crypto::sign_keypair_from_seed(crypto::derive_seed(cfg_.seed, "sign:" + id));
                rt.rng.emplace(world.fork("dev:" + id).next_u64());
                devices_[id] = std::move(rt);
            }
        }

        latency_rng_.emplace(world.fork("latency").next_u64());

        std::size_t index = 0;
        for (const auto& ring : cfg_.rings) {
            RingRt rt;
            rt.cfg = ring;
            if (rt.cfg.data_capacity == 0) {
                std::uint64_t total = 0;
                for (const auto& id : ring.devices) total += devices_.at(id).spec.upload_subfield_bytes;
                if (total > 0xffffffffull) throw ConfigError("ring data capacity overflows");
                rt.cfg.data_capacity = static_cast<std::uint32_t>(total);
            }
            rt.tcfg = token::TokenConfig{rt.cfg.command_capacity, rt.cfg.data_capacity,
                                         static_cast<std::uint16_t>(ring.devices.size())};
            rt.rng.emplace(world.fork("ring:" + ring.ring_id).next_u64());
            rt.last_toggles.assign(token::toggle_bytes(rt.tcfg.device_count), 0);
            rings_.push_back(std::move(rt));
            ring_index_[ring.ring_id] = index++;
        }

        for (const auto& dispatch : cfg_.schedules)
            pending_dispatches_.push_back(dispatch);
        std::stable_sort(pending_dispatches_.begin(), pending_dispatches_.end(),
                         [](const auto& a, const auto& b) { return a.sched.epoch_us < b.sched.epoch_us; });

        for (const auto& up : cfg_.uploads) {
            if (!devices_.contains(up.device_id))
                throw ConfigError("upload request for unknown device " + up.device_id);
            at(up.at_us, [this, up] { enqueue_upload(up.device_id, up.payload_bytes, up.at_us); });
        }
        for (const auto& churn : cfg_.churn) {
            if (!devices_.contains(churn.device_id))
                throw RegistryError("churn event for unknown device " + churn.device_id);
            at(churn.at_us, [this, churn] { apply_churn(churn); });
        }

        // Tokens for parallel rings leave the hub sequentially.
        std::uint64_t t0 = 0;
        for (std::size_t i = 0; i < rings_.size(); ++i) {
            if (!rings_[i].cfg.active) continue;
            const std::uint64_t start = t0;
            at(start, [this, i, start] { originate(rings_[i], start); });
            t0 += cfg_.hub_dispatch_gap_us;
        }
    }

    std::uint64_t hop_latency(std::uint32_t bytes) { return cfg_.latency.hop_us(bytes, *latency_rng_); }

    void enqueue_upload(const std::string& device_id, std::uint32_t bytes, std::uint64_t at_us) {
        DeviceRt& dev = devices_.at(device_id);
        if (bytes + 4u > dev.spec.upload_subfield_bytes)
            throw ConfigError("upload of " + std::to_string(bytes) + " bytes exceeds sub-field of device " +
                              device_id);
        Bytes payload = dev.rng->bytes(bytes);
        const std::string sha = to_hex(crypto::sha256(payload));
        dev.upload_queue.emplace_back(std::move(payload), sha);
        result_.uploads_sent.push_back(UploadSent{device_id, at_us, bytes, sha});
    }

    void apply_churn(const ChurnEvent& ev) {
        DeviceRt& dev = devices_.at(ev.device_id);
        dev.present = !ev.leave;
        if (!ev.leave) dev.needs_auth = true; // rejoin requires a signature check
    }

    // Expected forward instants relative to round start, used by the owner
    // to plan delays. Exact in deterministic mode.
    std::map<std::string, std::uint64_t> expected_fwd_instants(const RingRt& ring) const {
        std::map<std::string, std::uint64_t> fwd;
        const std::uint64_t hop = cfg_.latency.expected_hop_us(static_cast<std::uint32_t>(
            token::sealed_token_size(ring.tcfg)));
        std::uint64_t t = 0;
        for (const auto& id : ring.cfg.devices) {
            const DeviceRt& dev = devices_.at(id);
            t += hop;                 // token arrives
            t += dev.spec.dwell_us;   // device forwards, computation starts
            fwd[id] = t;
            if (ring.cfg.topology == Topology::flower) t += hop; // petal returns to hub
        }
        return fwd;
    }

    schedule::OrderedCommands make_order(RingRt& ring, const schedule::Schedule& sched) {
        schedule::DevicePubKeys pubkeys;
        schedule::CreateOrderOptions opt;
        for (const auto& id : schedule::devices_of(sched)) {
            pubkeys[id] = devices_.at(id).box.pk;
            opt.solver_rates[id] = devices_.at(id).spec.solver_rate;
        }
        opt.fwd_instants_us = expected_fwd_instants(ring);
        Rng order_rng = ring.rng->fork("order");
        schedule::OrderedCommands c_l =
            schedule::create_order(sched, pubkeys, result_.owner_params, opt, order_rng);
        // Owner signs; hub accepts only if digest and signature verify.
        schedule::SignedOrder signed_order =
            schedule::sign_order(owner_sign_, "owner", hub_name, std::move(c_l));
        if (!schedule::verify_order(signed_order, owner_sign_.pk))
            throw ProtocolError("hub rejected owner order");
        return signed_order.commands;
    }

    void draw_workload(RingRt& ring, std::uint64_t now) {
        if (!cfg_.workload.enabled) return;
        Rng& rng = *ring.rng;
        const auto& ids = ring.cfg.devices;
        const std::uint32_t n_cmds =
            static_cast<std::uint32_t>(rng.below(cfg_.workload.max_commands_per_round + 1));
        std::vector<std::size_t> picks(ids.size());
        for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
        for (std::size_t i = 0; i < picks.size(); ++i)
            std::swap(picks[i], picks[i + rng.below(picks.size() - i)]);
        schedule::Schedule sched;
        sched.epoch_us = now;
        for (std::uint32_t i = 0; i < n_cmds && i < picks.size(); ++i) {
            Command cmd;
            cmd.device_id = ids[picks[i]];
            cmd.state = rng.below(2) ? SwitchState::on : SwitchState::off;
            cmd.exec_delay_us = rng.range(1000, ring.cfg.token_period_us);
            sched.chains.push_back({cmd});
        }
        if (!sched.chains.empty()) ring.pending.push_back(std::move(sched));

        const std::uint32_t n_uploads =
            static_cast<std::uint32_t>(rng.below(cfg_.workload.max_uploads_per_round + 1));
        for (std::uint32_t i = 0; i < n_uploads && i < picks.size(); ++i) {
            const std::string& id = ids[picks[picks.size() - 1 - i]];
            const DeviceRt& dev = devices_.at(id);
            const std::uint32_t cap = std::min(cfg_.workload.max_upload_bytes,
                                               dev.spec.upload_subfield_bytes - 4);
            if (cap == 0) continue;
            enqueue_upload(id, static_cast<std::uint32_t>(rng.range(1, cap)), now);
        }
    }

    void originate(RingRt& ring, std::uint64_t now) {
        if (ring.stalled) return;
        draw_workload(ring, now);
        for (auto it = pending_dispatches_.begin(); it != pending_dispatches_.end();) {
            if (it->ring_id == ring.cfg.ring_id && it->sched.epoch_us <= now) {
                ring.pending.push_back(it->sched);
                it = pending_dispatches_.erase(it);
            } else {
                ++it;
            }
        }

        ring.round += 1;
        ring.last_beg = now;
        const std::uint64_t token_id =
            (static_cast<std::uint64_t>(ring_index_.at(ring.cfg.ring_id)) << 48) | ring.round;
        const std::uint32_t counter = ring.cfg.simulated_devices
                                          ? ring.cfg.simulated_devices
                                          : static_cast<std::uint32_t>(ring.cfg.devices.size());
        token::Token tok = token::make_token(ring.tcfg, token_id, counter, *ring.rng);
        tok.toggle_bits = ring.last_toggles;

        // Grants for requests toggled last round; whatever does not fit
        // stays queued FIFO. The hub clears the bit when it grants.
        std::vector<token::Grant> grants(ring.grant_queue.begin(), ring.grant_queue.end());
        ring.layout = token::partition_data_field(ring.cfg.data_capacity, grants);
        for (const auto& sf : ring.layout.granted) {
            ring.grant_queue.erase(std::find_if(ring.grant_queue.begin(), ring.grant_queue.end(),
                                                [&](const token::Grant& g) { return g.device_id == sf.device_id; }));
            ring.queued.erase(sf.device_id);
            const std::uint16_t pos = devices_.at(sf.device_id).position;
            if (token::toggle_bit(tok, pos)) tok = token::toggle_request(std::move(tok), pos);
        }
        tok = token::fill_data_field(std::move(tok), ring.layout, ring.round, ring.ledger, *ring.rng);

        // One pending order rides this round; the field is random filler
        // otherwise.
        schedule::OrderedCommands c_l;
        if (!ring.pending.empty() && ring.pending.front().epoch_us <= now) {
            c_l = make_order(ring, ring.pending.front());
            ring.pending.pop_front();
        }
        tok = token::load_commands(std::move(tok), c_l, *ring.rng);

        const token::SealedToken sealed = token::seal(tok, ring_key(ring), *ring.rng);
        ring.sealed_len = static_cast<std::uint32_t>(token::sealed_size(sealed));
        ring.tok = std::move(tok);

        ring.trace = RoundTrace{};
        ring.trace.round_id = ring.round;
        ring.trace.ring_id = ring.cfg.ring_id;
        ring.trace.t_h_beg_us = now;
        ring.trace.sealed_length = ring.sealed_len;
        ring.position = 0;

        send_to_device(ring, 0, now);
    }

    crypto::Key ring_key(const RingRt& ring) const {
        return crypto::derive_seed(cfg_.seed, "ring-key:" + ring.cfg.ring_id);
    }

    void emit(std::uint64_t t, const std::string& from, const std::string& to, std::uint32_t len) {
        result_.events.push_back(ChannelEvent{t, from, to, len});
    }

    void send_to_device(RingRt& ring, std::size_t index, std::uint64_t now) {
        const std::string& id = ring.cfg.devices[index];
        const std::string from = sender_before(ring, index);
        emit(now, from, id, ring.sealed_len);
        const std::uint64_t arrive = now + hop_latency(ring.sealed_len);
        at(arrive, [this, &ring, index, arrive] { device_receive(ring, index, arrive); });
    }

    std::string sender_before(const RingRt& ring, std::size_t index) const {
        if (ring.cfg.topology == Topology::flower || index == 0) return hub_name;
        return ring.cfg.devices[index - 1];
    }

    void device_receive(RingRt& ring, std::size_t index, std::uint64_t now) {
        if (ring.stalled) return;
        DeviceRt& dev = devices_.at(ring.cfg.devices[index]);
        if (!dev.present) {
            if (ring.cfg.topology == Topology::ring) {
                // A broken ring cannot carry the token any further.
                ring.stalled = true;
                ring.stalled_round = ring.round;
                result_.stalled = true;
                return;
            }
            // Flower: the hub detects the missing acknowledgment within
            // 2x the expected petal round trip and fabricates the
            // token-response under the absent device's address.
            const std::uint64_t hop = cfg_.latency.expected_hop_us(ring.sealed_len);
            const std::uint64_t rtt = 2 * hop + dev.spec.dwell_us;
            // First unanswered petal: the timeout fires 2x the expected
            // petal round trip after the send. Once the absence is known
            // the phantom leaves exactly when a real response would.
            const std::uint64_t detect = absent_known_.contains(dev.spec.id)
                                             ? now + dev.spec.dwell_us
                                             : now - hop + 2 * rtt;
            absent_known_.insert(dev.spec.id);
            at(detect, [this, &ring, index, detect] { phantom_response(ring, index, detect); });
            return;
        }
        if (dev.needs_auth) {
            // Lightweight re-authentication on rejoin: the device signs the
            // current token id and the hub checks it before trusting the
            // petal response again.
            Bytes challenge;
            put_u64(challenge, ring.tok.token_id);
            const crypto::Signature sig = crypto::sign(dev.sign, challenge);
            if (!crypto::sign_verify(dev.sign.pk, challenge, sig))
                throw ProtocolError("device " + dev.spec.id + " failed re-authentication");
            dev.needs_auth = false;
            absent_known_.erase(dev.spec.id);
        }

        const std::uint64_t t_rcv = now;
        const std::uint64_t t_fwd = now + dev.spec.dwell_us;
        ring.trace.hops.push_back(HopTiming{dev.spec.id, t_rcv, t_fwd});

        const bool first_sight = !dev.seen_tokens.contains(ring.tok.token_id);
        if (first_sight) {
            dev.seen_tokens.insert(ring.tok.token_id);
            handle_commands(ring, dev, t_rcv, t_fwd);
            handle_upload(ring, dev);
            if (!dev.upload_queue.empty() && !token::toggle_bit(ring.tok, dev.position))
                ring.tok = token::toggle_request(std::move(ring.tok), dev.position);
        }

        ring.tok.counter -= 1;
        forward(ring, index, t_fwd);
    }

    void phantom_response(RingRt& ring, std::size_t index, std::uint64_t now) {
        if (ring.stalled) return;
        DeviceRt& dev = devices_.at(ring.cfg.devices[index]);
        // The absent device would have decremented the counter; the hub
        // applies the same transform to its retained copy.
        ring.trace.hops.push_back(HopTiming{dev.spec.id, now, now});
        ring.tok.counter -= 1;
        emit(now, dev.spec.id, hub_name, ring.sealed_len);
        const std::uint64_t arrive = now + hop_latency(ring.sealed_len);
        at(arrive, [this, &ring, index, arrive] { hub_receive(ring, index, arrive); });
    }

    void handle_commands(RingRt& ring, DeviceRt& dev, std::uint64_t t_rcv, std::uint64_t t_fwd) {
        const auto c_l = token::extract_commands(ring.tok);
        if (!c_l) return;
        for (const auto& entry : c_l->entries) {
            if (entry.device_id != dev.spec.id) continue;
            timelock::Puzzle puzzle;
            try {
                puzzle = timelock::decode_puzzle(crypto::hybrid_decrypt(dev.box, entry.blob));
            } catch (const Error&) {
                continue; // not actually ours, or tampered; never actuate on it
            }
            const std::uint64_t local_clock =
                static_cast<std::uint64_t>(static_cast<std::int64_t>(t_rcv) + dev.spec.clock_offset_us);
            if (!timelock::check_validity(puzzle.t_val_us, local_clock, cfg_.t_diff_us)) continue;
            const unsigned __int128 span =
                static_cast<unsigned __int128>(puzzle.t_hat) * 1'000'000u / dev.spec.solver_rate;
            const std::uint64_t t_com = t_fwd + static_cast<std::uint64_t>(span);
            at(t_com, [this, &dev, puzzle, t_com] { complete_puzzle(dev, puzzle, t_com); });
        }
    }

    void complete_puzzle(DeviceRt& dev, const timelock::Puzzle& puzzle, std::uint64_t t_com) {
        if (!dev.present) return;
        ExecutionRecord rec;
        rec.device_id = dev.spec.id;
        rec.t_com_us = t_com;
        rec.t_hat = puzzle.t_hat;
        if (cfg_.real_solve) {
            const timelock::SolveReceipt receipt = timelock::solve(puzzle);
            rec.squarings = receipt.squarings_performed;
            // The solver's modular base, reconstructed from the receipt.
            Bigint base = (puzzle.e_k - receipt.key) % puzzle.n;
            if (base < 0) base += puzzle.n;
            rec.solve_value_hex = base.get_str(16);
        } else {
            // Virtual mode: the simulator models the device's sequential
            // computation; its result equals the totient-shortcut value.
            rec.squarings = puzzle.t_hat;
            rec.solve_value_hex = timelock::fast_eval(result_.owner_params, puzzle.t_hat).get_str(16);
        }
        result_.executions.push_back(std::move(rec));
        const auto it = cfg_.upload_on_exec.find(dev.spec.id);
        if (it != cfg_.upload_on_exec.end() && it->second > 0)
            enqueue_upload(dev.spec.id, it->second, t_com);
    }

    void handle_upload(RingRt& ring, DeviceRt& dev) {
        for (const auto& sf : ring.layout.granted) {
            if (sf.device_id != dev.spec.id) continue;
            if (dev.upload_queue.empty()) return; // granted but nothing left; recovers as empty
            auto [payload, sha] = std::move(dev.upload_queue.front());
            dev.upload_queue.pop_front();
            ring.tok = token::overwrite_data(std::move(ring.tok), sf, payload, *dev.rng);
            return;
        }
    }

    void forward(RingRt& ring, std::size_t index, std::uint64_t t_fwd) {
        const std::string& me = ring.cfg.devices[index];
        if (ring.cfg.topology == Topology::flower) {
            emit(t_fwd, me, hub_name, ring.sealed_len);
            const std::uint64_t arrive = t_fwd + hop_latency(ring.sealed_len);
            at(arrive, [this, &ring, index, arrive] { hub_receive(ring, index, arrive); });
            return;
        }
        if (ring.tok.counter == 0) {
            emit(t_fwd, me, hub_name, ring.sealed_len);
            const std::uint64_t arrive = t_fwd + hop_latency(ring.sealed_len);
            at(arrive, [this, &ring, arrive] { round_complete(ring, arrive); });
            return;
        }
        const std::size_t next = index + 1 < ring.cfg.devices.size() ? index + 1 : 0;
        send_to_device(ring, next, t_fwd);
    }

    // Flower: every petal response routes through the hub.
    void hub_receive(RingRt& ring, std::size_t index, std::uint64_t now) {
        if (ring.stalled) return;
        if (ring.tok.counter == 0) {
            round_complete(ring, now);
            return;
        }
        const std::size_t next = index + 1 < ring.cfg.devices.size() ? index + 1 : 0;
        send_to_device(ring, next, now);
    }

    void round_complete(RingRt& ring, std::uint64_t now) {
        ring.trace.t_h_end_us = now;
        std::uint64_t dwell_sum = 0;
        for (const auto& hop : ring.trace.hops) dwell_sum += hop.t_fwd_us - hop.t_rcv_us;
        ring.trace.t_sum_us = ring.trace.duration_us() - dwell_sum;
        ring.durations.push_back(ring.trace.duration_us());
        result_.rounds.push_back(ring.trace);

        // Collect uploads out of the granted sub-fields.
        for (std::uint32_t i = 0; i < ring.layout.granted.size(); ++i) {
            const token::SubField& sf = ring.layout.granted[i];
            const Bytes payload = token::recover_data(ring.ledger, ring.tok, ring.round, i, sf);
            UploadRecord rec;
            rec.device_id = sf.device_id;
            rec.round_id = ring.round;
            rec.recovered_at_us = now;
            rec.payload_bytes = static_cast<std::uint32_t>(payload.size());
            if (!payload.empty()) rec.payload_sha256_hex = to_hex(crypto::sha256(payload));
            result_.uploads_recovered.push_back(std::move(rec));
        }
        ring.layout = token::DataLayout{};

        // Queue upload requests for the next round.
        for (std::uint16_t i = 0; i < ring.tcfg.device_count; ++i) {
            if (!token::toggle_bit(ring.tok, i)) continue;
            const std::string& id = ring.cfg.devices[i];
            if (ring.queued.contains(id)) continue;
            ring.grant_queue.push_back(token::Grant{id, devices_.at(id).spec.upload_subfield_bytes});
            ring.queued.insert(id);
        }
        ring.last_toggles = ring.tok.toggle_bits;

        std::uint64_t gap = ring.cfg.token_period_us;
        if (ring.cfg.period_mode == PeriodMode::random_uniform)
            gap = ring.rng->range(ring.cfg.token_period_us / 2, (ring.cfg.token_period_us * 3) / 2);
        std::uint64_t next_beg = ring.last_beg + gap;
        if (next_beg < now) next_beg = now; // a single token per ring, no pipelining
        if (next_beg <= cfg_.duration_us)
            at(next_beg, [this, &ring, next_beg] { originate(ring, next_beg); });
    }

    void pump() {
        while (!queue_.empty()) {
            Ev ev = queue_.top();
            queue_.pop();
            ev.fn();
        }
    }

    void finish() {
        std::stable_sort(result_.executions.begin(), result_.executions.end(),
                         [](const ExecutionRecord& a, const ExecutionRecord& b) {
                             return a.t_com_us != b.t_com_us ? a.t_com_us < b.t_com_us
                                                             : a.device_id < b.device_id;
                         });
        for (const auto& ring : rings_) {
            RingSummary s;
            s.ring_id = ring.cfg.ring_id;
            s.rounds = ring.durations.size();
            s.stalled = ring.stalled;
            s.stalled_round = ring.stalled_round;
            if (!ring.durations.empty()) {
                double mean = 0;
                for (const auto d : ring.durations) mean += static_cast<double>(d);
                mean /= static_cast<double>(ring.durations.size());
                double var = 0;
                for (const auto d : ring.durations) {
                    const double diff = static_cast<double>(d) - mean;
                    var += diff * diff;
                }
                var /= static_cast<double>(ring.durations.size());
                s.mean_latency_us = mean;
                s.var_latency_us = var;
            }
            std::set<std::uint32_t> lens;
            for (const auto& r : result_.rounds)
                if (r.ring_id == ring.cfg.ring_id) lens.insert(r.sealed_length);
            if (!lens.empty()) s.sealed_length = *lens.begin();
            s.constant_sealed_length = lens.size() <= 1;
            result_.ring_summaries[s.ring_id] = s;
        }
    }

    SimConfig cfg_;
    SimResult result_;
    crypto::SignKeyPair owner_sign_{};
    std::map<std::string, DeviceRt> devices_;
    std::vector<RingRt> rings_;
    std::map<std::string, std::size_t> ring_index_;
    std::vector<ScheduleDispatch> pending_dispatches_;
    std::set<std::string> absent_known_;
    std::optional<Rng> latency_rng_;
    std::priority_queue<Ev, std::vector<Ev>, EvAfter> queue_;
    std::uint64_t seq_ = 0;
};

inline SimResult run(const SimConfig& cfg) { return Simulation(cfg).run(); }

// Owner-side delay verification over the execution log: every scheduled
// device must report the solve value the totient shortcut predicts, and
// every comparable pair must have actuated in chain order.
inline bool verify_run(const timelock::PuzzleParams& params, const schedule::Schedule& sched,
                       const std::vector<ExecutionRecord>& log) {
    std::map<std::string, const ExecutionRecord*> first;
    for (const auto& rec : log)
        if (!first.contains(rec.device_id)) first[rec.device_id] = &rec;
    for (const auto& id : schedule::devices_of(sched))
        if (!first.contains(id))
            throw IncompleteRunError("no execution record for scheduled device " + id);
    for (const auto& id : schedule::devices_of(sched)) {
        const ExecutionRecord& rec = *first.at(id);
        if (timelock::fast_eval(params, rec.t_hat).get_str(16) != rec.solve_value_hex) return false;
    }
    for (const auto& chain : sched.chains)
        for (std::size_t i = 0; i + 1 < chain.size(); ++i)
            if (first.at(chain[i].device_id)->t_com_us > first.at(chain[i + 1].device_id)->t_com_us)
                return false;
    return true;
}

} // namespace ringveil::netsim

#endif
