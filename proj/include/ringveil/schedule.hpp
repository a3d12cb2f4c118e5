#ifndef RINGVEIL_SCHEDULE_HPP
#define RINGVEIL_SCHEDULE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ringveil/command.hpp"
#include "ringveil/crypto.hpp"
#include "ringveil/timelock.hpp"

// Owner-side scheduling: partial orders over devices expressed as disjoint
// chains, their linear extension, delay assignment along the token path,
// order creation and signing, and hub/owner-side verification.
namespace ringveil::schedule {

// Disjoint chains; devices in the same chain are comparable in chain order,
// devices in different chains are incomparable.
struct Schedule {
    std::vector<std::vector<Command>> chains;
    std::uint64_t epoch_us = 0;       // release instant
    std::uint64_t t_val_us = timelock::no_deadline;
};

inline std::vector<std::string> devices_of(const Schedule& s) {
    std::vector<std::string> ids;
    for (const auto& chain : s.chains)
        for (const auto& cmd : chain) ids.push_back(cmd.device_id);
    return ids;
}

// Chain invariants: no empty chain, non-decreasing exec delays within a
// chain, and each device at most once across the whole schedule. Disjoint
// chains are reflexive/antisymmetric/transitive by construction once
// uniqueness holds.
inline void validate(const Schedule& s) {
    std::set<std::string> seen;
    for (const auto& chain : s.chains) {
        if (chain.empty()) throw ScheduleError("empty chain in schedule");
        for (std::size_t i = 0; i < chain.size(); ++i) {
            if (chain[i].device_id.empty()) throw ScheduleError("empty device id in schedule");
            if (!seen.insert(chain[i].device_id).second)
                throw ScheduleError("device " + chain[i].device_id + " appears more than once");
            if (i > 0 && chain[i].exec_delay_us < chain[i - 1].exec_delay_us)
                throw ScheduleError("exec times decrease along chain at " + chain[i].device_id);
        }
    }
}

// {"chains":[[{"device":"D1","state":"on","exec_time_ms":1000},...],...],
//  "epoch_ms":0, "validity_ms":...}; times arrive in ms, held in us.
inline Schedule schedule_from_json(const nlohmann::json& j) {
    Schedule s;
    if (!j.contains("chains") || !j["chains"].is_array())
        throw ConfigError("schedule: missing \"chains\" array");
    for (const auto& jchain : j["chains"]) {
        if (!jchain.is_array()) throw ConfigError("schedule: each chain must be an array");
        std::vector<Command> chain;
        for (const auto& jcmd : jchain) {
            Command c;
            if (!jcmd.contains("device")) throw ConfigError("schedule: command missing \"device\"");
            c.device_id = jcmd["device"].get<std::string>();
            const std::string state = jcmd.value("state", "on");
            if (state == "on") c.state = SwitchState::on;
            else if (state == "off") c.state = SwitchState::off;
            else throw ConfigError("schedule: state must be \"on\" or \"off\"");
            c.exec_delay_us = jcmd.value("exec_time_ms", std::uint64_t(0)) * 1000;
            chain.push_back(std::move(c));
        }
        s.chains.push_back(std::move(chain));
    }
    s.epoch_us = j.value("epoch_ms", std::uint64_t(0)) * 1000;
    if (j.contains("validity_ms")) s.t_val_us = j["validity_ms"].get<std::uint64_t>() * 1000;
    validate(s);
    return s;
}

inline nlohmann::json schedule_to_json(const Schedule& s) {
    nlohmann::json jchains = nlohmann::json::array();
    for (const auto& chain : s.chains) {
        nlohmann::json jchain = nlohmann::json::array();
        for (const auto& cmd : chain)
            jchain.push_back({{"device", cmd.device_id},
                              {"state", to_string(cmd.state)},
                              {"exec_time_ms", cmd.exec_delay_us / 1000}});
        jchains.push_back(std::move(jchain));
    }
    nlohmann::json j{{"chains", std::move(jchains)}, {"epoch_ms", s.epoch_us / 1000}};
    if (s.t_val_us != timelock::no_deadline) j["validity_ms"] = s.t_val_us / 1000;
    return j;
}

// One linear extension of the schedule's partial order: repeatedly emit the
// smallest-id device whose chain predecessor has already been emitted.
inline std::vector<std::string> chain_order(const Schedule& s) {
    validate(s);
    std::vector<std::size_t> next(s.chains.size(), 0);
    std::vector<std::string> order;
    const std::size_t total = devices_of(s).size();
    while (order.size() < total) {
        std::optional<std::size_t> best;
        for (std::size_t c = 0; c < s.chains.size(); ++c) {
            if (next[c] >= s.chains[c].size()) continue;
            if (!best || s.chains[c][next[c]].device_id < s.chains[*best][next[*best]].device_id)
                best = c;
        }
        if (!best) throw PosetError("no available device; precedence relation is not a poset");
        order.push_back(s.chains[*best][next[*best]].device_id);
        ++next[*best];
    }
    return order;
}

// Exact count of linear extensions by factorial enumeration. Test oracle
// for chain_order; capped to keep the enumeration tractable.
inline std::uint64_t count_linear_extensions(const Schedule& s) {
    validate(s);
    std::vector<std::string> ids = devices_of(s);
    if (ids.size() > 10) throw SizeError("linear extension enumeration is capped at 10 devices");
    std::sort(ids.begin(), ids.end());
    std::map<std::string, std::size_t> position;
    std::uint64_t count = 0;
    do {
        for (std::size_t i = 0; i < ids.size(); ++i) position[ids[i]] = i;
        bool ok = true;
        for (const auto& chain : s.chains) {
            for (std::size_t i = 0; ok && i + 1 < chain.size(); ++i)
                ok = position[chain[i].device_id] < position[chain[i + 1].device_id];
            if (!ok) break;
        }
        if (ok) ++count;
    } while (std::next_permutation(ids.begin(), ids.end()));
    return count;
}

inline std::uint64_t required_slots(std::uint64_t total_devices, std::uint64_t comparable_devices) {
    if (comparable_devices > total_devices) throw DomainError("comparable count exceeds device count");
    return (total_devices - comparable_devices) + 1;
}

// Per-device artificial delays, given each device's token forward instant
// along the path (us from round start).
//
// Comparable consecutive pair (u, v): the requested delays must already be
// at least (N-1) * (fwd_v - fwd_u) apart or the schedule is rejected;
// requested values are never silently adjusted.
//
// Incomparable devices (singleton chains): delays are shifted so all of
// them actuate at one shared instant, the latest requested one. Devices
// inside multi-device chains keep their validated requests; exact
// simultaneity across distinct multi-device chains is not imposed, since it
// would contradict the separation their own chains require.
inline std::map<std::string, std::uint64_t> assign_delays(
        const Schedule& s, const std::map<std::string, std::uint64_t>& fwd_instants_us) {
    validate(s);
    std::map<std::string, std::uint64_t> delays;
    for (const auto& id : devices_of(s)) {
        auto it = fwd_instants_us.find(id);
        if (it == fwd_instants_us.end())
            throw ScheduleError("no forward instant for device " + id);
        delays[id] = 0;
    }
    const std::uint64_t total = delays.size();

    for (const auto& chain : s.chains)
        for (const auto& cmd : chain) delays[cmd.device_id] = cmd.exec_delay_us;

    for (const auto& chain : s.chains) {
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            const auto& u = chain[i];
            const auto& v = chain[i + 1];
            const std::uint64_t fu = fwd_instants_us.at(u.device_id);
            const std::uint64_t fv = fwd_instants_us.at(v.device_id);
            const std::uint64_t gap = fv > fu ? fv - fu : fu - fv;
            const std::uint64_t need = (total - 1) * gap;
            if (v.exec_delay_us - u.exec_delay_us < need)
                throw InfeasibleError("comparable pair (" + u.device_id + ", " + v.device_id +
                                      ") needs exec times at least " + std::to_string(need) +
                                      "us apart");
        }
    }

    std::vector<std::string> singletons;
    for (const auto& chain : s.chains)
        if (chain.size() == 1) singletons.push_back(chain[0].device_id);
    if (!singletons.empty()) {
        std::uint64_t shared_instant = 0;
        for (const auto& id : singletons)
            shared_instant = std::max(shared_instant, fwd_instants_us.at(id) + delays[id]);
        for (const auto& id : singletons)
            delays[id] = shared_instant - fwd_instants_us.at(id);
    }
    return delays;
}

// Optimal token slot length: the farthest assigned delay.
inline std::uint64_t slot_length(const std::map<std::string, std::uint64_t>& assigned_delays) {
    if (assigned_delays.empty()) throw ScheduleError("slot length of an empty schedule");
    std::uint64_t best = 0;
    for (const auto& [id, t] : assigned_delays) best = std::max(best, t);
    return best;
}

inline std::uint64_t slot_length(const Schedule& s,
                                 const std::map<std::string, std::uint64_t>& fwd_instants_us) {
    return slot_length(assign_delays(s, fwd_instants_us));
}

// ---- order creation ----

struct OrderedEntry {
    std::string device_id;
    Bytes blob; // hybrid-encrypted serialized puzzle
};

struct OrderedCommands {
    std::vector<OrderedEntry> entries;
};

using DevicePubKeys = std::map<std::string, std::array<std::uint8_t, 32>>;

struct CreateOrderOptions {
    std::map<std::string, std::uint64_t> fwd_instants_us; // per-device token forward instants
    std::map<std::string, std::uint64_t> solver_rates;    // per-device S; defaults to 1e6
    std::uint64_t default_solver_rate = 1'000'000;        // 1 squaring per virtual microsecond
};

// Algorithm: linearize the schedule, assign delays, and for each device in
// order generate a puzzle whose difficulty realizes its delay at that
// device's solver rate, then encrypt the puzzle to the device's public key.
inline OrderedCommands create_order(const Schedule& s, const DevicePubKeys& device_pubkeys,
                                    const timelock::PuzzleParams& params,
                                    const CreateOrderOptions& opt, Rng& rng) {
    validate(s);
    const std::vector<std::string> order = chain_order(s);
    for (const auto& id : order)
        if (!device_pubkeys.contains(id))
            throw RegistryError("no public key registered for device " + id);

    std::map<std::string, std::uint64_t> fwd = opt.fwd_instants_us;
    if (fwd.empty()) {
        // No path estimate supplied: treat forward instants as uniform.
        std::uint64_t t = 0;
        for (const auto& id : order) fwd[id] = t++;
    }
    const auto delays = assign_delays(s, fwd);

    std::map<std::string, Command> command_of;
    for (const auto& chain : s.chains)
        for (const auto& cmd : chain) command_of[cmd.device_id] = cmd;

    OrderedCommands out;
    for (const auto& id : order) {
        const auto rate_it = opt.solver_rates.find(id);
        const std::uint64_t rate = rate_it == opt.solver_rates.end() ? opt.default_solver_rate
                                                                     : rate_it->second;
        const std::uint64_t t_hat =
            timelock::difficulty(rate, static_cast<double>(delays.at(id)) / 1e6);
        Command cmd = command_of.at(id);
        cmd.exec_delay_us = delays.at(id);
        const Bigint key = random_below(rng, params.n);
        const timelock::Puzzle puzzle =
            timelock::puzzle_gen(params, t_hat, cmd, key, s.t_val_us, rng);
        OrderedEntry entry;
        entry.device_id = id;
        entry.blob = crypto::hybrid_encrypt(device_pubkeys.at(id), timelock::encode_puzzle(puzzle), rng);
        out.entries.push_back(std::move(entry));
    }
    return out;
}

// Wire form of c_l: [2B entry_count] then per entry
// [2B id_len][id][4B blob_len][blob].
inline Bytes encode_ordered_commands(const OrderedCommands& c) {
    if (c.entries.size() > 0xffff) throw DomainError("too many order entries");
    Bytes out;
    put_u16(out, static_cast<std::uint16_t>(c.entries.size()));
    for (const auto& e : c.entries) {
        if (e.device_id.size() > 0xffff) throw DomainError("device id too long");
        put_u16(out, static_cast<std::uint16_t>(e.device_id.size()));
        out.insert(out.end(), e.device_id.begin(), e.device_id.end());
        put_u32(out, static_cast<std::uint32_t>(e.blob.size()));
        out.insert(out.end(), e.blob.begin(), e.blob.end());
    }
    return out;
}

inline OrderedCommands decode_ordered_commands(ByteView data) {
    ByteReader r(data);
    OrderedCommands c;
    const std::uint16_t count = r.u16();
    for (std::uint16_t i = 0; i < count; ++i) {
        OrderedEntry e;
        ByteView id = r.raw(r.u16());
        e.device_id.assign(id.begin(), id.end());
        e.blob = r.bytes(r.u32());
        c.entries.push_back(std::move(e));
    }
    if (!r.done()) throw FramingError("trailing bytes after ordered commands");
    return c;
}

// ---- signing ----

struct SignedOrder {
    std::string owner_id;
    std::string hub_id;
    OrderedCommands commands;
    crypto::Digest digest{};
    crypto::Signature signature{};
};

// Canonical bytes the digest is computed over: length-prefixed owner and
// hub ids, then each entry as [2B id_len][id][4B blob_len][blob].
inline Bytes canonical_order_encoding(const std::string& owner_id, const std::string& hub_id,
                                      const OrderedCommands& commands) {
    Bytes out;
    put_u16(out, static_cast<std::uint16_t>(owner_id.size()));
    out.insert(out.end(), owner_id.begin(), owner_id.end());
    put_u16(out, static_cast<std::uint16_t>(hub_id.size()));
    out.insert(out.end(), hub_id.begin(), hub_id.end());
    for (const auto& e : commands.entries) {
        put_u16(out, static_cast<std::uint16_t>(e.device_id.size()));
        out.insert(out.end(), e.device_id.begin(), e.device_id.end());
        put_u32(out, static_cast<std::uint32_t>(e.blob.size()));
        out.insert(out.end(), e.blob.begin(), e.blob.end());
    }
    return out;
}

inline SignedOrder sign_order(const crypto::SignKeyPair& owner_keys, const std::string& owner_id,
                              const std::string& hub_id, OrderedCommands commands) {
    SignedOrder order;
    order.owner_id = owner_id;
    order.hub_id = hub_id;
    order.commands = std::move(commands);
    order.digest = crypto::sha256(canonical_order_encoding(order.owner_id, order.hub_id, order.commands));
    order.signature = crypto::sign(owner_keys, order.digest);
    return order;
}

// Hub side: recompute the digest, compare, and verify the signature.
inline bool verify_order(const SignedOrder& order,
                         const std::array<std::uint8_t, 32>& owner_sign_pk) {
    const crypto::Digest local =
        crypto::sha256(canonical_order_encoding(order.owner_id, order.hub_id, order.commands));
    if (local != order.digest) return false;
    return crypto::sign_verify(owner_sign_pk, order.digest, order.signature);
}

} // namespace ringveil::schedule

#endif
