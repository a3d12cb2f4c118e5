#ifndef RINGVEIL_TRACE_HPP
#define RINGVEIL_TRACE_HPP

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ringveil/bytes.hpp"

// Observable artifacts of a run. ChannelEvent is deliberately metadata
// only: an eavesdropper sees who talked to whom, when, and how many bytes,
// never the payload.
namespace ringveil {

struct ChannelEvent {
    std::uint64_t time_us = 0;
    std::string sender;
    std::string receiver;
    std::uint32_t length = 0;

    bool operator==(const ChannelEvent&) const = default;
};

struct HopTiming {
    std::string device_id;
    std::uint64_t t_rcv_us = 0;
    std::uint64_t t_fwd_us = 0;
};

struct RoundTrace {
    std::uint64_t round_id = 0;
    std::string ring_id;
    std::uint64_t t_h_beg_us = 0;
    std::uint64_t t_h_end_us = 0;
    std::vector<HopTiming> hops;
    std::uint64_t t_sum_us = 0;   // (t_h_end - t_h_beg) - sum of per-device dwell
    std::uint32_t sealed_length = 0;

    std::uint64_t duration_us() const { return t_h_end_us - t_h_beg_us; }
};

// One solved-and-executed command, as the device reports it: when it
// actuated, how hard the puzzle was, and the modular value its solver
// produced (hex), which the owner checks against the totient shortcut.
struct ExecutionRecord {
    std::string device_id;
    std::uint64_t t_com_us = 0;
    std::uint64_t t_hat = 0;
    std::string solve_value_hex;
    std::uint64_t squarings = 0;
};

struct UploadRecord {
    std::string device_id;
    std::uint64_t round_id = 0;
    std::uint64_t recovered_at_us = 0;
    std::uint32_t payload_bytes = 0;
    std::string payload_sha256_hex;
};

inline void write_events_csv(std::ostream& os, const std::vector<ChannelEvent>& events) {
    os << "time_us,sender,receiver,bytes\n";
    for (const auto& e : events)
        os << e.time_us << ',' << e.sender << ',' << e.receiver << ',' << e.length << '\n';
}

inline std::vector<ChannelEvent> read_events_csv(std::istream& is) {
    std::vector<ChannelEvent> events;
    std::string line;
    if (!std::getline(is, line)) return events;
    if (line != "time_us,sender,receiver,bytes")
        throw FramingError("unexpected event CSV header: " + line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ChannelEvent e;
        std::string field;
        try {
            if (!std::getline(ss, field, ',')) throw FramingError("");
            e.time_us = std::stoull(field);
            if (!std::getline(ss, e.sender, ',')) throw FramingError("");
            if (!std::getline(ss, e.receiver, ',')) throw FramingError("");
            if (!std::getline(ss, field, ',')) throw FramingError("");
            e.length = static_cast<std::uint32_t>(std::stoul(field));
        } catch (const std::exception&) {
            throw FramingError("malformed event CSV at line " + std::to_string(lineno));
        }
        events.push_back(std::move(e));
    }
    return events;
}

inline void write_rounds_csv(std::ostream& os, const std::vector<RoundTrace>& rounds) {
    os << "round_id,ring_id,t_h_beg_us,t_h_end_us,duration_us,t_sum_us,sealed_length\n";
    for (const auto& r : rounds)
        os << r.round_id << ',' << r.ring_id << ',' << r.t_h_beg_us << ',' << r.t_h_end_us << ','
           << r.duration_us() << ',' << r.t_sum_us << ',' << r.sealed_length << '\n';
}

} // namespace ringveil

#endif
