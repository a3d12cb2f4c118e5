#ifndef RINGVEIL_COMMAND_HPP
#define RINGVEIL_COMMAND_HPP

#include <cstdint>
#include <string>

#include "ringveil/bytes.hpp"

namespace ringveil {

enum class SwitchState : std::uint8_t { off = 0, on = 1 };

inline const char* to_string(SwitchState s) { return s == SwitchState::on ? "on" : "off"; }

// One actuation order for one device. exec_delay_us is the artificial
// delay between token forwarding and actuation, i.e. the solver delay the
// puzzle difficulty is derived from.
struct Command {
    std::string device_id;
    SwitchState state = SwitchState::off;
    std::uint64_t exec_delay_us = 0;

    bool operator==(const Command&) const = default;
};

// Wire form: [2B id_len][id][1B state][8B exec_delay_us].
inline Bytes encode_command(const Command& c) {
    if (c.device_id.size() > 0xffff) throw DomainError("device id too long");
    Bytes out;
    put_u16(out, static_cast<std::uint16_t>(c.device_id.size()));
    out.insert(out.end(), c.device_id.begin(), c.device_id.end());
    out.push_back(static_cast<std::uint8_t>(c.state));
    put_u64(out, c.exec_delay_us);
    return out;
}

inline Command decode_command(ByteReader& r) {
    Command c;
    const std::uint16_t len = r.u16();
    ByteView id = r.raw(len);
    c.device_id.assign(id.begin(), id.end());
    const std::uint8_t state = r.bytes(1)[0];
    if (state > 1) throw FramingError("invalid switch state");
    c.state = static_cast<SwitchState>(state);
    c.exec_delay_us = r.u64();
    return c;
}

inline Command decode_command(ByteView data) {
    ByteReader r(data);
    Command c = decode_command(r);
    if (!r.done()) throw FramingError("trailing bytes after command");
    return c;
}

} // namespace ringveil

#endif
