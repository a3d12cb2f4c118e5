#ifndef RINGVEIL_BYTES_HPP
#define RINGVEIL_BYTES_HPP

#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ringveil/error.hpp"

namespace ringveil {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

// Cursor over a byte view; every read is bounds-checked.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(take(2, "u16")); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4, "u32")); }
    std::uint64_t u64() { return take(8, "u64"); }

    ByteView raw(std::size_t len) {
        if (len > remaining()) throw FramingError("truncated input: need " + std::to_string(len) + " bytes");
        ByteView v = data_.subspan(pos_, len);
        pos_ += len;
        return v;
    }

    Bytes bytes(std::size_t len) {
        ByteView v = raw(len);
        return Bytes(v.begin(), v.end());
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::uint64_t take(std::size_t n, const char* what) {
        if (n > remaining()) throw FramingError(std::string("truncated input reading ") + what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += n;
        return v;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

inline std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

inline Bytes from_hex(const std::string& hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw FramingError("invalid hex digit");
    };
    if (hex.size() % 2 != 0) throw FramingError("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
    return out;
}

} // namespace ringveil

#endif
