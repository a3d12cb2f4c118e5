#ifndef RINGVEIL_TOKEN_HPP
#define RINGVEIL_TOKEN_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringveil/crypto.hpp"
#include "ringveil/rng.hpp"
#include "ringveil/schedule.hpp"

// The circulating token: command field, data field and toggle bit string,
// all at fixed capacity so the sealed message is the same length every
// round no matter what it carries.
namespace ringveil::token {

struct TokenConfig {
    std::uint32_t command_capacity = 0;
    std::uint32_t data_capacity = 0;
    std::uint16_t device_count = 0;

    bool operator==(const TokenConfig&) const = default;
};

inline std::size_t toggle_bytes(std::uint16_t device_count) {
    return (static_cast<std::size_t>(device_count) + 7) / 8;
}

// Plaintext size is a function of the configuration only:
// [8B token_id][4B counter][4B C][C][4B D][D][2B N][ceil(N/8) toggle bits]
inline std::size_t encoded_token_size(const TokenConfig& cfg) {
    return 8 + 4 + 4 + cfg.command_capacity + 4 + cfg.data_capacity + 2 + toggle_bytes(cfg.device_count);
}

inline constexpr std::size_t seal_overhead = crypto::nonce_bytes + crypto::tag_bytes;

inline std::size_t sealed_token_size(const TokenConfig& cfg) {
    return encoded_token_size(cfg) + seal_overhead;
}

struct Token {
    std::uint64_t token_id = 0;
    std::uint32_t counter = 0;
    Bytes command_field; // exactly command_capacity bytes
    Bytes data_field;    // exactly data_capacity bytes
    Bytes toggle_bits;   // exactly ceil(N/8) bytes, bit i = bit (7-(i%8)) of byte i/8
    std::uint16_t device_count = 0;

    bool operator==(const Token&) const = default;

    TokenConfig config() const {
        return TokenConfig{static_cast<std::uint32_t>(command_field.size()),
                           static_cast<std::uint32_t>(data_field.size()), device_count};
    }
};

// Fresh token with rng-filled command and data fields and clear toggle bits.
inline Token make_token(const TokenConfig& cfg, std::uint64_t token_id, std::uint32_t counter,
                        Rng& rng) {
    Token t;
    t.token_id = token_id;
    t.counter = counter;
    t.command_field = rng.bytes(cfg.command_capacity);
    t.data_field = rng.bytes(cfg.data_capacity);
    t.toggle_bits.assign(toggle_bytes(cfg.device_count), 0);
    t.device_count = cfg.device_count;
    return t;
}

inline Bytes encode_token(const Token& t) {
    Bytes out;
    out.reserve(encoded_token_size(t.config()));
    put_u64(out, t.token_id);
    put_u32(out, t.counter);
    put_u32(out, static_cast<std::uint32_t>(t.command_field.size()));
    out.insert(out.end(), t.command_field.begin(), t.command_field.end());
    put_u32(out, static_cast<std::uint32_t>(t.data_field.size()));
    out.insert(out.end(), t.data_field.begin(), t.data_field.end());
    put_u16(out, t.device_count);
    if (t.toggle_bits.size() != toggle_bytes(t.device_count))
        throw DomainError("toggle bit string has wrong width");
    out.insert(out.end(), t.toggle_bits.begin(), t.toggle_bits.end());
    return out;
}

inline Token decode_token(ByteView data) {
    ByteReader r(data);
    Token t;
    t.token_id = r.u64();
    t.counter = r.u32();
    t.command_field = r.bytes(r.u32());
    t.data_field = r.bytes(r.u32());
    t.device_count = r.u16();
    t.toggle_bits = r.bytes(toggle_bytes(t.device_count));
    if (!r.done()) throw FramingError("trailing bytes after token");
    return t;
}

// ---- sealing under the shared ring key ----

struct SealedToken {
    crypto::Nonce nonce{};
    Bytes ciphertext; // same length as the plaintext token
    crypto::Tag tag{};
};

inline std::size_t sealed_size(const SealedToken& s) {
    return crypto::nonce_bytes + s.ciphertext.size() + crypto::tag_bytes;
}

inline SealedToken seal(const Token& t, const crypto::Key& ring_key, Rng& rng) {
    SealedToken sealed;
    sealed.nonce = crypto::make_nonce(rng);
    crypto::aead_encrypt_detached(ring_key, sealed.nonce, encode_token(t), sealed.ciphertext, sealed.tag);
    return sealed;
}

inline Token open(const SealedToken& sealed, const crypto::Key& ring_key) {
    return decode_token(crypto::aead_decrypt_detached(ring_key, sealed.nonce, sealed.ciphertext, sealed.tag));
}

inline Bytes encode_sealed(const SealedToken& s) {
    Bytes out;
    out.reserve(sealed_size(s));
    out.insert(out.end(), s.nonce.begin(), s.nonce.end());
    out.insert(out.end(), s.ciphertext.begin(), s.ciphertext.end());
    out.insert(out.end(), s.tag.begin(), s.tag.end());
    return out;
}

inline SealedToken decode_sealed(ByteView data) {
    if (data.size() < seal_overhead) throw FramingError("sealed token too short");
    SealedToken s;
    std::copy(data.begin(), data.begin() + crypto::nonce_bytes, s.nonce.begin());
    s.ciphertext.assign(data.begin() + crypto::nonce_bytes, data.end() - crypto::tag_bytes);
    std::copy(data.end() - crypto::tag_bytes, data.end(), s.tag.begin());
    return s;
}

// ---- command field ----

// Command field layout: [4B encoded_cl_len][encoded c_l][random filler].
// An empty c_l writes a zero length and a fully random remainder, so an
// idle round is byte-for-byte the same shape as a loaded one.
inline Token load_commands(Token t, const schedule::OrderedCommands& c_l, Rng& rng) {
    const std::size_t capacity = t.command_field.size();
    Bytes field = rng.bytes(capacity);
    if (!c_l.entries.empty()) {
        const Bytes encoded = schedule::encode_ordered_commands(c_l);
        if (capacity < 4 || encoded.size() + 4 > capacity)
            throw CapacityError("ordered commands (" + std::to_string(encoded.size()) +
                                " bytes) exceed command capacity");
        Bytes prefix;
        put_u32(prefix, static_cast<std::uint32_t>(encoded.size()));
        std::copy(prefix.begin(), prefix.end(), field.begin());
        std::copy(encoded.begin(), encoded.end(), field.begin() + 4);
    } else if (capacity >= 4) {
        field[0] = field[1] = field[2] = field[3] = 0;
    }
    t.command_field = std::move(field);
    return t;
}

// The reverse parse. Random filler can only misparse into entries whose
// blobs then fail authentication at every device, so a nullopt or garbage
// result is harmless; a zero length marks an idle field.
inline std::optional<schedule::OrderedCommands> extract_commands(const Token& t) {
    if (t.command_field.size() < 4) return std::nullopt;
    ByteReader r(t.command_field);
    const std::uint32_t len = r.u32();
    if (len == 0 || len > t.command_field.size() - 4) return std::nullopt;
    try {
        return schedule::decode_ordered_commands(ByteView(t.command_field).subspan(4, len));
    } catch (const FramingError&) {
        return std::nullopt;
    }
}

// ---- toggle bits ----

inline bool toggle_bit(const Token& t, std::uint16_t index) {
    if (index >= t.device_count) throw DomainError("toggle index out of range");
    return (t.toggle_bits[index / 8] >> (7 - index % 8)) & 1;
}

// Flips bit `index`; everything else is untouched.
inline Token toggle_request(Token t, std::uint16_t index) {
    if (index >= t.device_count) throw DomainError("toggle index out of range");
    t.toggle_bits[index / 8] ^= static_cast<std::uint8_t>(1u << (7 - index % 8));
    return t;
}

// ---- data field ----

struct SubField {
    std::string device_id;
    std::uint32_t offset = 0;
    std::uint32_t size = 0;
};

struct DataLayout {
    std::vector<SubField> granted;      // in grant order, contiguous from offset 0
    std::vector<std::string> deferred;  // FIFO; did not fit this round
};

struct Grant {
    std::string device_id;
    std::uint32_t size = 0;
};

// Packs grants into the data field front-to-back in FIFO order; whatever
// does not fit is deferred to the next round.
inline DataLayout partition_data_field(std::uint32_t capacity, const std::vector<Grant>& grants) {
    DataLayout layout;
    std::uint32_t offset = 0;
    for (const auto& g : grants) {
        if (g.size > capacity || offset > capacity - g.size) {
            layout.deferred.push_back(g.device_id);
            continue;
        }
        layout.granted.push_back(SubField{g.device_id, offset, g.size});
        offset += g.size;
    }
    return layout;
}

// Hub-side memory of the random pads written into granted sub-fields,
// keyed by (round, sub-field index); entries vanish once recovered.
class PadLedger {
public:
    void remember(std::uint64_t round_id, std::uint32_t sub_field, Bytes pad) {
        pads_[{round_id, sub_field}] = std::move(pad);
    }

    Bytes take(std::uint64_t round_id, std::uint32_t sub_field) {
        auto it = pads_.find({round_id, sub_field});
        if (it == pads_.end())
            throw LedgerError("no pad recorded for round " + std::to_string(round_id) +
                              " sub-field " + std::to_string(sub_field));
        Bytes pad = std::move(it->second);
        pads_.erase(it);
        return pad;
    }

    std::size_t outstanding() const { return pads_.size(); }

private:
    std::map<std::pair<std::uint64_t, std::uint32_t>, Bytes> pads_;
};

// Hub side, before sealing: fill the whole data field with fresh random
// bytes and remember the pad of every granted sub-field.
inline Token fill_data_field(Token t, const DataLayout& layout, std::uint64_t round_id,
                             PadLedger& ledger, Rng& rng) {
    t.data_field = rng.bytes(t.data_field.size());
    for (std::uint32_t i = 0; i < layout.granted.size(); ++i) {
        const SubField& sf = layout.granted[i];
        if (std::size_t(sf.offset) + sf.size > t.data_field.size())
            throw CapacityError("sub-field exceeds data capacity");
        ledger.remember(round_id, i,
                        Bytes(t.data_field.begin() + sf.offset, t.data_field.begin() + sf.offset + sf.size));
    }
    return t;
}

// Device side: frame the payload as [4B len][payload][random pad] and XOR
// it over the granted sub-field. The field keeps its exact size, and to an
// observer random-pad-only and payload-carrying bytes are both uniform.
inline Token overwrite_data(Token t, const SubField& sub_field, ByteView payload, Rng& rng) {
    if (std::size_t(sub_field.offset) + sub_field.size > t.data_field.size())
        throw CapacityError("sub-field exceeds data capacity");
    if (sub_field.size < 4 || payload.size() > sub_field.size - 4)
        throw CapacityError("payload of " + std::to_string(payload.size()) +
                            " bytes exceeds sub-field of " + std::to_string(sub_field.size));
    Bytes framed;
    framed.reserve(sub_field.size);
    put_u32(framed, static_cast<std::uint32_t>(payload.size()));
    framed.insert(framed.end(), payload.begin(), payload.end());
    Bytes pad = rng.bytes(sub_field.size - framed.size());
    framed.insert(framed.end(), pad.begin(), pad.end());
    for (std::uint32_t i = 0; i < sub_field.size; ++i)
        t.data_field[sub_field.offset + i] ^= framed[i];
    return t;
}

// Hub side, after the round: unmask b_o with the remembered pad and strip
// the frame. An untouched sub-field unmasks to a zero length prefix, i.e.
// no payload.
inline Bytes recover_data(PadLedger& ledger, const Token& t, std::uint64_t round_id,
                          std::uint32_t sub_field_index, const SubField& sub_field) {
    if (std::size_t(sub_field.offset) + sub_field.size > t.data_field.size())
        throw CapacityError("sub-field exceeds data capacity");
    const Bytes pad = ledger.take(round_id, sub_field_index);
    if (pad.size() != sub_field.size) throw LedgerError("pad width does not match sub-field");
    Bytes plain(sub_field.size);
    for (std::uint32_t i = 0; i < sub_field.size; ++i)
        plain[i] = t.data_field[sub_field.offset + i] ^ pad[i];
    ByteReader r(plain);
    const std::uint32_t len = r.u32();
    if (len > sub_field.size - 4)
        throw FramingError("sub-field length prefix exceeds sub-field size");
    return r.bytes(len);
}

} // namespace ringveil::token

#endif
