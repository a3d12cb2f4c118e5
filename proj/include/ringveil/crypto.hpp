#ifndef RINGVEIL_CRYPTO_HPP
#define RINGVEIL_CRYPTO_HPP

#include <array>
#include <cstring>
#include <string_view>

#include <sodium.h>

#include "ringveil/bytes.hpp"
#include "ringveil/rng.hpp"

// Thin wrappers over libsodium. Everything that needs randomness takes an
// Rng so ciphertexts are reproducible under a fixed seed; libsodium's own
// entropy source is never used for protocol material.
namespace ringveil::crypto {

using Digest = std::array<std::uint8_t, 32>;
using Key = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 12>;
using Tag = std::array<std::uint8_t, 16>;
using Signature = std::array<std::uint8_t, 64>;

inline constexpr std::size_t nonce_bytes = 12;
inline constexpr std::size_t tag_bytes = 16;

inline void init() {
    if (sodium_init() < 0) throw CryptoError("libsodium initialization failed");
}

inline Digest sha256(ByteView data) {
    init();
    Digest d;
    crypto_hash_sha256(d.data(), data.data(), data.size());
    return d;
}

inline Nonce make_nonce(Rng& rng) {
    Nonce n;
    rng.fill(n.data(), n.size());
    return n;
}

// AEAD is ChaCha20-Poly1305 (IETF): 12-byte nonce, 16-byte tag, and a
// ciphertext exactly as long as the plaintext in detached mode.

inline Bytes aead_encrypt(const Key& key, const Nonce& nonce, ByteView plaintext) {
    init();
    Bytes out(plaintext.size() + tag_bytes);
    unsigned long long clen = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &clen,
                                              plaintext.data(), plaintext.size(),
                                              nullptr, 0, nullptr,
                                              nonce.data(), key.data());
    out.resize(static_cast<std::size_t>(clen));
    return out;
}

inline Bytes aead_decrypt(const Key& key, const Nonce& nonce, ByteView ct_and_tag) {
    init();
    if (ct_and_tag.size() < tag_bytes) throw TamperError("ciphertext shorter than tag");
    Bytes out(ct_and_tag.size() - tag_bytes);
    unsigned long long mlen = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &mlen, nullptr,
                                                  ct_and_tag.data(), ct_and_tag.size(),
                                                  nullptr, 0,
                                                  nonce.data(), key.data()) != 0)
        throw TamperError("authenticated decryption failed");
    out.resize(static_cast<std::size_t>(mlen));
    return out;
}

inline void aead_encrypt_detached(const Key& key, const Nonce& nonce, ByteView plaintext,
                                  Bytes& ciphertext, Tag& tag) {
    init();
    ciphertext.resize(plaintext.size());
    unsigned long long taglen = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt_detached(ciphertext.data(), tag.data(), &taglen,
                                                       plaintext.data(), plaintext.size(),
                                                       nullptr, 0, nullptr,
                                                       nonce.data(), key.data());
}

inline Bytes aead_decrypt_detached(const Key& key, const Nonce& nonce,
                                   ByteView ciphertext, const Tag& tag) {
    init();
    Bytes out(ciphertext.size());
    if (crypto_aead_chacha20poly1305_ietf_decrypt_detached(out.data(), nullptr,
                                                           ciphertext.data(), ciphertext.size(),
                                                           tag.data(), nullptr, 0,
                                                           nonce.data(), key.data()) != 0)
        throw TamperError("authenticated decryption failed");
    return out;
}

// Ed25519 signing identity.
struct SignKeyPair {
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk;
};

inline SignKeyPair sign_keypair_from_seed(const Key& seed) {
    init();
    SignKeyPair kp;
    crypto_sign_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
    return kp;
}

inline Signature sign(const SignKeyPair& keys, ByteView message) {
    init();
    Signature sig;
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), keys.sk.data());
    return sig;
}

inline bool sign_verify(const std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>& pk,
                        ByteView message, const Signature& sig) {
    init();
    return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), pk.data()) == 0;
}

// X25519 key-agreement identity used for puzzle delivery.
struct BoxKeyPair {
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> pk;
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> sk;
};

inline BoxKeyPair box_keypair_from_seed(const Key& seed) {
    init();
    BoxKeyPair kp;
    crypto_box_seed_keypair(kp.pk.data(), kp.sk.data(), seed.data());
    return kp;
}

namespace detail {
inline Key hybrid_session_key(const std::array<std::uint8_t, 32>& shared,
                              const std::uint8_t* epk, const std::uint8_t* rpk) {
    Bytes material;
    material.insert(material.end(), shared.begin(), shared.end());
    material.insert(material.end(), epk, epk + 32);
    material.insert(material.end(), rpk, rpk + 32);
    return sha256(material);
}
} // namespace detail

// ECIES-style hybrid encryption to a recipient X25519 public key:
// [32-byte ephemeral pk][12-byte nonce][ciphertext || 16-byte tag].
// The ephemeral key comes from the caller's Rng, not the system entropy
// pool, so order blobs are reproducible under a fixed seed.
inline Bytes hybrid_encrypt(const std::array<std::uint8_t, 32>& recipient_pk,
                            ByteView plaintext, Rng& rng) {
    init();
    Key eseed;
    rng.fill(eseed.data(), eseed.size());
    BoxKeyPair eph = box_keypair_from_seed(eseed);
    std::array<std::uint8_t, 32> shared;
    if (crypto_scalarmult(shared.data(), eph.sk.data(), recipient_pk.data()) != 0)
        throw CryptoError("X25519 key agreement failed");
    const Key session = detail::hybrid_session_key(shared, eph.pk.data(), recipient_pk.data());
    const Nonce nonce = make_nonce(rng);

    Bytes out;
    out.insert(out.end(), eph.pk.begin(), eph.pk.end());
    out.insert(out.end(), nonce.begin(), nonce.end());
    Bytes ct = aead_encrypt(session, nonce, plaintext);
    out.insert(out.end(), ct.begin(), ct.end());
    return out;
}

inline Bytes hybrid_decrypt(const BoxKeyPair& recipient, ByteView blob) {
    init();
    if (blob.size() < 32 + nonce_bytes + tag_bytes) throw TamperError("hybrid blob too short");
    std::array<std::uint8_t, 32> epk;
    std::memcpy(epk.data(), blob.data(), 32);
    Nonce nonce;
    std::memcpy(nonce.data(), blob.data() + 32, nonce_bytes);
    std::array<std::uint8_t, 32> shared;
    if (crypto_scalarmult(shared.data(), recipient.sk.data(), epk.data()) != 0)
        throw TamperError("hybrid blob rejected: bad ephemeral key");
    const Key session = detail::hybrid_session_key(shared, epk.data(), recipient.pk.data());
    return aead_decrypt(session, nonce, blob.subspan(32 + nonce_bytes));
}

// 32-byte sub-seed for an entity's key material: sha256(seed_be || label).
inline Key derive_seed(std::uint64_t master_seed, std::string_view label) {
    Bytes material;
    put_u64(material, master_seed);
    material.insert(material.end(), label.begin(), label.end());
    return sha256(material);
}

} // namespace ringveil::crypto

#endif
