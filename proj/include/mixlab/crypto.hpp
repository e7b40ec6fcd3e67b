#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "mixlab/common.hpp"

namespace mixlab::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256_tagged(std::string_view tag, std::span<const std::uint8_t> data);

// HMAC-SHA256 with precomputed inner/outer pads; eval() is two short hashes.
class HmacKey {
 public:
  explicit HmacKey(std::span<const std::uint8_t> key);
  Digest eval(std::span<const std::uint8_t> msg) const;

 private:
  std::array<std::uint8_t, 64> ipad_;
  std::array<std::uint8_t, 64> opad_;
};

// AES-128 single-block permutation, used as an invertible mapping from
// 128-bit counters to opaque handles.
class BlockCipher {
 public:
  explicit BlockCipher(const std::array<std::uint8_t, 16>& key);
  ~BlockCipher();
  BlockCipher(const BlockCipher&) = delete;
  BlockCipher& operator=(const BlockCipher&) = delete;

  std::array<std::uint8_t, 16> encrypt(const std::array<std::uint8_t, 16>& block) const;
  std::array<std::uint8_t, 16> decrypt(const std::array<std::uint8_t, 16>& block) const;

 private:
  void* enc_;
  void* dec_;
};

// AEAD (AES-256-GCM). Ciphertext layout: body || 16-byte tag.
Bytes aead_encrypt(const Digest& key, std::span<const std::uint8_t> iv,
                   std::span<const std::uint8_t> plaintext);
// Returns false on authentication failure.
bool aead_decrypt(const Digest& key, std::span<const std::uint8_t> iv,
                  std::span<const std::uint8_t> ciphertext, Bytes& plaintext_out);

// X25519 key agreement.
constexpr std::size_t kX25519KeyLen = 32;
struct X25519KeyPair {
  std::array<std::uint8_t, kX25519KeyLen> secret;
  std::array<std::uint8_t, kX25519KeyLen> public_key;
};
X25519KeyPair x25519_keypair_from_seed(const std::array<std::uint8_t, kX25519KeyLen>& seed);
std::array<std::uint8_t, kX25519KeyLen> x25519_shared(
    const std::array<std::uint8_t, kX25519KeyLen>& secret,
    const std::array<std::uint8_t, kX25519KeyLen>& peer_public);

}  // namespace mixlab::crypto
