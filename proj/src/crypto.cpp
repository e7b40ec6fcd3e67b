#include "mixlab/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace mixlab {

std::string hex_encode(const std::uint8_t* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

}  // namespace mixlab

namespace mixlab::crypto {

namespace {

[[noreturn]] void crypto_fail(const char* what) {
  throw std::runtime_error(std::string("crypto failure: ") + what);
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d;
  unsigned int n = 0;
  if (EVP_Digest(data.data(), data.size(), d.data(), &n, EVP_sha256(), nullptr) != 1 || n != 32)
    crypto_fail("sha256");
  return d;
}

Digest sha256_tagged(std::string_view tag, std::span<const std::uint8_t> data) {
  Bytes buf;
  buf.reserve(tag.size() + 1 + data.size());
  buf.insert(buf.end(), tag.begin(), tag.end());
  buf.push_back(0x00);
  buf.insert(buf.end(), data.begin(), data.end());
  return sha256(buf);
}

HmacKey::HmacKey(std::span<const std::uint8_t> key) {
  std::array<std::uint8_t, 64> k{};
  if (key.size() > 64) {
    Digest d = sha256(key);
    std::memcpy(k.data(), d.data(), d.size());
  } else {
    std::memcpy(k.data(), key.data(), key.size());
  }
  for (std::size_t i = 0; i < 64; ++i) {
    ipad_[i] = k[i] ^ 0x36;
    opad_[i] = k[i] ^ 0x5c;
  }
}

Digest HmacKey::eval(std::span<const std::uint8_t> msg) const {
  // Messages here are short (PRF inputs); a stack buffer avoids per-call
  // allocation.
  std::uint8_t buf[64 + 96];
  std::memcpy(buf, ipad_.data(), 64);
  std::size_t msg_len = msg.size();
  Bytes heap;
  const std::uint8_t* inner_buf = buf;
  std::size_t inner_len = 64 + msg_len;
  if (msg_len <= 96) {
    std::memcpy(buf + 64, msg.data(), msg_len);
  } else {
    heap.reserve(64 + msg_len);
    heap.insert(heap.end(), ipad_.begin(), ipad_.end());
    heap.insert(heap.end(), msg.begin(), msg.end());
    inner_buf = heap.data();
  }
  Digest inner;
  unsigned int n = 0;
  if (EVP_Digest(inner_buf, inner_len, inner.data(), &n, EVP_sha256(), nullptr) != 1)
    crypto_fail("hmac inner");
  std::uint8_t outer[64 + 32];
  std::memcpy(outer, opad_.data(), 64);
  std::memcpy(outer + 64, inner.data(), 32);
  Digest out;
  if (EVP_Digest(outer, sizeof(outer), out.data(), &n, EVP_sha256(), nullptr) != 1)
    crypto_fail("hmac outer");
  return out;
}

BlockCipher::BlockCipher(const std::array<std::uint8_t, 16>& key) {
  auto* enc = EVP_CIPHER_CTX_new();
  auto* dec = EVP_CIPHER_CTX_new();
  if (!enc || !dec) crypto_fail("ctx alloc");
  if (EVP_EncryptInit_ex(enc, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1 ||
      EVP_DecryptInit_ex(dec, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1)
    crypto_fail("aes init");
  EVP_CIPHER_CTX_set_padding(enc, 0);
  EVP_CIPHER_CTX_set_padding(dec, 0);
  enc_ = enc;
  dec_ = dec;
}

BlockCipher::~BlockCipher() {
  EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(enc_));
  EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(dec_));
}

std::array<std::uint8_t, 16> BlockCipher::encrypt(const std::array<std::uint8_t, 16>& block) const {
  std::array<std::uint8_t, 16> out;
  int len = 0;
  if (EVP_EncryptUpdate(static_cast<EVP_CIPHER_CTX*>(enc_), out.data(), &len, block.data(), 16) != 1 ||
      len != 16)
    crypto_fail("aes encrypt");
  return out;
}

std::array<std::uint8_t, 16> BlockCipher::decrypt(const std::array<std::uint8_t, 16>& block) const {
  std::array<std::uint8_t, 16> out;
  int len = 0;
  if (EVP_DecryptUpdate(static_cast<EVP_CIPHER_CTX*>(dec_), out.data(), &len, block.data(), 16) != 1 ||
      len != 16)
    crypto_fail("aes decrypt");
  return out;
}

Bytes aead_encrypt(const Digest& key, std::span<const std::uint8_t> iv,
                   std::span<const std::uint8_t> plaintext) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) crypto_fail("ctx alloc");
  Bytes out(plaintext.size() + 16);
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr) == 1 &&
            EVP_EncryptInit_ex(ctx, nullptr, nullptr, key.data(), iv.data()) == 1 &&
            EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(),
                              static_cast<int>(plaintext.size())) == 1;
  int fin = 0;
  ok = ok && EVP_EncryptFinal_ex(ctx, out.data() + len, &fin) == 1 &&
       EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, 16, out.data() + plaintext.size()) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) crypto_fail("gcm encrypt");
  return out;
}

bool aead_decrypt(const Digest& key, std::span<const std::uint8_t> iv,
                  std::span<const std::uint8_t> ciphertext, Bytes& plaintext_out) {
  if (ciphertext.size() < 16) return false;
  const std::size_t body = ciphertext.size() - 16;
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) crypto_fail("ctx alloc");
  plaintext_out.assign(body, 0);
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr) == 1 &&
            EVP_DecryptInit_ex(ctx, nullptr, nullptr, key.data(), iv.data()) == 1 &&
            (body == 0 ||
             EVP_DecryptUpdate(ctx, plaintext_out.data(), &len, ciphertext.data(),
                               static_cast<int>(body)) == 1);
  Bytes tag(ciphertext.begin() + static_cast<std::ptrdiff_t>(body), ciphertext.end());
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, 16, tag.data()) == 1;
  int fin = 0;
  ok = ok && EVP_DecryptFinal_ex(ctx, plaintext_out.data() + len, &fin) == 1;
  EVP_CIPHER_CTX_free(ctx);
  return ok;
}

X25519KeyPair x25519_keypair_from_seed(const std::array<std::uint8_t, kX25519KeyLen>& seed) {
  EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, seed.data(), seed.size());
  if (!pkey) crypto_fail("x25519 key import");
  X25519KeyPair kp;
  kp.secret = seed;
  std::size_t len = kp.public_key.size();
  if (EVP_PKEY_get_raw_public_key(pkey, kp.public_key.data(), &len) != 1 || len != kX25519KeyLen)
    crypto_fail("x25519 public key");
  EVP_PKEY_free(pkey);
  return kp;
}

std::array<std::uint8_t, kX25519KeyLen> x25519_shared(
    const std::array<std::uint8_t, kX25519KeyLen>& secret,
    const std::array<std::uint8_t, kX25519KeyLen>& peer_public) {
  EVP_PKEY* sk = EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, secret.data(), secret.size());
  EVP_PKEY* pk = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                             peer_public.size());
  if (!sk || !pk) crypto_fail("x25519 import");
  EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(sk, nullptr);
  std::array<std::uint8_t, kX25519KeyLen> out;
  std::size_t len = out.size();
  bool ok = ctx && EVP_PKEY_derive_init(ctx) == 1 && EVP_PKEY_derive_set_peer(ctx, pk) == 1 &&
            EVP_PKEY_derive(ctx, out.data(), &len) == 1 && len == kX25519KeyLen;
  EVP_PKEY_CTX_free(ctx);
  EVP_PKEY_free(sk);
  EVP_PKEY_free(pk);
  if (!ok) crypto_fail("x25519 derive");
  return out;
}

}  // namespace mixlab::crypto
