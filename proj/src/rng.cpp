#include "mixlab/rng.hpp"

#include <cstring>

namespace mixlab {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  // Rejection sampling; bias-free for any bound.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::uniform_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

void Rng::fill(std::uint8_t* out, std::size_t len) {
  while (len >= 8) {
    std::uint64_t r = next_u64();
    std::memcpy(out, &r, 8);
    out += 8;
    len -= 8;
  }
  if (len > 0) {
    std::uint64_t r = next_u64();
    std::memcpy(out, &r, len);
  }
}

Bytes Rng::bytes(std::size_t len) {
  Bytes b(len);
  fill(b.data(), len);
  return b;
}

namespace {

std::uint64_t mix_tag(std::uint64_t acc, std::string_view tag) {
  for (char c : tag) {
    acc ^= static_cast<std::uint8_t>(c);
    acc = splitmix64(acc);
  }
  return acc;
}

}  // namespace

std::uint64_t subseed(std::uint64_t root, std::string_view tag) {
  std::uint64_t acc = root;
  acc = splitmix64(acc);
  return mix_tag(acc, tag);
}

std::uint64_t subseed(std::uint64_t root, std::string_view tag, std::uint64_t a) {
  std::uint64_t acc = subseed(root, tag) ^ a;
  return splitmix64(acc);
}

std::uint64_t subseed(std::uint64_t root, std::string_view tag, std::uint64_t a, std::uint64_t b) {
  std::uint64_t acc = subseed(root, tag, a) ^ rotl(b, 32);
  return splitmix64(acc);
}

}  // namespace mixlab
