#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixlab {

using PartyId = std::uint32_t;
using Round = std::uint32_t;
using Bytes = std::vector<std::uint8_t>;

constexpr PartyId kNoParty = 0xffffffffu;

// Thrown when caller-supplied arguments violate a documented precondition.
class ParamError : public std::invalid_argument {
 public:
  explicit ParamError(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when an operation is not available for the selected backend/mode.
class UnsupportedError : public std::logic_error {
 public:
  explicit UnsupportedError(const std::string& what) : std::logic_error(what) {}
};

inline Bytes to_bytes(const std::string& s) {
  return Bytes(s.begin(), s.end());
}

std::string hex_encode(const std::uint8_t* data, std::size_t len);
inline std::string hex_encode(const Bytes& b) { return hex_encode(b.data(), b.size()); }

}  // namespace mixlab
