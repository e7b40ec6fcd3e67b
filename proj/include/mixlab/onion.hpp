#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <variant>
#include <vector>

#include "mixlab/common.hpp"
#include "mixlab/crypto.hpp"
#include "mixlab/rng.hpp"

namespace mixlab {

enum class Backend { ideal, real };

// Fixes the wire geometry of one family of interchangeable onions. Every
// onion of a size class has the same byte length regardless of how many
// layers remain, so dummies and real traffic cannot be told apart by size.
struct SizeClass {
  std::uint32_t max_hops = 16;      // longest admissible routing path (L+1)
  std::uint32_t msg_budget = 64;    // message space bound, bytes
  std::uint32_t nonce_budget = 24;  // per-layer nonce bound, bytes
};

// A nonce is an opaque (possibly empty) string; empty means "no nonce".
using Nonce = Bytes;

// Checkpoint nonces are framed as a tag byte followed by the PRF value.
constexpr std::uint8_t kCheckpointTag = 0xc8;
Nonce make_checkpoint_nonce(std::span<const std::uint8_t> value);
bool is_checkpoint_nonce(const Nonce& nonce);

struct PublicKey {
  Backend backend;
  PartyId party = kNoParty;
  Bytes material;
};

struct SecretKey {
  Backend backend;
  PartyId party = kNoParty;
  Bytes material;
};

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
  PartyId party = kNoParty;
};

struct RoutingPath {
  std::vector<PartyId> hops;  // P_1 .. P_{L+1}; the last hop is the recipient

  std::size_t length() const { return hops.size(); }
  PartyId recipient() const { return hops.back(); }
};

struct NonceList {
  std::vector<Nonce> entries;  // one per intermediate layer: |path| - 1

  static NonceList empty(std::size_t n) { return NonceList{std::vector<Nonce>(n)}; }
};

struct Onion {
  Backend backend;
  std::uint32_t size_class = 0;
  Bytes payload;  // 16-byte handle (ideal) or fixed-size wire bytes (real)

  // Ground-truth id attached by the simulator for analysis; never part of
  // the wire representation and never shown to adversaries.
  std::uint64_t lineage = 0;

  bool same_bytes(const Onion& o) const {
    return backend == o.backend && size_class == o.size_class && payload == o.payload;
  }
  // Stable identifier of the wire bytes, used in monitored-party logs.
  std::string wire_id() const;
};

struct PeelRelay {
  PartyId next = kNoParty;
  Onion inner;
  Nonce nonce;  // the nonce embedded at this layer (empty if none)
};
struct PeelDeliver {
  Bytes message;
};
struct PeelFail {};
using PeelResult = std::variant<PeelRelay, PeelDeliver, PeelFail>;

inline bool peel_failed(const PeelResult& r) { return std::holds_alternative<PeelFail>(r); }

// Onion routing scheme (Gen, FormOnion, ProcOnion) with two backends.
//
// ideal: onions are opaque handles resolved through a per-run oracle table.
//   Handles are fresh and uniformly distributed at every layer, so they carry
//   no information about contents, paths, or nonces. The oracle is part of
//   the simulation harness and is never exposed to adversaries.
// real: layered hybrid encryption (X25519 + AES-256-GCM). Each layer
//   authenticates a (role, next hop, nonce, inner blob) tuple and the wire
//   form is padded to a fixed size so onions do not shrink when peeled.
//
// All randomness is drawn from caller-supplied Rng streams, so a fixed seed
// reproduces identical onions.
class OnionScheme {
 public:
  OnionScheme(Backend backend, SizeClass size_class, std::uint64_t oracle_seed);
  ~OnionScheme();
  OnionScheme(const OnionScheme&) = delete;
  OnionScheme& operator=(const OnionScheme&) = delete;

  Backend backend() const { return backend_; }
  const SizeClass& size_class() const { return size_class_; }

  // Fresh key pair for a party. security_param is the generation parameter
  // (lambda); it must be >= 1.
  KeyPair gen(std::uint32_t security_param, PartyId party, Rng& rng);

  // Returns the full layer sequence O_1..O_{L+1}. Requires |keys| = |path|
  // and |nonces| = |path| - 1; the message must fit the size class.
  std::vector<Onion> form_onion(std::span<const std::uint8_t> message, const RoutingPath& path,
                                std::span<const PublicKey> keys, const NonceList& nonces,
                                Rng& rng);

  // Peels one layer. Returns Fail for a wrong key or malformed/forged bytes;
  // Fail is a value, not an error. Replayed onions peel to the same result.
  PeelResult proc_onion(const SecretKey& secret_key, const Onion& onion) const;

  // Byte length of every real-backend onion of this size class.
  std::size_t wire_size() const;

  std::size_t oracle_entries() const;  // introspection for tests

 private:
  struct IdealState;

  std::vector<Onion> form_ideal(std::span<const std::uint8_t> message, const RoutingPath& path,
                                const NonceList& nonces);
  std::vector<Onion> form_real(std::span<const std::uint8_t> message, const RoutingPath& path,
                               std::span<const PublicKey> keys, const NonceList& nonces, Rng& rng);
  PeelResult proc_ideal(const SecretKey& sk, const Onion& onion) const;
  PeelResult proc_real(const SecretKey& sk, const Onion& onion) const;

  Backend backend_;
  SizeClass size_class_;
  std::unique_ptr<IdealState> ideal_;
};

// Statistical check that ideal-backend onions carry no information about
// which of two formation inputs produced them. Re-forms `pairs` onion pairs
// and compares the byte distributions of the two populations position-wise.
// Real backend onions are only computationally unlinkable, so the probe
// refuses them.
struct FormSpec {
  Bytes message;
  RoutingPath path;
  std::vector<PublicKey> keys;
  NonceList nonces;
};

struct UnlinkabilityReport {
  std::size_t pairs = 0;
  double max_chi2 = 0.0;   // worst two-sample chi-square over byte positions
  double threshold = 0.0;  // acceptance bound used for `pass`
  bool pass = false;
};

UnlinkabilityReport unlinkability_probe(OnionScheme& scheme, const FormSpec& a, const FormSpec& b,
                                        std::size_t pairs, Rng& rng);

}  // namespace mixlab
