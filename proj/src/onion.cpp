#include "mixlab/onion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mixlab {

namespace {

constexpr std::size_t kHandleLen = 16;
constexpr std::size_t kEphLen = crypto::kX25519KeyLen;
constexpr std::size_t kIvLen = 12;
constexpr std::size_t kTagLen = 16;
constexpr std::uint8_t kRoleRelay = 0x01;
constexpr std::uint8_t kRoleDeliver = 0x02;

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Nonce make_checkpoint_nonce(std::span<const std::uint8_t> value) {
  Nonce n;
  n.reserve(value.size() + 1);
  n.push_back(kCheckpointTag);
  n.insert(n.end(), value.begin(), value.end());
  return n;
}

bool is_checkpoint_nonce(const Nonce& nonce) {
  return !nonce.empty() && nonce[0] == kCheckpointTag;
}

std::string Onion::wire_id() const {
  if (payload.size() <= kHandleLen) return hex_encode(payload);
  auto d = crypto::sha256(payload);
  return hex_encode(d.data(), 8);
}

// ---------------------------------------------------------------------------
// Ideal backend: handles are an AES-128 permutation of record indices, so
// they are distinct, uniform-looking, and resolve in O(1) without a map.
// ---------------------------------------------------------------------------

struct OnionScheme::IdealState {
  struct Record {
    PartyId party = kNoParty;  // the only party allowed to peel this layer
    std::uint8_t kind = 0;     // kRoleRelay or kRoleDeliver
    PartyId next = kNoParty;
    std::uint64_t inner = 0;  // record index of the peeled layer
    Nonce nonce;
    Bytes message;
  };

  explicit IdealState(std::uint64_t seed)
      : prp([&] {
          Rng rng(subseed(seed, "oracle.prp"));
          std::array<std::uint8_t, 16> key;
          rng.fill(key.data(), key.size());
          return key;
        }()) {}

  Bytes handle_of(std::uint64_t index) const {
    std::array<std::uint8_t, 16> block{};
    std::memcpy(block.data(), &index, sizeof(index));
    auto enc = prp.encrypt(block);
    return Bytes(enc.begin(), enc.end());
  }

  // Returns false when the bytes were not produced by this oracle.
  bool index_of(const Bytes& handle, std::uint64_t& index) const {
    if (handle.size() != kHandleLen) return false;
    std::array<std::uint8_t, 16> block;
    std::memcpy(block.data(), handle.data(), kHandleLen);
    auto dec = prp.decrypt(block);
    std::uint64_t hi;
    std::memcpy(&index, dec.data(), 8);
    std::memcpy(&hi, dec.data() + 8, 8);
    return hi == 0 && index < records.size();
  }

  crypto::BlockCipher prp;
  std::vector<Record> records;
  mutable std::mutex mu;
};

OnionScheme::OnionScheme(Backend backend, SizeClass size_class, std::uint64_t oracle_seed)
    : backend_(backend), size_class_(size_class) {
  if (size_class_.max_hops < 1) throw ParamError("size class needs max_hops >= 1");
  if (backend_ == Backend::ideal) ideal_ = std::make_unique<IdealState>(oracle_seed);
}

OnionScheme::~OnionScheme() = default;

KeyPair OnionScheme::gen(std::uint32_t security_param, PartyId party, Rng& rng) {
  if (security_param < 1) throw ParamError("security_param must be >= 1");
  KeyPair kp;
  kp.party = party;
  if (backend_ == Backend::ideal) {
    Bytes tag = rng.bytes(16);
    kp.public_key = PublicKey{Backend::ideal, party, tag};
    kp.secret_key = SecretKey{Backend::ideal, party, tag};
  } else {
    std::array<std::uint8_t, kEphLen> seed;
    rng.fill(seed.data(), seed.size());
    auto pair = crypto::x25519_keypair_from_seed(seed);
    kp.public_key =
        PublicKey{Backend::real, party, Bytes(pair.public_key.begin(), pair.public_key.end())};
    // Secret material carries the public half too; peeling re-derives the
    // key-wrap input from it.
    Bytes sk(pair.secret.begin(), pair.secret.end());
    sk.insert(sk.end(), pair.public_key.begin(), pair.public_key.end());
    kp.secret_key = SecretKey{Backend::real, party, sk};
  }
  return kp;
}

std::vector<Onion> OnionScheme::form_onion(std::span<const std::uint8_t> message,
                                           const RoutingPath& path,
                                           std::span<const PublicKey> keys,
                                           const NonceList& nonces, Rng& rng) {
  const std::size_t len = path.length();
  if (len < 1) throw ParamError("routing path must have at least one hop");
  if (len > size_class_.max_hops) throw ParamError("routing path exceeds size class max_hops");
  if (keys.size() != len) throw ParamError("public key list does not match path length");
  if (nonces.entries.size() + 1 != len)
    throw ParamError("nonce list must have one entry per intermediate layer");
  if (message.size() > size_class_.msg_budget) throw ParamError("message exceeds size class budget");
  for (const auto& n : nonces.entries)
    if (n.size() > size_class_.nonce_budget) throw ParamError("nonce exceeds size class budget");
  for (std::size_t i = 0; i < len; ++i)
    if (keys[i].party != path.hops[i]) throw ParamError("public key order does not match path");

  if (backend_ == Backend::ideal) return form_ideal(message, path, nonces);
  return form_real(message, path, keys, nonces, rng);
}

std::vector<Onion> OnionScheme::form_ideal(std::span<const std::uint8_t> message,
                                           const RoutingPath& path, const NonceList& nonces) {
  const std::size_t len = path.length();
  std::lock_guard<std::mutex> lock(ideal_->mu);
  auto& records = ideal_->records;
  std::vector<std::uint64_t> index(len);

  // Innermost record first so relay layers can reference their inner index.
  {
    IdealState::Record rec;
    rec.party = path.hops[len - 1];
    rec.kind = kRoleDeliver;
    rec.message.assign(message.begin(), message.end());
    index[len - 1] = records.size();
    records.push_back(std::move(rec));
  }
  for (std::size_t r = len - 1; r-- > 0;) {
    IdealState::Record rec;
    rec.party = path.hops[r];
    rec.kind = kRoleRelay;
    rec.next = path.hops[r + 1];
    rec.inner = index[r + 1];
    rec.nonce = nonces.entries[r];
    index[r] = records.size();
    records.push_back(std::move(rec));
  }

  std::vector<Onion> out(len);
  for (std::size_t r = 0; r < len; ++r)
    out[r] = Onion{Backend::ideal, size_class_.max_hops, ideal_->handle_of(index[r])};
  return out;
}

PeelResult OnionScheme::proc_ideal(const SecretKey& sk, const Onion& onion) const {
  std::lock_guard<std::mutex> lock(ideal_->mu);
  std::uint64_t index = 0;
  if (!ideal_->index_of(onion.payload, index)) return PeelFail{};
  const auto& rec = ideal_->records[index];
  if (rec.party != sk.party) return PeelFail{};  // the oracle refuses other parties
  if (rec.kind == kRoleDeliver) return PeelDeliver{rec.message};
  Onion inner{Backend::ideal, onion.size_class, ideal_->handle_of(rec.inner), onion.lineage};
  return PeelRelay{rec.next, std::move(inner), rec.nonce};
}

// ---------------------------------------------------------------------------
// Real backend
// ---------------------------------------------------------------------------

namespace {

// Ciphertext length for an onion with `depth` layers remaining.
std::size_t ct_len_for_depth(const SizeClass& sc, std::size_t depth) {
  // deliver plaintext: role(1) msg_len(4) msg[msg_budget]
  std::size_t pt = 1 + 4 + sc.msg_budget;
  std::size_t ct = kEphLen + kIvLen + pt + kTagLen;
  for (std::size_t d = 2; d <= depth; ++d) {
    // relay plaintext: role(1) next(4) nonce_len(2) nonce[nonce_budget] inner_len(4) inner_ct
    pt = 1 + 4 + 2 + sc.nonce_budget + 4 + ct;
    ct = kEphLen + kIvLen + pt + kTagLen;
  }
  return ct;
}

Bytes seal_layer(const PublicKey& pk, std::span<const std::uint8_t> plaintext, Rng& rng) {
  std::array<std::uint8_t, kEphLen> eph_seed;
  rng.fill(eph_seed.data(), eph_seed.size());
  auto eph = crypto::x25519_keypair_from_seed(eph_seed);
  std::array<std::uint8_t, kEphLen> peer;
  std::memcpy(peer.data(), pk.material.data(), kEphLen);
  auto shared = crypto::x25519_shared(eph.secret, peer);

  Bytes kdf_in(shared.begin(), shared.end());
  kdf_in.insert(kdf_in.end(), eph.public_key.begin(), eph.public_key.end());
  kdf_in.insert(kdf_in.end(), pk.material.begin(), pk.material.end());
  auto key = crypto::sha256_tagged("mixlab.onion.layer", kdf_in);

  Bytes iv = rng.bytes(kIvLen);
  Bytes ct(eph.public_key.begin(), eph.public_key.end());
  ct.insert(ct.end(), iv.begin(), iv.end());
  Bytes body = crypto::aead_encrypt(key, iv, plaintext);
  ct.insert(ct.end(), body.begin(), body.end());
  return ct;
}

bool open_layer(const SecretKey& sk, std::span<const std::uint8_t> ct, Bytes& plaintext_out) {
  if (ct.size() < kEphLen + kIvLen + kTagLen) return false;
  std::array<std::uint8_t, kEphLen> eph_pub;
  std::memcpy(eph_pub.data(), ct.data(), kEphLen);
  std::array<std::uint8_t, kEphLen> secret;
  std::memcpy(secret.data(), sk.material.data(), kEphLen);
  auto shared = crypto::x25519_shared(secret, eph_pub);

  Bytes kdf_in(shared.begin(), shared.end());
  kdf_in.insert(kdf_in.end(), eph_pub.begin(), eph_pub.end());
  // sk.material = secret || public
  kdf_in.insert(kdf_in.end(), sk.material.begin() + kEphLen, sk.material.end());
  auto key = crypto::sha256_tagged("mixlab.onion.layer", kdf_in);

  auto iv = ct.subspan(kEphLen, kIvLen);
  auto body = ct.subspan(kEphLen + kIvLen);
  return crypto::aead_decrypt(key, iv, body, plaintext_out);
}

}  // namespace

std::size_t OnionScheme::wire_size() const {
  return 4 + ct_len_for_depth(size_class_, size_class_.max_hops);
}

std::vector<Onion> OnionScheme::form_real(std::span<const std::uint8_t> message,
                                          const RoutingPath& path,
                                          std::span<const PublicKey> keys, const NonceList& nonces,
                                          Rng& rng) {
  const std::size_t len = path.length();
  const std::size_t wire = wire_size();

  // Innermost (deliver) layer.
  Bytes pt;
  pt.reserve(1 + 4 + size_class_.msg_budget);
  pt.push_back(kRoleDeliver);
  put_u32(pt, static_cast<std::uint32_t>(message.size()));
  pt.insert(pt.end(), message.begin(), message.end());
  pt.resize(1 + 4 + size_class_.msg_budget, 0);

  std::vector<Bytes> cts(len);
  cts[len - 1] = seal_layer(keys[len - 1], pt, rng);

  for (std::size_t r = len - 1; r-- > 0;) {
    const Nonce& nonce = nonces.entries[r];
    Bytes rp;
    rp.reserve(1 + 4 + 2 + size_class_.nonce_budget + 4 + cts[r + 1].size());
    rp.push_back(kRoleRelay);
    put_u32(rp, path.hops[r + 1]);
    put_u16(rp, static_cast<std::uint16_t>(nonce.size()));
    rp.insert(rp.end(), nonce.begin(), nonce.end());
    rp.resize(1 + 4 + 2 + size_class_.nonce_budget, 0);
    put_u32(rp, static_cast<std::uint32_t>(cts[r + 1].size()));
    rp.insert(rp.end(), cts[r + 1].begin(), cts[r + 1].end());
    cts[r] = seal_layer(keys[r], rp, rng);
  }

  std::vector<Onion> out(len);
  for (std::size_t r = 0; r < len; ++r) {
    Bytes wire_bytes;
    wire_bytes.reserve(wire);
    put_u32(wire_bytes, static_cast<std::uint32_t>(cts[r].size()));
    wire_bytes.insert(wire_bytes.end(), cts[r].begin(), cts[r].end());
    wire_bytes.resize(wire, 0);  // pad so every layer is byte-length identical
    out[r] = Onion{Backend::real, size_class_.max_hops, std::move(wire_bytes)};
  }
  return out;
}

PeelResult OnionScheme::proc_real(const SecretKey& sk, const Onion& onion) const {
  const Bytes& w = onion.payload;
  if (w.size() != wire_size()) return PeelFail{};
  std::uint32_t ct_len = get_u32(w.data());
  if (static_cast<std::size_t>(ct_len) + 4 > w.size()) return PeelFail{};
  Bytes pt;
  if (!open_layer(sk, std::span<const std::uint8_t>(w.data() + 4, ct_len), pt)) return PeelFail{};
  if (pt.empty()) return PeelFail{};

  if (pt[0] == kRoleDeliver) {
    if (pt.size() < 5) return PeelFail{};
    std::uint32_t msg_len = get_u32(pt.data() + 1);
    if (5 + msg_len > pt.size()) return PeelFail{};
    return PeelDeliver{Bytes(pt.begin() + 5, pt.begin() + 5 + msg_len)};
  }
  if (pt[0] != kRoleRelay) return PeelFail{};
  const std::size_t head = 1 + 4 + 2 + size_class_.nonce_budget;
  if (pt.size() < head + 4) return PeelFail{};
  PartyId next = get_u32(pt.data() + 1);
  std::uint16_t nonce_len = get_u16(pt.data() + 5);
  if (nonce_len > size_class_.nonce_budget) return PeelFail{};
  Nonce nonce(pt.begin() + 7, pt.begin() + 7 + nonce_len);
  std::uint32_t inner_len = get_u32(pt.data() + head);
  if (head + 4 + inner_len > pt.size()) return PeelFail{};

  Bytes inner_wire;
  inner_wire.reserve(wire_size());
  put_u32(inner_wire, inner_len);
  inner_wire.insert(inner_wire.end(), pt.begin() + static_cast<std::ptrdiff_t>(head + 4),
                    pt.begin() + static_cast<std::ptrdiff_t>(head + 4 + inner_len));
  inner_wire.resize(wire_size(), 0);
  Onion inner{Backend::real, onion.size_class, std::move(inner_wire), onion.lineage};
  return PeelRelay{next, std::move(inner), std::move(nonce)};
}

PeelResult OnionScheme::proc_onion(const SecretKey& sk, const Onion& onion) const {
  if (sk.backend != backend_ || onion.backend != backend_) return PeelFail{};
  if (backend_ == Backend::ideal) return proc_ideal(sk, onion);
  return proc_real(sk, onion);
}

std::size_t OnionScheme::oracle_entries() const {
  if (backend_ != Backend::ideal) return 0;
  std::lock_guard<std::mutex> lock(ideal_->mu);
  return ideal_->records.size();
}

// ---------------------------------------------------------------------------
// Unlinkability probe
// ---------------------------------------------------------------------------

UnlinkabilityReport unlinkability_probe(OnionScheme& scheme, const FormSpec& a, const FormSpec& b,
                                        std::size_t pairs, Rng& rng) {
  if (scheme.backend() != Backend::ideal)
    throw UnsupportedError(
        "unlinkability_probe: real backend unlinkability is computational, not testable "
        "statistically");

  // Alternate which input is formed first so ordering cannot leak in.
  std::array<std::array<std::array<std::uint64_t, 256>, 16>, 2> counts{};
  for (std::size_t t = 0; t < pairs; ++t) {
    const FormSpec* first = (t % 2 == 0) ? &a : &b;
    const FormSpec* second = (t % 2 == 0) ? &b : &a;
    auto o1 = scheme.form_onion(first->message, first->path, first->keys, first->nonces, rng);
    auto o2 = scheme.form_onion(second->message, second->path, second->keys, second->nonces, rng);
    const Onion& from_a = (t % 2 == 0) ? o1.front() : o2.front();
    const Onion& from_b = (t % 2 == 0) ? o2.front() : o1.front();
    for (std::size_t i = 0; i < 16; ++i) {
      ++counts[0][i][from_a.payload[i]];
      ++counts[1][i][from_b.payload[i]];
    }
  }

  // Two-sample chi-square per byte position.
  double max_chi2 = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    double chi2 = 0.0;
    for (std::size_t v = 0; v < 256; ++v) {
      double n0 = static_cast<double>(counts[0][i][v]);
      double n1 = static_cast<double>(counts[1][i][v]);
      double tot = n0 + n1;
      if (tot == 0) continue;
      double e = tot / 2.0;
      chi2 += (n0 - e) * (n0 - e) / e + (n1 - e) * (n1 - e) / e;
    }
    max_chi2 = std::max(max_chi2, chi2);
  }

  UnlinkabilityReport rep;
  rep.pairs = pairs;
  rep.max_chi2 = max_chi2;
  // df = 255 per position; allow five standard deviations over 16 positions.
  rep.threshold = 255.0 + 5.0 * std::sqrt(2.0 * 255.0);
  rep.pass = max_chi2 <= rep.threshold;
  return rep;
}

}  // namespace mixlab
