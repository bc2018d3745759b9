#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The vanet-sim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

// Web of trust: users hold Ed25519 keys, friends sign each other's keys, and
// every repository keeps its owner's certificates plus the ones exchanged
// with friends. Misbehaviour devalues a user until revocation.

#include "vanet/crypto.hpp"
#include "vanet/geo.hpp"
#include "vanet/wire.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace vanet {

using UserId = std::string;

struct KeyPair {
  Bytes public_key;
  Bytes private_key;

  /// Deterministic keys: Ed25519 seed = SHA-256("vanet-user" || seed).
  static KeyPair from_seed(std::uint64_t seed) {
    Bytes s;
    put_u64be(s, seed);
    auto k = Ed25519Keys::from_seed(sha256({as_bytes("vanet-user"), ByteView(s)}));
    return {std::move(k.public_key), std::move(k.private_key)};
  }

  /// The public half recomputed from the private key.
  bool consistent() const {
    return private_key.size() == kPrivateKeySize && public_key.size() == kPublicKeySize &&
           std::equal(public_key.begin(), public_key.end(), private_key.begin() + 32);
  }
};

struct Certificate {
  UserId subject;
  Bytes subject_public_key;
  UserId signer;
  Bytes signer_public_key;
  Bytes signature;
  std::uint32_t trust_weight = 0;

  bool self_signed() const { return subject == signer; }

  static Bytes signed_message(const UserId &subject, ByteView subject_key) {
    ByteWriter w;
    w.raw(as_bytes("vanet-cert")).str(subject).blob(subject_key);
    return w.take();
  }

  bool verify() const {
    if (self_signed() && subject_public_key != signer_public_key) return false;
    return ed25519_verify(signer_public_key, signed_message(subject, subject_public_key), signature);
  }

  void encode(ByteWriter &w) const {
    w.str(subject).blob(subject_public_key).str(signer).blob(signer_public_key).blob(signature);
  }
  static Certificate decode(ByteReader &r) {
    Certificate c;
    c.subject = r.str();
    c.subject_public_key = r.blob();
    c.signer = r.str();
    c.signer_public_key = r.blob();
    c.signature = r.blob();
    return c;
  }

  friend bool operator==(const Certificate &a, const Certificate &b) {
    return a.subject == b.subject && a.subject_public_key == b.subject_public_key && a.signer == b.signer &&
           a.signer_public_key == b.signer_public_key && a.signature == b.signature;
  }
};

inline Certificate sign_certificate(const UserId &signer, const KeyPair &signer_keys, const UserId &subject,
                                    ByteView subject_key) {
  if (!signer_keys.consistent()) throw ValidationError("signature creation failed: malformed key for " + signer);
  Certificate c;
  c.subject = subject;
  c.subject_public_key.assign(subject_key.begin(), subject_key.end());
  c.signer = signer;
  c.signer_public_key = signer_keys.public_key;
  c.signature = ed25519_sign(signer_keys.private_key, Certificate::signed_message(subject, subject_key));
  return c;
}

/// A user's local certificate store. At most one certificate per
/// (subject, signer) pair; insertion order does not matter.
class CertificateRepository {
 public:
  CertificateRepository() = default;
  explicit CertificateRepository(UserId owner) : owner_(std::move(owner)) {}

  const UserId &owner() const { return owner_; }
  const std::vector<Certificate> &certificates() const { return certs_; }
  std::size_t size() const { return certs_.size(); }

  /// Adds a verifying certificate; returns false for duplicates or forgeries.
  bool add(const Certificate &c) {
    if (!c.verify()) return false;
    auto pos = std::lower_bound(certs_.begin(), certs_.end(), c, key_less);
    if (pos != certs_.end() && !key_less(c, *pos)) return false;
    certs_.insert(pos, c);
    refresh_weight(c.subject);
    return true;
  }

  const Certificate *find(const UserId &subject, const UserId &signer) const {
    Certificate probe;
    probe.subject = subject;
    probe.signer = signer;
    auto pos = std::lower_bound(certs_.begin(), certs_.end(), probe, key_less);
    return pos != certs_.end() && pos->subject == subject && pos->signer == signer ? &*pos : nullptr;
  }

  const Certificate *self_certificate() const { return find(owner_, owner_); }

  /// Number of distinct signers vouching for `subject` (self excluded).
  std::uint32_t trust_weight(const UserId &subject) const {
    std::uint32_t n = 0;
    for (const auto &c : certs_)
      if (c.subject == subject && !c.self_signed()) ++n;
    return n;
  }

  /// Friends of the owner with their keys: anyone the owner signed, or who
  /// signed the owner's key.
  std::map<UserId, Bytes> friend_keys() const {
    std::map<UserId, Bytes> out;
    for (const auto &c : certs_) {
      if (c.self_signed()) continue;
      if (c.signer == owner_ && c.subject != owner_) out.emplace(c.subject, c.subject_public_key);
      if (c.subject == owner_ && c.signer != owner_) out.emplace(c.signer, c.signer_public_key);
    }
    return out;
  }

 private:
  static bool key_less(const Certificate &a, const Certificate &b) {
    return std::tie(a.subject, a.signer) < std::tie(b.subject, b.signer);
  }
  void refresh_weight(const UserId &subject) {
    auto w = trust_weight(subject);
    for (auto &c : certs_)
      if (c.subject == subject) c.trust_weight = w;
  }

  UserId owner_;
  std::vector<Certificate> certs_;
};

/// Users known to both repositories as friends of their owners, with
/// matching keys.
inline std::set<UserId> common_friends(const CertificateRepository &a, const CertificateRepository &b) {
  auto fa = a.friend_keys();
  auto fb = b.friend_keys();
  std::set<UserId> out;
  for (const auto &[id, key] : fa) {
    auto it = fb.find(id);
    if (it != fb.end() && it->second == key) out.insert(id);
  }
  return out;
}

/// Directed signer -> subject edges backed by verifying certificates.
class TrustGraph {
 public:
  template <class Range>
  static TrustGraph from_certificates(const Range &certs) {
    TrustGraph g;
    for (const Certificate &c : certs) g.add(c);
    return g;
  }

  void add(const Certificate &c) {
    if (!c.verify()) return;
    nodes_.insert(c.subject);
    nodes_.insert(c.signer);
    edges_.emplace(c.signer, c.subject);
  }

  const std::set<UserId> &nodes() const { return nodes_; }
  const std::set<std::pair<UserId, UserId>> &edges() const { return edges_; }
  bool has_edge(const UserId &signer, const UserId &subject) const { return edges_.count({signer, subject}) != 0; }
  std::size_t self_loops() const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [](const auto &e) { return e.first == e.second; }));
  }

 private:
  std::set<UserId> nodes_;
  std::set<std::pair<UserId, UserId>> edges_;
};

struct User {
  UserId id;
  std::uint64_t seed = 0;
  KeyPair keys;
  CertificateRepository repository;
};

inline bool valid_user_id(const UserId &id) {
  return !id.empty() && id.size() <= 255 &&
         std::none_of(id.begin(), id.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

/// Registered users in registration order.
class Roster {
 public:
  /// Derives the user's keys from `seed` and stores the self-certificate.
  const User &register_user(const UserId &id, std::uint64_t seed) {
    if (!valid_user_id(id)) throw ValidationError("invalid user id '" + id + "'");
    if (contains(id)) throw ValidationError("duplicate user id '" + id + "'");
    User u{id, seed, KeyPair::from_seed(seed), CertificateRepository(id)};
    for (const auto &other : users_)
      if (other.keys.public_key == u.keys.public_key)
        throw ValidationError("user '" + id + "' derives the same key as '" + other.id + "' (reused seed)");
    u.repository.add(sign_certificate(id, u.keys, id, u.keys.public_key));
    index_.emplace(id, users_.size());
    users_.push_back(std::move(u));
    return users_.back();
  }

  bool contains(const UserId &id) const { return index_.count(id) != 0; }
  const User &user(const UserId &id) const { return users_.at(lookup(id)); }
  User &user(const UserId &id) { return users_.at(lookup(id)); }
  const std::vector<User> &users() const { return users_; }
  std::size_t size() const { return users_.size(); }

  /// Every certificate held anywhere in the roster.
  std::vector<Certificate> all_certificates() const {
    std::vector<Certificate> out;
    for (const auto &u : users_)
      out.insert(out.end(), u.repository.certificates().begin(), u.repository.certificates().end());
    return out;
  }

 private:
  std::size_t lookup(const UserId &id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown user '" + id + "'");
    return it->second;
  }

  std::vector<User> users_;
  std::map<UserId, std::size_t> index_;
};

/// `signer` vouches for `subject`'s key. Both repositories keep the result:
/// the subject holds the signatures of its friends, the signer the ones it
/// produced.
inline Certificate sign_friend(Roster &roster, const UserId &signer, const UserId &subject) {
  if (signer == subject) throw ValidationError("user '" + signer + "' cannot sign itself as a friend");
  auto &s = roster.user(signer);
  auto &t = roster.user(subject);
  auto cert = sign_certificate(s.id, s.keys, t.id, t.keys.public_key);
  t.repository.add(cert);
  s.repository.add(cert);
  return cert;
}

struct RevocationRecord {
  UserId subject;
  std::uint32_t misbehavior_count = 0;
  bool revoked = false;
  friend bool operator==(const RevocationRecord &, const RevocationRecord &) = default;
};

/// Per-node misbehaviour knowledge. Revocation is monotone within a run.
class RevocationStore {
 public:
  explicit RevocationStore(std::uint32_t threshold = 3) : threshold_(threshold) {}

  std::uint32_t threshold() const { return threshold_; }

  const RevocationRecord &report(const UserId &subject) {
    auto &r = records_[subject];
    r.subject = subject;
    ++r.misbehavior_count;
    if (r.misbehavior_count >= threshold_) r.revoked = true;
    return r;
  }

  bool is_revoked(const UserId &subject) const {
    auto it = records_.find(subject);
    return it != records_.end() && it->second.revoked;
  }

  std::optional<RevocationRecord> record(const UserId &subject) const {
    auto it = records_.find(subject);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<UserId, RevocationRecord> &records() const { return records_; }

  /// Union with max count per subject; revoked flags never clear.
  void merge(const RevocationStore &other) { merge(other.records_); }
  void merge(const std::map<UserId, RevocationRecord> &incoming) {
    for (const auto &[id, rec] : incoming) {
      auto &mine = records_[id];
      mine.subject = id;
      mine.misbehavior_count = std::max(mine.misbehavior_count, rec.misbehavior_count);
      mine.revoked = mine.revoked || rec.revoked || mine.misbehavior_count >= threshold_;
    }
  }

  void encode(ByteWriter &w) const {
    w.u32(static_cast<std::uint32_t>(records_.size()));
    for (const auto &[id, rec] : records_) w.str(id).u32(rec.misbehavior_count).u8(rec.revoked ? 1 : 0);
  }
  static std::map<UserId, RevocationRecord> decode(ByteReader &r) {
    std::map<UserId, RevocationRecord> out;
    auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      RevocationRecord rec;
      rec.subject = r.str();
      rec.misbehavior_count = r.u32();
      rec.revoked = r.u8() != 0;
      out[rec.subject] = rec;
    }
    return out;
  }

 private:
  std::uint32_t threshold_;
  std::map<UserId, RevocationRecord> records_;
};

/// Roster-checked report: the subject must be a registered user.
inline const RevocationRecord &report_misbehavior(const Roster &roster, RevocationStore &store, const UserId &subject) {
  if (!roster.contains(subject)) throw ValidationError("report for unknown subject '" + subject + "'");
  return store.report(subject);
}

/// Runs after a successful mutual authentication: both sides end with the
/// union of their records.
inline void exchange_revocations(RevocationStore &a, RevocationStore &b) {
  RevocationStore snapshot = a;
  a.merge(b);
  b.merge(snapshot);
}

/// Roster document:
///   user <id> <seed>
///   friend <idA> <idB>      (mutual signatures)
inline Roster load_roster(std::istream &in) {
  Roster roster;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::is_blank_or_comment(line)) continue;
    auto tok = detail::split_ws(line);
    try {
      if (tok[0] == "user") {
        if (tok.size() != 3) throw ParseError(n, "user expects <id> <seed>");
        roster.register_user(tok[1], detail::parse_number<std::uint64_t>(tok[2], n, "seed"));
      } else if (tok[0] == "friend") {
        if (tok.size() != 3) throw ParseError(n, "friend expects <idA> <idB>");
        sign_friend(roster, tok[1], tok[2]);
        sign_friend(roster, tok[2], tok[1]);
      } else {
        throw ParseError(n, "unknown record '" + tok[0] + "'");
      }
    } catch (const ValidationError &e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return roster;
}

inline Roster parse_roster(const std::string &text) {
  std::istringstream in(text);
  return load_roster(in);
}

inline Roster load_roster_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open roster file '" + path + "'");
  return load_roster(in);
}

/// One `cert <subject> <signer> <hex signature>` line per certificate.
inline void dump_certificates(std::ostream &out, const std::vector<Certificate> &certs) {
  for (const auto &c : certs) out << "cert " << c.subject << ' ' << c.signer << ' ' << to_hex(c.signature) << '\n';
}

}  // namespace vanet
