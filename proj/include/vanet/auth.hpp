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

// Pseudonyms, beacons and mutual authentication over a shared friend key.
//
// Authentication is a sigma-style exchange in which each side proves it
// knows the public key of a user both of them trust:
//
//   I -> R  0x02 commit     nonce_I, H(nonce_I || k) for every friend key k
//   R -> I  0x03 challenge  nonce_R, R's commitments, challenge for I
//   I -> R  0x04 response   HMAC_k(challenge || nonces) per slot,
//                           challenge for R, sealed identity of I
//   R -> I  0x04 response   R's responses, sealed identity of R
//   I -> R  0x05 result     accepted / rejected
//
// Commitments are shuffled and padded with random slots so a transcript
// reveals neither the repository size nor the friend used. Identities
// (user id, key, signature over the transcript, revocation records) travel
// encrypted under the session key, so only the peer learns who it talked to.
// A 0x05 reject may be sent at any step and carries no reason.

#include "vanet/cipher.hpp"
#include "vanet/crypto.hpp"
#include "vanet/trust.hpp"
#include "vanet/wire.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace vanet {

inline constexpr std::size_t kPseudonymSize = 16;
inline constexpr std::size_t kNonceSize = 32;
inline constexpr std::size_t kChallengeSize = 16;
inline constexpr std::size_t kMinCommitmentSlots = 64;

struct Pseudonym {
  Bytes value;
  double valid_from = 0.0;
  double valid_until = 0.0;
};

struct PseudonymPolicy {
  double min_life = 120.0;
  double max_life = 600.0;
};

inline Pseudonym fresh_pseudonym(Rng &rng, double now, const PseudonymPolicy &policy = {}) {
  Pseudonym p;
  p.value = rng.bytes(kPseudonymSize);
  p.valid_from = now;
  p.valid_until = now + rng.uniform(policy.min_life, policy.max_life);
  return p;
}

/// Authenticated neighbour as seen by the pseudonym layer.
struct PeerSessionRef {
  std::uint32_t peer = 0;  // link-layer handle
  ByteView session_key;
};

struct ChangeNotice {
  std::uint32_t peer = 0;
  EncryptedPayload sealed;  // old pseudonym || new pseudonym
};

struct Rotation {
  Pseudonym next;
  std::vector<ChangeNotice> notices;
};

/// New pseudonym with a random lifetime; only currently authenticated peers
/// get the (encrypted) link between the old and new values.
inline Rotation rotate_pseudonym(const Pseudonym &current, std::span<const PeerSessionRef> peers, double now, Rng &rng,
                                 const PseudonymPolicy &policy = {}) {
  Rotation r{fresh_pseudonym(rng, now, policy), {}};
  Bytes link = current.value;
  link.insert(link.end(), r.next.value.begin(), r.next.value.end());
  for (const auto &p : peers) r.notices.push_back({p.peer, seal(p.session_key, link, rng)});
  return r;
}

struct PseudonymChange {
  Bytes old_value;
  Bytes new_value;
};

inline PseudonymChange open_change_notice(ByteView session_key, const EncryptedPayload &sealed) {
  auto plain = open(session_key, sealed);
  if (plain.size() != 2 * kPseudonymSize) throw WireError("malformed pseudonym change notice");
  return {Bytes(plain.begin(), plain.begin() + kPseudonymSize), Bytes(plain.begin() + kPseudonymSize, plain.end())};
}

/// Presence announcement. Carries nothing but the current pseudonym, a
/// sequence number (reset on every rotation) and a coarse timestamp.
struct Beacon {
  Bytes sender_pseudonym;
  std::uint32_t sequence = 0;
  std::uint32_t timestamp = 0;

  Bytes encode() const {
    ByteWriter w;
    w.raw(sender_pseudonym).u32(sequence).u32(timestamp);
    return frame(MessageTag::beacon, w.bytes());
  }
  static Beacon decode(ByteView payload) {
    ByteReader r(payload);
    Beacon b{r.raw(kPseudonymSize), r.u32(), 0};
    b.timestamp = r.u32();
    r.expect_done();
    return b;
  }
};

struct BeaconState {
  Pseudonym pseudonym;
  std::uint32_t next_sequence = 0;
};

inline Beacon emit_beacon(BeaconState &state, double now) {
  return {state.pseudonym.value, state.next_sequence++, static_cast<std::uint32_t>(std::floor(now))};
}

//------------------------------------------------------------------------------
// Mutual authentication
//------------------------------------------------------------------------------

/// What one side brings to an authentication.
struct AuthParty {
  UserId user;
  KeyPair keys;
  std::vector<Bytes> friend_keys;  // sorted
  Bytes pseudonym;
  const RevocationStore *revocations = nullptr;

  static AuthParty from_user(const User &u, const RevocationStore &revocations, Bytes pseudonym) {
    AuthParty p{u.id, u.keys, {}, std::move(pseudonym), &revocations};
    for (auto &[id, key] : u.repository.friend_keys()) p.friend_keys.push_back(key);
    std::sort(p.friend_keys.begin(), p.friend_keys.end());
    return p;
  }
};

enum class AuthStatus { pending, accepted, rejected };

enum class AuthFailure { none, no_common_friend, bad_response, bad_identity, revoked, peer_rejected, timeout, protocol };

inline const char *to_string(AuthFailure f) {
  switch (f) {
    case AuthFailure::none: return "none";
    case AuthFailure::no_common_friend: return "no-common-friend";
    case AuthFailure::bad_response: return "bad-response";
    case AuthFailure::bad_identity: return "bad-identity";
    case AuthFailure::revoked: return "revoked";
    case AuthFailure::peer_rejected: return "peer-rejected";
    case AuthFailure::timeout: return "timeout";
    case AuthFailure::protocol: return "protocol";
  }
  return "?";
}

struct AuthIdentity {
  UserId user;
  Bytes public_key;
  std::map<UserId, RevocationRecord> revocations;
};

/// Observable record of one exchange (everything an eavesdropper sees, plus
/// the outcome).
struct AuthTranscript {
  Bytes initiator_pseudonym;
  Bytes responder_pseudonym;
  std::vector<Bytes> initiator_commitments;
  std::vector<Bytes> responder_commitments;
  Bytes challenge_to_initiator;
  Bytes challenge_to_responder;
  std::vector<Bytes> initiator_responses;
  std::vector<Bytes> responder_responses;
  AuthStatus outcome = AuthStatus::pending;
  double started_at = 0.0;
};

namespace detail {
inline Bytes zk_commitment(ByteView nonce, ByteView key) {
  return sha256({as_bytes("vanet-zk-commit"), nonce, key});
}
inline Bytes zk_response(ByteView key, ByteView challenge, ByteView prover_nonce, ByteView verifier_nonce) {
  return hmac_sha256(key, ByteWriter().raw(as_bytes("vanet-zk-resp")).raw(challenge).raw(prover_nonce).raw(verifier_nonce).bytes());
}
inline std::size_t commitment_slots(std::size_t keys) {
  return std::max(kMinCommitmentSlots, std::bit_ceil(std::max<std::size_t>(keys, 1)));
}
inline void put_list(ByteWriter &w, const std::vector<Bytes> &items) {
  w.u16(static_cast<std::uint16_t>(items.size()));
  for (const auto &i : items) w.raw(i);
}
inline std::vector<Bytes> get_list(ByteReader &r, std::size_t item_size) {
  std::vector<Bytes> out(r.u16());
  for (auto &i : out) i = r.raw(item_size);
  return out;
}
}  // namespace detail

/// Parsed authentication message; `session` routes it to an engine.
struct AuthMessage {
  MessageTag tag = MessageTag::auth_result;
  std::uint64_t session = 0;
  Bytes initiator_pseudonym, responder_pseudonym;  // commit only
  Bytes nonce;                                     // commit / challenge
  std::vector<Bytes> commitments;                  // commit / challenge
  Bytes challenge;                                 // challenge / initiator's response
  std::vector<Bytes> responses;                    // response
  std::optional<EncryptedPayload> identity;        // response
  bool accepted = false;                           // result

  Bytes encode() const {
    ByteWriter w;
    w.u64(session);
    switch (tag) {
      case MessageTag::auth_commit:
        w.blob(initiator_pseudonym).blob(responder_pseudonym).raw(nonce);
        detail::put_list(w, commitments);
        break;
      case MessageTag::auth_challenge:
        w.raw(nonce);
        detail::put_list(w, commitments);
        w.raw(challenge);
        break;
      case MessageTag::auth_response:
        detail::put_list(w, responses);
        w.blob(challenge);
        identity.value().encode(w);
        break;
      case MessageTag::auth_result: w.u8(accepted ? 1 : 0); break;
      default: throw WireError("not an authentication message");
    }
    return frame(tag, w.bytes());
  }

  static AuthMessage decode(const Frame &f) {
    ByteReader r(f.payload);
    AuthMessage m;
    m.tag = f.tag;
    m.session = r.u64();
    switch (f.tag) {
      case MessageTag::auth_commit:
        m.initiator_pseudonym = r.blob();
        m.responder_pseudonym = r.blob();
        m.nonce = r.raw(kNonceSize);
        m.commitments = detail::get_list(r, kDigestSize);
        break;
      case MessageTag::auth_challenge:
        m.nonce = r.raw(kNonceSize);
        m.commitments = detail::get_list(r, kDigestSize);
        m.challenge = r.raw(kChallengeSize);
        break;
      case MessageTag::auth_response:
        m.responses = detail::get_list(r, kDigestSize);
        m.challenge = r.blob();
        m.identity = EncryptedPayload::decode(r);
        break;
      case MessageTag::auth_result: m.accepted = r.u8() != 0; break;
      default: throw WireError("not an authentication message");
    }
    r.expect_done();
    return m;
  }
};

/// One side of one authentication session, advanced by delivered messages.
class AuthEngine {
 public:
  enum class Role { initiator, responder };

  static AuthEngine initiator(std::uint64_t session) { return AuthEngine(Role::initiator, session); }
  static AuthEngine responder(std::uint64_t session) { return AuthEngine(Role::responder, session); }

  Role role() const { return role_; }
  std::uint64_t session() const { return session_; }
  AuthStatus status() const { return status_; }
  AuthFailure failure() const { return failure_; }
  const AuthTranscript &transcript() const { return transcript_; }
  const std::optional<SessionKey> &session_key() const { return key_; }
  const std::optional<AuthIdentity> &peer_identity() const { return peer_; }

  /// Initiator's opening commit addressed to `responder_pseudonym`.
  AuthMessage start(const AuthParty &self, const Bytes &responder_pseudonym, Rng &rng, double now) {
    if (role_ != Role::initiator || stage_ != Stage::idle) throw std::logic_error("AuthEngine::start misuse");
    transcript_.started_at = now;
    transcript_.initiator_pseudonym = self.pseudonym;
    transcript_.responder_pseudonym = responder_pseudonym;
    own_nonce_ = rng.bytes(kNonceSize);
    AuthMessage m;
    m.tag = MessageTag::auth_commit;
    m.session = session_;
    m.initiator_pseudonym = self.pseudonym;
    m.responder_pseudonym = responder_pseudonym;
    m.nonce = own_nonce_;
    m.commitments = commit(self, rng);
    transcript_.initiator_commitments = m.commitments;
    first_payload_ = m.encode();
    stage_ = Stage::await_challenge;
    return m;
  }

  /// Feeds a message from the peer; returns the reply to send, if any.
  std::optional<AuthMessage> on_message(const AuthMessage &m, const AuthParty &self, Rng &rng, double now) {
    if (status_ != AuthStatus::pending || m.session != session_) return std::nullopt;
    if (m.tag == MessageTag::auth_result) {
      if (m.accepted && role_ == Role::responder && stage_ == Stage::await_result) {
        finish_accept();
      } else {
        fail(AuthFailure::peer_rejected);
      }
      return std::nullopt;
    }
    if (role_ == Role::responder) {
      if (m.tag == MessageTag::auth_commit && stage_ == Stage::idle) return on_commit(m, self, rng, now);
      if (m.tag == MessageTag::auth_response && stage_ == Stage::await_response) return on_initiator_response(m, self, rng);
    } else {
      if (m.tag == MessageTag::auth_challenge && stage_ == Stage::await_challenge) return on_challenge(m, self, rng, now);
      if (m.tag == MessageTag::auth_response && stage_ == Stage::await_response) return on_responder_response(m, self);
    }
    return reject(AuthFailure::protocol);
  }

  void abort_timeout() {
    if (status_ == AuthStatus::pending) fail(AuthFailure::timeout);
  }

 private:
  enum class Stage { idle, await_challenge, await_response, await_result, done };

  AuthEngine(Role role, std::uint64_t session) : role_(role), session_(session) {}

  std::vector<Bytes> commit(const AuthParty &self, Rng &rng) {
    auto slots = detail::commitment_slots(self.friend_keys.size());
    slot_keys_.assign(slots, std::nullopt);
    for (std::size_t i = 0; i < self.friend_keys.size() && i < slots; ++i) slot_keys_[i] = self.friend_keys[i];
    rng.shuffle(slot_keys_);
    std::vector<Bytes> out;
    out.reserve(slots);
    for (const auto &k : slot_keys_) out.push_back(k ? detail::zk_commitment(own_nonce_, *k) : rng.bytes(kDigestSize));
    return out;
  }

  /// Own friend keys whose commitment under the peer's nonce appears among
  /// the peer's commitments.
  std::vector<Bytes> matching_keys(const AuthParty &self) const {
    std::set<Bytes> theirs(peer_commitments_.begin(), peer_commitments_.end());
    std::vector<Bytes> out;
    for (const auto &k : self.friend_keys)
      if (theirs.count(detail::zk_commitment(peer_nonce_, k))) out.push_back(k);
    return out;
  }

  std::vector<Bytes> respond(ByteView challenge, Rng &rng) const {
    std::vector<Bytes> out;
    out.reserve(slot_keys_.size());
    for (const auto &k : slot_keys_)
      out.push_back(k ? detail::zk_response(*k, challenge, own_nonce_, peer_nonce_) : rng.bytes(kDigestSize));
    return out;
  }

  /// True when some commitment/response pair of the peer is consistent with
  /// a friend key we also hold.
  bool verify_responses(const std::vector<Bytes> &responses) const {
    if (responses.size() != peer_commitments_.size()) return false;
    for (const auto &k : shared_keys_) {
      auto c = detail::zk_commitment(peer_nonce_, k);
      for (std::size_t j = 0; j < peer_commitments_.size(); ++j)
        if (peer_commitments_[j] == c &&
            equal_ct(responses[j], detail::zk_response(k, own_challenge_, peer_nonce_, own_nonce_)))
          return true;
    }
    return false;
  }

  void derive_session(ByteView second_payload, double now) {
    transcript_hash_ = sha256({as_bytes("vanet-transcript"), ByteView(first_payload_), second_payload});
    const Bytes &nonce_i = role_ == Role::initiator ? own_nonce_ : peer_nonce_;
    const Bytes &nonce_r = role_ == Role::initiator ? peer_nonce_ : own_nonce_;
    SessionKey k;
    k.key = sha256({as_bytes("vanet-session"), ByteView(transcript_hash_), ByteView(shared_keys_.front()),
                    ByteView(nonce_i), ByteView(nonce_r)});
    k.peer_pseudonym = role_ == Role::initiator ? transcript_.responder_pseudonym : transcript_.initiator_pseudonym;
    k.established_at = now;
    key_ = std::move(k);
  }

  static Bytes identity_message(ByteView transcript_hash, Role signer_role) {
    return ByteWriter()
        .raw(as_bytes("vanet-auth-id"))
        .u8(signer_role == Role::initiator ? 0 : 1)
        .raw(transcript_hash)
        .take();
  }

  EncryptedPayload seal_identity(const AuthParty &self, Rng &rng) const {
    ByteWriter w;
    w.str(self.user).blob(self.keys.public_key).blob(ed25519_sign(self.keys.private_key, identity_message(transcript_hash_, role_)));
    if (self.revocations) {
      self.revocations->encode(w);
    } else {
      w.u32(0);
    }
    return seal(key_->key, w.bytes(), rng);
  }

  /// Opens and checks the peer's identity; sets failure_ on error.
  bool accept_identity(const std::optional<EncryptedPayload> &sealed, const AuthParty &self) {
    if (!sealed) return false;
    try {
      auto plain = open(key_->key, *sealed);
      ByteReader r(plain);
      AuthIdentity id;
      id.user = r.str();
      id.public_key = r.blob();
      auto sig = r.blob();
      id.revocations = RevocationStore::decode(r);
      r.expect_done();
      auto peer_role = role_ == Role::initiator ? Role::responder : Role::initiator;
      if (!ed25519_verify(id.public_key, identity_message(transcript_hash_, peer_role), sig)) return false;
      if (self.revocations && self.revocations->is_revoked(id.user)) {
        failure_ = AuthFailure::revoked;
        return false;
      }
      peer_ = std::move(id);
      return true;
    } catch (const std::exception &) {
      return false;
    }
  }

  std::optional<AuthMessage> on_commit(const AuthMessage &m, const AuthParty &self, Rng &rng, double now) {
    transcript_.started_at = now;
    transcript_.initiator_pseudonym = m.initiator_pseudonym;
    transcript_.responder_pseudonym = self.pseudonym;
    transcript_.initiator_commitments = m.commitments;
    first_payload_ = m.encode();
    peer_nonce_ = m.nonce;
    peer_commitments_ = m.commitments;
    shared_keys_ = matching_keys(self);
    if (shared_keys_.empty()) return reject(AuthFailure::no_common_friend);
    own_nonce_ = rng.bytes(kNonceSize);
    own_challenge_ = rng.bytes(kChallengeSize);
    AuthMessage reply;
    reply.tag = MessageTag::auth_challenge;
    reply.session = session_;
    reply.nonce = own_nonce_;
    reply.commitments = commit(self, rng);
    reply.challenge = own_challenge_;
    transcript_.responder_commitments = reply.commitments;
    transcript_.challenge_to_initiator = own_challenge_;
    derive_session(reply.encode(), now);
    stage_ = Stage::await_response;
    return reply;
  }

  std::optional<AuthMessage> on_challenge(const AuthMessage &m, const AuthParty &self, Rng &rng, double now) {
    transcript_.responder_commitments = m.commitments;
    transcript_.challenge_to_initiator = m.challenge;
    peer_nonce_ = m.nonce;
    peer_commitments_ = m.commitments;
    shared_keys_ = matching_keys(self);
    if (shared_keys_.empty()) return reject(AuthFailure::no_common_friend);
    derive_session(m.encode(), now);
    own_challenge_ = rng.bytes(kChallengeSize);
    AuthMessage reply;
    reply.tag = MessageTag::auth_response;
    reply.session = session_;
    reply.responses = respond(m.challenge, rng);
    reply.challenge = own_challenge_;
    reply.identity = seal_identity(self, rng);
    transcript_.initiator_responses = reply.responses;
    transcript_.challenge_to_responder = own_challenge_;
    stage_ = Stage::await_response;
    return reply;
  }

  std::optional<AuthMessage> on_initiator_response(const AuthMessage &m, const AuthParty &self, Rng &rng) {
    transcript_.initiator_responses = m.responses;
    transcript_.challenge_to_responder = m.challenge;
    if (m.challenge.size() != kChallengeSize) return reject(AuthFailure::protocol);
    if (!verify_responses(m.responses)) return reject(AuthFailure::bad_response);
    if (!accept_identity(m.identity, self))
      return reject(failure_ == AuthFailure::revoked ? AuthFailure::revoked : AuthFailure::bad_identity);
    AuthMessage reply;
    reply.tag = MessageTag::auth_response;
    reply.session = session_;
    reply.responses = respond(m.challenge, rng);
    reply.identity = seal_identity(self, rng);
    transcript_.responder_responses = reply.responses;
    stage_ = Stage::await_result;
    return reply;
  }

  std::optional<AuthMessage> on_responder_response(const AuthMessage &m, const AuthParty &self) {
    transcript_.responder_responses = m.responses;
    if (!verify_responses(m.responses)) return reject(AuthFailure::bad_response);
    if (!accept_identity(m.identity, self))
      return reject(failure_ == AuthFailure::revoked ? AuthFailure::revoked : AuthFailure::bad_identity);
    finish_accept();
    AuthMessage result;
    result.tag = MessageTag::auth_result;
    result.session = session_;
    result.accepted = true;
    return result;
  }

  std::optional<AuthMessage> reject(AuthFailure why) {
    fail(why);
    AuthMessage m;
    m.tag = MessageTag::auth_result;
    m.session = session_;
    m.accepted = false;
    return m;
  }

  void fail(AuthFailure why) {
    status_ = AuthStatus::rejected;
    failure_ = why;
    transcript_.outcome = status_;
    stage_ = Stage::done;
    key_.reset();
    peer_.reset();
  }

  void finish_accept() {
    status_ = AuthStatus::accepted;
    transcript_.outcome = status_;
    stage_ = Stage::done;
  }

  Role role_;
  std::uint64_t session_;
  Stage stage_ = Stage::idle;
  AuthStatus status_ = AuthStatus::pending;
  AuthFailure failure_ = AuthFailure::none;
  AuthTranscript transcript_;
  std::vector<std::optional<Bytes>> slot_keys_;
  Bytes own_nonce_, peer_nonce_, own_challenge_, first_payload_, transcript_hash_;
  std::vector<Bytes> peer_commitments_, shared_keys_;
  std::optional<SessionKey> key_;
  std::optional<AuthIdentity> peer_;

};

/// Result of driving both engines of one exchange in memory.
struct AuthOutcome {
  AuthTranscript transcript;
  bool accepted = false;
  AuthFailure initiator_failure = AuthFailure::none;
  AuthFailure responder_failure = AuthFailure::none;
  std::optional<SessionKey> initiator_key;
  std::optional<SessionKey> responder_key;
  std::optional<AuthIdentity> initiator_view_of_responder;
  std::optional<AuthIdentity> responder_view_of_initiator;
  std::size_t messages = 0;
};

/// Runs a complete exchange between two parties. `in_range` is polled before
/// each delivery; a false answer aborts both sides with a timeout. On accept
/// the two revocation stores are merged.
inline AuthOutcome zk_mutual_authenticate(const AuthParty &initiator, const AuthParty &responder, Rng &rng, double now,
                                          RevocationStore *initiator_store = nullptr,
                                          RevocationStore *responder_store = nullptr,
                                          const std::function<bool()> &in_range = {}) {
  auto session = rng.next_u64();
  auto a = AuthEngine::initiator(session);
  auto b = AuthEngine::responder(session);
  AuthOutcome out;
  std::optional<AuthMessage> msg = a.start(initiator, responder.pseudonym, rng, now);
  bool to_responder = true;
  while (msg) {
    ++out.messages;
    if (in_range && !in_range()) {
      a.abort_timeout();
      b.abort_timeout();
      break;
    }
    // Round-trip through the wire codec so engines only ever see decoded bytes.
    auto decoded = AuthMessage::decode(unframe(msg->encode()));
    msg = to_responder ? b.on_message(decoded, responder, rng, now) : a.on_message(decoded, initiator, rng, now);
    to_responder = !to_responder;
  }
  out.transcript = a.transcript();
  out.transcript.outcome = a.status() == AuthStatus::accepted && b.status() == AuthStatus::accepted
                               ? AuthStatus::accepted
                               : AuthStatus::rejected;
  out.accepted = out.transcript.outcome == AuthStatus::accepted;
  out.initiator_failure = a.failure();
  out.responder_failure = b.failure();
  if (out.accepted) {
    out.initiator_key = a.session_key();
    out.responder_key = b.session_key();
    out.initiator_view_of_responder = a.peer_identity();
    out.responder_view_of_initiator = b.peer_identity();
    if (initiator_store && responder_store) exchange_revocations(*initiator_store, *responder_store);
  }
  return out;
}

/// Rate-limits authentication attempts: at most one attempt per neighbour
/// pseudonym per period, never toward already-authenticated neighbours.
class AuthScheduler {
 public:
  explicit AuthScheduler(double period = 20.0) : period_(period) {}

  double period() const { return period_; }

  std::vector<Bytes> due(const std::vector<Bytes> &neighbors, const std::set<Bytes> &authenticated, double now) {
    std::vector<Bytes> out;
    for (const auto &n : neighbors) {
      if (authenticated.count(n)) continue;
      auto it = last_attempt_.find(n);
      if (it != last_attempt_.end() && now - it->second < period_) continue;
      last_attempt_[n] = now;
      out.push_back(n);
    }
    return out;
  }

  void forget_older_than(double cutoff) {
    std::erase_if(last_attempt_, [&](const auto &kv) { return kv.second < cutoff; });
  }

 private:
  double period_;
  std::map<Bytes, double> last_attempt_;
};

/// Distinct authenticated peers this journey, counted by user identity so a
/// pseudonym change does not create a new peer.
class JourneyContactLog {
 public:
  void record(const UserId &peer, double now) {
    if (!first_auth_at_) first_auth_at_ = now;
    peers_.insert(peer);
  }
  std::optional<double> first_auth_at() const { return first_auth_at_; }
  std::size_t distinct_peers() const { return peers_.size(); }
  void reset() {
    first_auth_at_.reset();
    peers_.clear();
  }

 private:
  std::optional<double> first_auth_at_;
  std::set<UserId> peers_;
};

inline void record_journey_contact(JourneyContactLog &log, const UserId &peer, double now) { log.record(peer, now); }

}  // namespace vanet
