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

// Corroboration of congestion reports and threshold-signed aggregates.

#include "vanet/auth.hpp"
#include "vanet/cipher.hpp"
#include "vanet/events.hpp"
#include "vanet/trust.hpp"
#include "vanet/wire.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace vanet {

inline constexpr double kTimeQuantum = 60.0;
inline constexpr std::size_t kMinSignatures = 2;

/// Byte-exact signing input: road u32, direction u8, cell x/y i32 and the
/// 60 s time bucket u32, all big-endian.
inline Bytes canonical_encoding(const CongestionObservation &o, double cell_size = 200.0) {
  ByteWriter w;
  w.u32(o.road)
      .u8(static_cast<std::uint8_t>(o.direction))
      .i32(static_cast<std::int32_t>(std::floor(o.location.x / cell_size)))
      .i32(static_cast<std::int32_t>(std::floor(o.location.y / cell_size)))
      .u32(static_cast<std::uint32_t>(std::floor(o.detected_at / kTimeQuantum)));
  return w.take();
}

/// Dedup key for relaying.
inline Bytes event_id(const CongestionObservation &o) { return sha256(canonical_encoding(o)); }

//------------------------------------------------------------------------------
// Threshold
//------------------------------------------------------------------------------

/// Distinct authenticated peers per minute of journey; nullopt before the
/// first authentication. The elapsed time is floored at one second.
inline std::optional<double> avg_users_per_minute(const JourneyContactLog &log, double now) {
  auto first = log.first_auth_at();
  if (!first) return std::nullopt;
  double minutes = std::max((now - *first) / 60.0, 1.0 / 60.0);
  return static_cast<double>(log.distinct_peers()) / minutes;
}

inline std::size_t required_signatures(std::optional<double> rate) {
  if (!rate || *rate < 1.0) return 2;
  if (*rate <= 4.0) return 4;
  return 5;
}

//------------------------------------------------------------------------------
// Signatures
//------------------------------------------------------------------------------

struct SignedObservation {
  CongestionObservation observation;
  Bytes signer_pseudonym;
  Certificate signer_certificate;  // signer's self-certificate
  Bytes signature;                 // over canonical_encoding(observation)

  /// The signer's key, which is what distinctness is judged by.
  const Bytes &signer_key() const { return signer_certificate.subject_public_key; }

  bool verify() const {
    return signer_certificate.self_signed() && signer_certificate.verify() &&
           ed25519_verify(signer_key(), canonical_encoding(observation), signature);
  }

  void encode(ByteWriter &w) const {
    observation.encode(w);
    w.blob(signer_pseudonym);
    signer_certificate.encode(w);
    w.blob(signature);
  }
  static SignedObservation decode(ByteReader &r) {
    SignedObservation s;
    s.observation = CongestionObservation::decode(r);
    s.signer_pseudonym = r.blob();
    s.signer_certificate = Certificate::decode(r);
    s.signature = r.blob();
    return s;
  }
};

inline SignedObservation sign_observation(const CongestionObservation &o, const User &signer, const Bytes &pseudonym) {
  return {o, pseudonym, *signer.repository.self_certificate(), ed25519_sign(signer.keys.private_key, canonical_encoding(o))};
}

struct AggregatedEvent {
  CongestionObservation observation;
  std::vector<SignedObservation> signatures;
  Bytes promoter_pseudonym;
  double created_at = 0.0;
  std::uint8_t required_threshold = 2;  // the promoter's regime

  Bytes id() const { return event_id(observation); }

  void encode(ByteWriter &w) const {
    observation.encode(w);
    w.blob(promoter_pseudonym).f64(created_at).u8(required_threshold).u16(static_cast<std::uint16_t>(signatures.size()));
    for (const auto &s : signatures) s.encode(w);
  }
  Bytes encode() const {
    ByteWriter w;
    encode(w);
    return w.take();
  }
  static AggregatedEvent decode(ByteReader &r) {
    AggregatedEvent e;
    e.observation = CongestionObservation::decode(r);
    e.promoter_pseudonym = r.blob();
    e.created_at = r.f64();
    e.required_threshold = r.u8();
    auto n = r.u16();
    for (std::uint16_t i = 0; i < n; ++i) e.signatures.push_back(SignedObservation::decode(r));
    return e;
  }
  static AggregatedEvent decode(ByteView data) {
    ByteReader r(data);
    auto e = decode(r);
    r.expect_done();
    return e;
  }
};

//------------------------------------------------------------------------------
// Protocol steps
//------------------------------------------------------------------------------

inline Bytes corroboration_request_payload(const CongestionObservation &o) {
  ByteWriter w;
  o.encode(w);
  return frame(MessageTag::corroboration_request, w.bytes());
}

struct CorroborationFanout {
  std::vector<std::pair<std::uint32_t, EncryptedPayload>> copies;  // (peer, sealed request)
  bool retry = false;  // nobody to ask yet
};

/// One sealed copy of the warning per authenticated neighbour.
inline CorroborationFanout request_corroboration(const CongestionObservation &o, std::span<const PeerSessionRef> sessions,
                                                 Rng &rng) {
  CorroborationFanout out;
  auto payload = corroboration_request_payload(o);
  for (const auto &s : sessions) out.copies.emplace_back(s.peer, seal(s.session_key, payload, rng));
  out.retry = out.copies.empty();
  return out;
}

/// Same road and direction, within one cell size of the reported spot.
inline bool same_congestion(const CongestionObservation &a, SegmentId road, Direction d, const GeoCoordinate &where,
                            double cell_size) {
  return a.road == road && a.direction == d && distance(a.location, where) <= cell_size;
}

/// The receiver signs the received observation iff it stands in the same jam
/// and its own detector fires on its own history.
inline std::optional<SignedObservation> corroborate(std::span<const Sample> own_history, const RoadNetwork &net,
                                                    const DetectionConfig &cfg, const CongestionObservation &o,
                                                    const User &receiver, const Bytes &pseudonym) {
  if (own_history.empty() || !net.has_segment(o.road)) return std::nullopt;
  const auto &now = own_history.back().state;
  if (!same_congestion(o, now.segment, now.direction, now.position, cfg.cell_size)) return std::nullopt;
  if (!congestion_predicate(own_history, net, cfg)) return std::nullopt;
  return sign_observation(o, receiver, pseudonym);
}

/// Builds the aggregate once the distinct valid signatures (promoter's own
/// first) reach the threshold for `rate`. Signatures that fail to verify,
/// cover another observation, come from a revoked signer or repeat a key
/// are skipped.
inline std::optional<AggregatedEvent> assemble_aggregate(const SignedObservation &own,
                                                         std::span<const SignedObservation> collected,
                                                         std::optional<double> rate, double now,
                                                         const RevocationStore *revocations = nullptr) {
  const auto want = canonical_encoding(own.observation);
  AggregatedEvent e{own.observation, {}, own.signer_pseudonym, now, static_cast<std::uint8_t>(required_signatures(rate))};
  std::set<Bytes> keys;
  auto take = [&](const SignedObservation &s) {
    if (!s.verify() || canonical_encoding(s.observation) != want) return;
    if (revocations && revocations->is_revoked(s.signer_certificate.subject)) return;
    if (!keys.insert(s.signer_key()).second) return;
    e.signatures.push_back(s);
  };
  take(own);
  for (const auto &s : collected) take(s);
  if (e.signatures.size() < e.required_threshold) return std::nullopt;
  return e;
}

enum class AggregateRejection { none, bad_signature, duplicate_signer, mismatch, below_threshold, revoked };

inline const char *to_string(AggregateRejection r) {
  switch (r) {
    case AggregateRejection::none: return "accepted";
    case AggregateRejection::bad_signature: return "bad-signature";
    case AggregateRejection::duplicate_signer: return "duplicate-signer";
    case AggregateRejection::mismatch: return "mismatch";
    case AggregateRejection::below_threshold: return "below-threshold";
    case AggregateRejection::revoked: return "revoked";
  }
  return "?";
}

struct AggregateVerdict {
  AggregateRejection reason = AggregateRejection::none;
  bool accepted() const { return reason == AggregateRejection::none; }
};

/// Checks, in order: every signature verifies, covers the event's
/// observation, comes from an unrevoked signer, and no key signs twice; then
/// the count against max(2, embedded threshold). A key that signs twice
/// under different pseudonyms is provable self-corroboration and is
/// reported when `reports` is given.
inline AggregateVerdict verify_aggregate(const AggregatedEvent &e, const RevocationStore *revocations = nullptr,
                                         RevocationStore *reports = nullptr) {
  const auto want = canonical_encoding(e.observation);
  std::set<Bytes> keys;
  for (const auto &s : e.signatures) {
    if (!s.verify()) return {AggregateRejection::bad_signature};
    if (canonical_encoding(s.observation) != want) return {AggregateRejection::mismatch};
    if (revocations && revocations->is_revoked(s.signer_certificate.subject)) return {AggregateRejection::revoked};
    if (!keys.insert(s.signer_key()).second) {
      if (reports) reports->report(s.signer_certificate.subject);
      return {AggregateRejection::duplicate_signer};
    }
  }
  std::size_t needed = std::max<std::size_t>(kMinSignatures, e.required_threshold);
  if (e.signatures.size() < needed) return {AggregateRejection::below_threshold};
  return {};
}

}  // namespace vanet
