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

// Local event detection and the node's event store: congestion, vacated
// parking spaces, the owner's parked car, and geolocated adverts.

#include "vanet/crypto.hpp"
#include "vanet/geo.hpp"
#include "vanet/trust.hpp"
#include "vanet/wire.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vanet {

struct DetectionConfig {
  double speed_fraction = 0.4;  // congested below this share of the limit
  double sustain_window = 60.0;
  double min_limit = 30.0;  // km/h; slower roads never report congestion
  double cooldown = 300.0;  // one observation per (road, direction) per cooldown
  double cell_size = 200.0;
  double congestion_ttl = 900.0;
  double parking_ttl = 60.0;

  void validate() const {
    if (!(speed_fraction > 0.0 && speed_fraction < 1.0)) throw ValidationError("speed_fraction must be in (0, 1)");
    if (!(sustain_window > 0.0)) throw ValidationError("sustain_window must be > 0");
    if (!(parking_ttl > 0.0)) throw ValidationError("parking ttl must be > 0");
    if (!(cell_size > 0.0)) throw ValidationError("cell_size must be > 0");
  }
};

/// One GPS reading of the node's own vehicle.
struct Sample {
  double t = 0.0;
  VehicleState state;
  bool gps_fix = true;
};

struct CongestionObservation {
  SegmentId road = 0;
  Direction direction = Direction::forward;
  GeoCoordinate location;
  double detected_at = 0.0;
  Bytes observer_pseudonym;

  void encode(ByteWriter &w) const {
    w.u32(road).u8(static_cast<std::uint8_t>(direction)).f64(location.x).f64(location.y).f64(detected_at).blob(observer_pseudonym);
  }
  static CongestionObservation decode(ByteReader &r) {
    CongestionObservation o;
    o.road = r.u32();
    auto d = r.u8();
    if (d > 1) throw WireError("bad direction");
    o.direction = static_cast<Direction>(d);
    o.location.x = r.f64();
    o.location.y = r.f64();
    o.detected_at = r.f64();
    o.observer_pseudonym = r.blob();
    return o;
  }
};

/// True iff the samples cover the sustain window and every sample in it is
/// a GPS-fixed, ignition-on reading below speed_fraction x limit on a road
/// whose limit is at least min_limit.
inline bool congestion_predicate(std::span<const Sample> history, const RoadNetwork &net, const DetectionConfig &cfg) {
  if (history.empty() || !history.back().gps_fix) return false;
  const double now = history.back().t;
  const double start = now - cfg.sustain_window;
  constexpr double eps = 1e-9;
  if (history.front().t > start + eps) return false;
  for (const auto &s : history) {
    if (s.t < start - eps) continue;
    if (!s.gps_fix || s.state.ignition != Ignition::on) return false;
    const auto &seg = net.segment(s.state.segment);
    if (seg.speed_limit < cfg.min_limit) return false;
    if (!(s.state.speed < cfg.speed_fraction * seg.speed_limit)) return false;
  }
  return true;
}

/// Stateless detection: an observation at the latest sample, or nothing.
inline std::optional<CongestionObservation> detect_congestion(std::span<const Sample> history, const RoadNetwork &net,
                                                              const DetectionConfig &cfg, const Bytes &pseudonym) {
  if (!congestion_predicate(history, net, cfg)) return std::nullopt;
  const auto &last = history.back();
  return CongestionObservation{last.state.segment, last.state.direction, last.state.position, last.t, pseudonym};
}

/// Detection with the per-(road, direction) cooldown.
class CongestionDetector {
 public:
  explicit CongestionDetector(DetectionConfig cfg = {}) : cfg_(cfg) {}

  const DetectionConfig &config() const { return cfg_; }

  std::optional<CongestionObservation> evaluate(std::span<const Sample> history, const RoadNetwork &net,
                                                const Bytes &pseudonym) {
    auto obs = detect_congestion(history, net, cfg_, pseudonym);
    if (!obs) return std::nullopt;
    if (cooling_down(obs->road, obs->direction, obs->detected_at)) return std::nullopt;
    suppress(obs->road, obs->direction, obs->detected_at);
    return obs;
  }

  bool cooling_down(SegmentId road, Direction d, double now) const {
    auto it = last_.find({road, d});
    return it != last_.end() && now - it->second < cfg_.cooldown;
  }

  /// Starts a cooldown without emitting (used after signing someone else's
  /// report of the same jam).
  void suppress(SegmentId road, Direction d, double now) { last_[{road, d}] = now; }

  void reset() { last_.clear(); }

 private:
  DetectionConfig cfg_;
  std::map<std::pair<SegmentId, Direction>, double> last_;
};

//------------------------------------------------------------------------------
// Parking
//------------------------------------------------------------------------------

struct ParkingEvent {
  GeoCoordinate location;
  double announced_at = 0.0;
  double ttl = 60.0;

  /// Inclusive at exactly announced_at + ttl.
  bool visible(double now) const { return now <= announced_at + ttl; }

  void encode(ByteWriter &w) const { w.f64(location.x).f64(location.y).f64(announced_at).f64(ttl); }
  static ParkingEvent decode(ByteReader &r) {
    ParkingEvent e;
    e.location.x = r.f64();
    e.location.y = r.f64();
    e.announced_at = r.f64();
    e.ttl = r.f64();
    if (!(e.ttl > 0.0)) throw WireError("parking event ttl must be > 0");
    return e;
  }
  Bytes id() const {
    ByteWriter w;
    w.raw(as_bytes("vanet-parking"));
    encode(w);
    return sha256(w.bytes());
  }
};

struct ParkedLocation {
  GeoCoordinate location;
  double parked_at = 0.0;
};

/// On ignition off: overwrite the parked record. Without a fix the old
/// record is stale, so it is cleared and later queries report unavailable.
inline std::optional<ParkedLocation> store_parked_location(std::optional<ParkedLocation> &slot,
                                                           const GeoCoordinate &position, double now, bool gps_fix) {
  if (!gps_fix) {
    slot.reset();
    return std::nullopt;
  }
  slot = ParkedLocation{position, now};
  return slot;
}

/// On ignition on: the spot the car is leaving becomes a (potential) free
/// space. Occupancy is not verified.
inline std::optional<ParkingEvent> detect_parking_vacancy(const std::optional<ParkedLocation> &parked, double now,
                                                          bool gps_fix, double ttl = 60.0) {
  if (!parked || !gps_fix) return std::nullopt;
  if (!(ttl > 0.0)) throw ValidationError("parking ttl must be > 0");
  return ParkingEvent{parked->location, now, ttl};
}

//------------------------------------------------------------------------------
// Walking route back to the parked car
//------------------------------------------------------------------------------

struct WalkingRoute {
  std::vector<GeoCoordinate> points;
  double length = 0.0;
};

inline double polyline_length(const std::vector<GeoCoordinate> &pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  return total;
}

inline void push_distinct(std::vector<GeoCoordinate> &pts, const GeoCoordinate &p) {
  if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
}

/// Shortest walk over the road network (every segment two-way, cost =
/// length). Both ends snap to the nearest point of the nearest segment.
/// Returns nullopt when no parked record exists.
inline std::optional<WalkingRoute> walking_route(const GeoCoordinate &current, const std::optional<ParkedLocation> &parked,
                                                 const RoadNetwork &net) {
  if (!parked) return std::nullopt;
  if (current == parked->location) return WalkingRoute{{current}, 0.0};
  auto pa = net.project(current);
  auto pb = net.project(parked->location);
  const auto &sa = net.segment(pa.segment);
  const auto &sb = net.segment(pb.segment);

  std::optional<WalkingRoute> best;
  auto consider = [&](std::vector<GeoCoordinate> pts) {
    double len = polyline_length(pts);
    if (!best || len < best->length) best = WalkingRoute{std::move(pts), len};
  };

  if (pa.segment == pb.segment) {
    std::vector<GeoCoordinate> pts;
    for (const auto &p : {current, pa.point, pb.point, parked->location}) push_distinct(pts, p);
    consider(std::move(pts));
  }
  auto by_length = [](const RouteStep &, const RoadSegment &s) { return s.length; };
  for (JunctionId ja : {sa.from, sa.to}) {
    for (JunctionId jb : {sb.from, sb.to}) {
      auto path = shortest_path(net, ja, jb, by_length, false);
      if (!path) continue;
      std::vector<GeoCoordinate> pts;
      push_distinct(pts, current);
      push_distinct(pts, pa.point);
      push_distinct(pts, net.junction(ja));
      for (const auto &step : path->steps) push_distinct(pts, net.junction(net.segment(step.segment).exit(step.direction)));
      push_distinct(pts, pb.point);
      push_distinct(pts, parked->location);
      consider(std::move(pts));
    }
  }
  return best;
}

//------------------------------------------------------------------------------
// Adverts
//------------------------------------------------------------------------------

inline constexpr std::size_t kMaxAdvertMessage = 140;

struct AdvertEvent {
  std::string company;
  std::string message;
  GeoCoordinate location;
  double area_radius = 0.0;
  double expiration = 0.0;
  std::string logo_ref;
  Certificate certificate;  // vouches for the company key
  Bytes signature;          // company key over signed_fields()

  Bytes signed_fields() const {
    ByteWriter w;
    w.raw(as_bytes("vanet-advert")).str(company).str(message).f64(location.x).f64(location.y).f64(area_radius).f64(expiration).str(logo_ref);
    return w.take();
  }

  /// Certificate verifies and the company key signed the advert.
  bool authentic() const {
    return certificate.verify() && ed25519_verify(certificate.subject_public_key, signed_fields(), signature);
  }

  void encode(ByteWriter &w) const {
    w.str(company).str(message).f64(location.x).f64(location.y).f64(area_radius).f64(expiration).str(logo_ref);
    certificate.encode(w);
    w.blob(signature);
  }
  static AdvertEvent decode(ByteReader &r) {
    AdvertEvent a;
    a.company = r.str();
    a.message = r.str();
    a.location.x = r.f64();
    a.location.y = r.f64();
    a.area_radius = r.f64();
    a.expiration = r.f64();
    a.logo_ref = r.str();
    a.certificate = Certificate::decode(r);
    a.signature = r.blob();
    return a;
  }
  Bytes id() const { return sha256(signed_fields()); }
};

inline AdvertEvent make_advert(std::string company, std::string message, GeoCoordinate location, double radius,
                               double expiration, const User &signer, std::string logo_ref = {}) {
  if (message.size() > kMaxAdvertMessage) throw ValidationError("advert message exceeds 140 characters");
  if (!(radius > 0.0)) throw ValidationError("advert area radius must be > 0");
  AdvertEvent a{std::move(company), std::move(message), location, radius, expiration, std::move(logo_ref), {}, {}};
  a.certificate = *signer.repository.self_certificate();
  a.signature = ed25519_sign(signer.keys.private_key, a.signed_fields());
  return a;
}

struct AdvertFilters {
  std::set<std::string> allowed;  // empty: every company
  std::set<std::string> blocked;
  bool passes(const std::string &company) const {
    return !blocked.count(company) && (allowed.empty() || allowed.count(company));
  }
};

enum class AdvertVerdict { shown, outside_area, expired, filtered, invalid_certificate };

inline const char *to_string(AdvertVerdict v) {
  switch (v) {
    case AdvertVerdict::shown: return "shown";
    case AdvertVerdict::outside_area: return "outside-area";
    case AdvertVerdict::expired: return "expired";
    case AdvertVerdict::filtered: return "filtered";
    case AdvertVerdict::invalid_certificate: return "invalid-certificate";
  }
  return "?";
}

/// Shown iff authentic, inside the area, unexpired and allowed by the
/// receiver's filters. A forged advert gets its certificate subject reported.
inline AdvertVerdict deliver_advert(const AdvertEvent &ad, const GeoCoordinate &receiver, double now,
                                    const AdvertFilters &filters, RevocationStore *reports = nullptr) {
  if (!ad.authentic()) {
    if (reports && !ad.certificate.subject.empty()) reports->report(ad.certificate.subject);
    return AdvertVerdict::invalid_certificate;
  }
  if (!(now < ad.expiration)) return AdvertVerdict::expired;
  if (distance(receiver, ad.location) > ad.area_radius) return AdvertVerdict::outside_area;
  if (!filters.passes(ad.company)) return AdvertVerdict::filtered;
  return AdvertVerdict::shown;
}

/// Advert package:
///   advert <company> <x> <y> <radius> <expiry> <message...>
///   cert <subject> <signer> <hex signature> <hex subject key> <hex signer key>
///   sig <hex advert signature>
///   logo <ref>            (optional)
inline AdvertEvent load_advert(std::istream &in) {
  AdvertEvent a;
  bool have_advert = false, have_cert = false, have_sig = false;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::is_blank_or_comment(line)) continue;
    auto tok = detail::split_ws(line);
    if (tok[0] == "advert") {
      if (tok.size() < 7) throw ParseError(n, "advert expects <company> <x> <y> <radius> <expiry> <message...>");
      a.company = tok[1];
      a.location = {detail::parse_number<double>(tok[2], n, "x"), detail::parse_number<double>(tok[3], n, "y")};
      a.area_radius = detail::parse_number<double>(tok[4], n, "radius");
      a.expiration = detail::parse_number<double>(tok[5], n, "expiry");
      auto msg_start = line.find(tok[6], line.find(tok[5]) + tok[5].size());
      a.message = line.substr(msg_start);
      while (!a.message.empty() && (a.message.back() == '\r' || a.message.back() == ' ')) a.message.pop_back();
      if (a.message.size() > kMaxAdvertMessage) throw ParseError(n, "advert message exceeds 140 characters");
      if (!(a.area_radius > 0.0)) throw ParseError(n, "advert radius must be > 0");
      have_advert = true;
    } else if (tok[0] == "cert") {
      if (tok.size() != 6) throw ParseError(n, "cert expects <subject> <signer> <sig> <subject key> <signer key>");
      try {
        a.certificate.subject = tok[1];
        a.certificate.signer = tok[2];
        a.certificate.signature = from_hex(tok[3]);
        a.certificate.subject_public_key = from_hex(tok[4]);
        a.certificate.signer_public_key = from_hex(tok[5]);
      } catch (const std::invalid_argument &e) {
        throw ParseError(n, e.what());
      }
      have_cert = true;
    } else if (tok[0] == "sig") {
      if (tok.size() != 2) throw ParseError(n, "sig expects <hex>");
      try {
        a.signature = from_hex(tok[1]);
      } catch (const std::invalid_argument &e) {
        throw ParseError(n, e.what());
      }
      have_sig = true;
    } else if (tok[0] == "logo") {
      if (tok.size() != 2) throw ParseError(n, "logo expects <ref>");
      a.logo_ref = tok[1];
    } else {
      throw ParseError(n, "unknown record '" + tok[0] + "'");
    }
  }
  if (!have_advert || !have_cert || !have_sig) throw ParseError(n, "advert package needs advert, cert and sig lines");
  return a;
}

inline void write_advert(std::ostream &out, const AdvertEvent &a) {
  out << "advert " << a.company << ' ' << a.location.x << ' ' << a.location.y << ' ' << a.area_radius << ' '
      << a.expiration << ' ' << a.message << '\n';
  out << "cert " << a.certificate.subject << ' ' << a.certificate.signer << ' ' << to_hex(a.certificate.signature) << ' '
      << to_hex(a.certificate.subject_public_key) << ' ' << to_hex(a.certificate.signer_public_key) << '\n';
  out << "sig " << to_hex(a.signature) << '\n';
  if (!a.logo_ref.empty()) out << "logo " << a.logo_ref << '\n';
}

//------------------------------------------------------------------------------
// Event store and expiry
//------------------------------------------------------------------------------

struct StoredCongestion {
  Bytes id;
  CongestionObservation observation;
  double received_at = 0.0;
};

struct StoredParking {
  Bytes id;
  ParkingEvent event;
};

struct StoredAdvert {
  Bytes id;
  AdvertEvent advert;
};

struct EventStore {
  std::vector<StoredCongestion> congestion;
  std::vector<StoredParking> parking;
  std::vector<StoredAdvert> adverts;

  bool empty() const { return congestion.empty() && parking.empty() && adverts.empty(); }

  /// Parking spaces a searcher would be shown right now.
  std::vector<ParkingEvent> visible_parking(double now) const {
    std::vector<ParkingEvent> out;
    for (const auto &p : parking)
      if (p.event.visible(now)) out.push_back(p.event);
    return out;
  }
};

struct ExpiredEvent {
  std::string kind;  // "parking", "congestion" or "advert"
  Bytes id;
};

/// Drops parking events past announced_at + ttl, adverts at or past their
/// expiration and congestion reports older than congestion_ttl.
inline std::vector<ExpiredEvent> expire_events(EventStore &store, double now, const DetectionConfig &cfg = {}) {
  std::vector<ExpiredEvent> gone;
  std::erase_if(store.parking, [&](const StoredParking &p) {
    if (p.event.visible(now)) return false;
    gone.push_back({"parking", p.id});
    return true;
  });
  std::erase_if(store.adverts, [&](const StoredAdvert &a) {
    if (now < a.advert.expiration) return false;
    gone.push_back({"advert", a.id});
    return true;
  });
  std::erase_if(store.congestion, [&](const StoredCongestion &c) {
    if (now <= c.observation.detected_at + cfg.congestion_ttl) return false;
    gone.push_back({"congestion", c.id});
    return true;
  });
  return gone;
}

}  // namespace vanet
