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

#include "oracles.hpp"

#include "vanet/events.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vanet;

namespace {

// Segments 1..N of a 3x3 grid; limits alternate so some roads are too slow
// to ever count as congested.
RoadNetwork mixed_grid() {
  auto doc = grid_document(3, 3, 200, 50);
  std::ostringstream out;
  std::istringstream in(doc);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.rfind("segment", 0) == 0 && ++n % 3 == 0) line.replace(line.find(" 50 "), 4, " 20 ");
    out << line << '\n';
  }
  return parse_network(out.str());
}

Sample sample(double t, SegmentId seg, double speed, bool fix = true, Ignition ign = Ignition::on) {
  Sample s;
  s.t = t;
  s.gps_fix = fix;
  s.state.segment = seg;
  s.state.speed = speed;
  s.state.ignition = ign;
  return s;
}

// Reference: walk back from the last sample second by second.
bool congested_oracle(const std::vector<Sample> &h, const RoadNetwork &net, double window) {
  if (h.empty()) return false;
  const double now = h.back().t;
  bool covered = false;
  for (const auto &s : h) {
    if (now - s.t > window + 1e-9) continue;
    if (!s.gps_fix) return false;
    if (s.state.ignition == Ignition::off) return false;
    double limit = net.segment(s.state.segment).speed_limit;
    if (limit < 30.0) return false;
    if (s.state.speed * 10 >= limit * 4) return false;
  }
  for (const auto &s : h)
    if (now - s.t >= window - 1e-9) covered = true;
  return covered;
}

User company(const std::string &name, std::uint64_t seed) {
  Roster r;
  return r.register_user(name, seed);
}

}  // namespace

TEST(Congestion, PredicateMatchesReference) {
  auto net = mixed_grid();
  auto rng = Rng::derive(1, "congestion");
  DetectionConfig cfg;
  int positives = 0;
  for (int round = 0; round < 3000; ++round) {
    std::vector<Sample> h;
    double t = rng.below(50);
    int n = 1 + static_cast<int>(rng.below(120));
    SegmentId seg = 1 + static_cast<SegmentId>(rng.below(net.segments().size()));
    for (int i = 0; i < n; ++i) {
      if (rng.below(400) == 0) seg = 1 + static_cast<SegmentId>(rng.below(net.segments().size()));
      double limit = net.segment(seg).speed_limit;
      double speed = rng.below(300) == 0 ? limit * rng.unit() : limit * 0.39 * rng.unit();
      h.push_back(sample(t, seg, speed, rng.below(1000) != 0, rng.below(1000) ? Ignition::on : Ignition::off));
      t += 1.0;
    }
    bool want = congested_oracle(h, net, cfg.sustain_window);
    positives += want;
    ASSERT_EQ(congestion_predicate(h, net, cfg), want) << "round " << round;
    auto obs = detect_congestion(h, net, cfg, Bytes(16, 7));
    ASSERT_EQ(obs.has_value(), want);
    if (obs) {
      EXPECT_EQ(obs->road, h.back().state.segment);
      EXPECT_EQ(obs->detected_at, h.back().t);
    }
  }
  EXPECT_GT(positives, 100);
}

TEST(Congestion, BoundarySpeedIsNotCongested) {
  auto net = parse_network(grid_document(1, 2, 500, 50));
  DetectionConfig cfg;
  std::vector<Sample> h;
  for (int t = 0; t <= 60; ++t) h.push_back(sample(t, 1, 20.0));  // exactly 0.4 x 50
  EXPECT_FALSE(congestion_predicate(h, net, cfg));
  h.back().state.speed = 19.99;
  for (auto &s : h) s.state.speed = 19.99;
  EXPECT_TRUE(congestion_predicate(h, net, cfg));
  h.erase(h.begin());  // window no longer covered
  EXPECT_FALSE(congestion_predicate(h, net, cfg));
}

TEST(Congestion, DetectorCooldownPerRoadAndDirection) {
  auto net = parse_network(grid_document(1, 3, 500, 60));
  CongestionDetector det;
  std::vector<Sample> h;
  int emitted = 0;
  for (int t = 0; t < 1000; ++t) {
    h.push_back(sample(t, 1, 5.0));
    if (det.evaluate(h, net, Bytes(16, 1))) ++emitted;
  }
  // First at t=60, then every 300 s.
  EXPECT_EQ(emitted, 4);
  EXPECT_FALSE(det.cooling_down(2, Direction::forward, 999));
  EXPECT_FALSE(det.cooling_down(1, Direction::reverse, 999));
  det.suppress(2, Direction::forward, 100);
  EXPECT_TRUE(det.cooling_down(2, Direction::forward, 399));
  EXPECT_FALSE(det.cooling_down(2, Direction::forward, 400));
}

TEST(Congestion, ObservationCodec) {
  CongestionObservation o{7, Direction::reverse, {12.5, -3}, 99.0, Bytes(16, 4)};
  ByteWriter w;
  o.encode(w);
  ByteReader r(w.bytes());
  auto back = CongestionObservation::decode(r);
  EXPECT_EQ(back.road, 7u);
  EXPECT_EQ(back.direction, Direction::reverse);
  EXPECT_EQ(back.location.x, 12.5);
  EXPECT_EQ(back.observer_pseudonym, o.observer_pseudonym);
  auto bytes = w.bytes();
  bytes[4] = 2;
  ByteReader bad(bytes);
  EXPECT_THROW(CongestionObservation::decode(bad), WireError);
}

TEST(Config, RejectsNonsense) {
  DetectionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.speed_fraction = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.parking_ttl = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Parking, StoreAndVacancyFollowTheFix) {
  std::optional<ParkedLocation> slot;
  EXPECT_FALSE(detect_parking_vacancy(slot, 5.0, true));
  store_parked_location(slot, {10, 20}, 3.0, true);
  ASSERT_TRUE(slot);
  auto ev = detect_parking_vacancy(slot, 50.0, true, 30.0);
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->location, (GeoCoordinate{10, 20}));
  EXPECT_EQ(ev->announced_at, 50.0);
  EXPECT_FALSE(detect_parking_vacancy(slot, 50.0, false));
  EXPECT_THROW(detect_parking_vacancy(slot, 50.0, true, 0.0), ValidationError);
  store_parked_location(slot, {1, 1}, 60.0, false);  // no fix: old spot is stale
  EXPECT_FALSE(slot);
}

TEST(Parking, VisibleThroughTtlInclusive) {
  ParkingEvent e{{0, 0}, 10.0, 60.0};
  EXPECT_TRUE(e.visible(10.0));
  EXPECT_TRUE(e.visible(70.0));
  EXPECT_FALSE(e.visible(70.001));
  EventStore store;
  store.parking.push_back({e.id(), e});
  EXPECT_TRUE(expire_events(store, 70.0).empty());
  EXPECT_EQ(store.visible_parking(70.0).size(), 1u);
  auto gone = expire_events(store, 71.0);
  ASSERT_EQ(gone.size(), 1u);
  EXPECT_EQ(gone[0].kind, "parking");
  EXPECT_EQ(gone[0].id, e.id());
  EXPECT_TRUE(store.empty());
}

TEST(Parking, CodecRejectsZeroTtl) {
  ParkingEvent e{{3, 4}, 1.0, 60.0};
  ByteWriter w;
  e.encode(w);
  ByteReader r(w.bytes());
  auto back = ParkingEvent::decode(r);
  EXPECT_EQ(back.id(), e.id());
  e.ttl = 0;
  ByteWriter w2;
  e.encode(w2);
  ByteReader r2(w2.bytes());
  EXPECT_THROW(ParkingEvent::decode(r2), WireError);
}

TEST(Expiry, CongestionAndAdvertsAge) {
  EventStore store;
  CongestionObservation o{1, Direction::forward, {}, 100.0, {}};
  store.congestion.push_back({Bytes{1}, o, 100.0});
  auto c = company("acme", 9);
  auto ad = make_advert("acme", "sale", {0, 0}, 100, 500, c);
  store.adverts.push_back({ad.id(), ad});
  EXPECT_TRUE(expire_events(store, 499.9).empty());
  auto gone = expire_events(store, 500.0);
  ASSERT_EQ(gone.size(), 1u);
  EXPECT_EQ(gone[0].kind, "advert");
  EXPECT_TRUE(expire_events(store, 1000.0).empty());
  EXPECT_EQ(expire_events(store, 1000.1).size(), 1u);
}

TEST(Walking, MatchesBruteForceOnGrid) {
  auto net = parse_network(grid_document(3, 4, 100, 50));
  auto rng = Rng::derive(2, "walk");
  for (int i = 0; i < 400; ++i) {
    GeoCoordinate here{rng.uniform(-50, 350), rng.uniform(-50, 250)};
    GeoCoordinate car{rng.uniform(-50, 350), rng.uniform(-50, 250)};
    if (rng.below(10) == 0) car = {100.0 * rng.below(4), 100.0 * rng.below(3)};  // on a junction
    auto route = walking_route(here, ParkedLocation{car, 0.0}, net);
    ASSERT_TRUE(route);
    EXPECT_NEAR(route->length, oracle::walking_length(here, car, net), 1e-6) << i;
    EXPECT_NEAR(route->length, polyline_length(route->points), 1e-9);
    EXPECT_EQ(route->points.front(), here);
    EXPECT_EQ(route->points.back(), car);
    EXPECT_GE(route->length + 1e-9, oracle::dist(here, car));
  }
}

TEST(Walking, NoParkedRecordNoRoute) {
  auto net = parse_network(grid_document(2, 2, 100, 50));
  EXPECT_FALSE(walking_route({0, 0}, std::nullopt, net));
  auto same = walking_route({5, 5}, ParkedLocation{{5, 5}, 0}, net);
  ASSERT_TRUE(same);
  EXPECT_EQ(same->length, 0.0);
}

TEST(Advert, ShownOnlyWhenAllConditionsHold) {
  auto acme = company("acme", 11);
  auto ad = make_advert("acme", "two for one", {100, 100}, 50, 200, acme, "logo.png");
  ASSERT_TRUE(ad.authentic());
  AdvertFilters none;
  EXPECT_EQ(deliver_advert(ad, {120, 100}, 10, none), AdvertVerdict::shown);
  EXPECT_EQ(deliver_advert(ad, {150, 100}, 10, none), AdvertVerdict::shown);  // on the edge
  EXPECT_EQ(deliver_advert(ad, {151, 100}, 10, none), AdvertVerdict::outside_area);
  EXPECT_EQ(deliver_advert(ad, {100, 100}, 200, none), AdvertVerdict::expired);
  AdvertFilters blocked{{}, {"acme"}};
  EXPECT_EQ(deliver_advert(ad, {100, 100}, 10, blocked), AdvertVerdict::filtered);
  AdvertFilters only_other{{"other"}, {}};
  EXPECT_EQ(deliver_advert(ad, {100, 100}, 10, only_other), AdvertVerdict::filtered);
  AdvertFilters only_acme{{"acme"}, {}};
  EXPECT_EQ(deliver_advert(ad, {100, 100}, 10, only_acme), AdvertVerdict::shown);
}

TEST(Advert, ForgeriesAreReported) {
  auto acme = company("acme", 11);
  auto evil = company("evil", 12);
  auto ad = make_advert("acme", "real", {0, 0}, 50, 200, acme);
  RevocationStore reports;
  auto edited = ad;
  edited.message = "fake";
  EXPECT_EQ(deliver_advert(edited, {0, 0}, 1, {}, &reports), AdvertVerdict::invalid_certificate);
  EXPECT_EQ(reports.record("acme")->misbehavior_count, 1u);
  auto stolen = ad;  // someone else's signature under acme's certificate
  stolen.signature = ed25519_sign(evil.keys.private_key, stolen.signed_fields());
  EXPECT_EQ(deliver_advert(stolen, {0, 0}, 1, {}, &reports), AdvertVerdict::invalid_certificate);
  auto bad_cert = ad;
  bad_cert.certificate.subject = "acme2";
  EXPECT_FALSE(bad_cert.authentic());
}

TEST(Advert, LimitsAndCodec) {
  auto acme = company("acme", 11);
  EXPECT_NO_THROW(make_advert("acme", std::string(140, 'x'), {0, 0}, 1, 1, acme));
  EXPECT_THROW(make_advert("acme", std::string(141, 'x'), {0, 0}, 1, 1, acme), ValidationError);
  EXPECT_THROW(make_advert("acme", "m", {0, 0}, 0, 1, acme), ValidationError);
  auto ad = make_advert("acme", "hello there", {1, 2}, 30, 99, acme, "l");
  ByteWriter w;
  ad.encode(w);
  ByteReader r(w.bytes());
  auto back = AdvertEvent::decode(r);
  EXPECT_EQ(back.id(), ad.id());
  EXPECT_TRUE(back.authentic());
}

TEST(Advert, PackageRoundTripAndErrors) {
  auto acme = company("acme", 11);
  auto ad = make_advert("acme", "fresh bread  today", {10, 20}, 300, 900, acme, "bread.png");
  std::ostringstream out;
  write_advert(out, ad);
  std::istringstream in(out.str());
  auto back = load_advert(in);
  EXPECT_EQ(back.message, ad.message);
  EXPECT_EQ(back.logo_ref, "bread.png");
  EXPECT_TRUE(back.authentic());

  auto parse = [](const std::string &s) {
    std::istringstream i(s);
    return load_advert(i);
  };
  EXPECT_THROW(parse("advert acme 0 0 10 5\n"), ParseError);
  EXPECT_THROW(parse("advert acme 0 0 10 5 hi\n"), ParseError);  // no cert or sig
  EXPECT_THROW(parse("bogus\n"), ParseError);
  EXPECT_THROW(parse("advert acme 0 0 -1 5 hi\ncert a b 00 00 00\nsig 00\n"), ParseError);
  EXPECT_THROW(parse("advert acme 0 0 1 5 hi\ncert a b zz 00 00\nsig 00\n"), ParseError);
}
