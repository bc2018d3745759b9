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

#include "vanet/relay.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vanet;

namespace {

// 3x4 grid, random limits, a few one-way streets.
RoadNetwork random_grid(Rng &rng) {
  std::ostringstream doc;
  const int rows = 3, cols = 4;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) doc << "junction " << r * cols + c + 1 << ' ' << c * 150 << ' ' << r * 150 << '\n';
  int sid = 1;
  auto road = [&](int a, int b) {
    doc << "segment " << sid++ << ' ' << a << ' ' << b << ' ' << 30 + 10 * rng.below(6)
        << (rng.below(6) == 0 ? " oneway\n" : " twoway\n");
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) road(r * cols + c + 1, r * cols + c + 2);
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) road(r * cols + c + 1, (r + 1) * cols + c + 1);
  return parse_network(doc.str());
}

CongestionSet random_congestion(Rng &rng, const RoadNetwork &net) {
  CongestionSet out;
  for (const auto &seg : net.segments()) {
    if (rng.below(4) == 0) out.insert({seg.id, Direction::forward});
    if (rng.below(4) == 0) out.insert({seg.id, Direction::reverse});
  }
  return out;
}

std::function<double(const oracle::Edge &)> oracle_time(const CongestionSet &c, double penalty) {
  return [&c, penalty](const oracle::Edge &e) {
    double t = e.length / (e.limit / 3.6);
    return c.count(e.step) ? t * penalty : t;
  };
}

AggregatedEvent event_on(SegmentId road, Direction d) {
  AggregatedEvent e;
  e.observation = {road, d, {}, 0.0, {}};
  return e;
}

}  // namespace

TEST(Plan, FastestRouteMatchesBruteForce) {
  auto rng = Rng::derive(1, "plan");
  int routed = 0;
  for (int round = 0; round < 60; ++round) {
    auto net = random_grid(rng);
    auto congested = random_congestion(rng, net);
    for (int q = 0; q < 5; ++q) {
      JunctionId a = 1 + rng.below(12), b = 1 + rng.below(12);
      auto plan = plan_route(net, a, b, congested);
      auto want = oracle::min_simple_path(net, a, b, oracle_time(congested, kCongestionPenalty), true);
      ASSERT_EQ(plan.has_value(), want.has_value());
      if (!plan) continue;
      ++routed;
      EXPECT_NEAR(plan->cost, *want, 1e-6);
      EXPECT_TRUE(plan_connected(net, *plan));
      EXPECT_NEAR(plan_cost(net, plan->steps, congested), plan->cost, 1e-6);
      if (!plan->steps.empty()) {
        EXPECT_EQ(net.segment(plan->steps.front().segment).entry(plan->steps.front().direction), a);
        EXPECT_EQ(net.segment(plan->steps.back().segment).exit(plan->steps.back().direction), b);
      }
    }
  }
  EXPECT_GT(routed, 200);
}

TEST(Plan, RecomputeNeverWorseAndOptimalWhenChanged) {
  auto rng = Rng::derive(2, "recompute");
  int changed = 0, advisory = 0;
  for (int round = 0; round < 600; ++round) {
    auto net = random_grid(rng);
    auto plan = plan_route(net, 1 + rng.below(12), 1 + rng.below(12));
    if (!plan || plan->steps.size() < 2) continue;
    plan->current = rng.below(plan->steps.size());
    auto congested = random_congestion(rng, net);
    auto next = recompute_route(*plan, net, congested);

    ASSERT_TRUE(plan_connected(net, next));
    ASSERT_GE(next.steps.size(), plan->current + 1);
    for (std::size_t i = 0; i <= plan->current; ++i) EXPECT_EQ(next.steps[i], plan->steps[i]);
    double old_cost = plan_cost(net, plan->steps, congested);
    EXPECT_LE(next.cost, old_cost + 1e-9);

    const auto &cur = plan->steps[plan->current];
    JunctionId from = net.segment(cur.segment).exit(cur.direction);
    auto best_rest = oracle::min_simple_path(net, from, plan->destination, oracle_time(congested, kCongestionPenalty), true);
    double old_rest = plan_cost(net, plan->ahead(), congested);
    if (next.steps != plan->steps) {
      ++changed;
      ASSERT_TRUE(best_rest);
      EXPECT_NEAR(plan_cost(net, next.ahead(), congested), *best_rest, 1e-6);
      EXPECT_FALSE(next.advisory);
    } else {
      if (best_rest && from != plan->destination) EXPECT_GE(*best_rest, old_rest - 1e-6);
      bool ahead_jammed = false;
      for (const auto &s : plan->ahead()) ahead_jammed |= congested.count(s) != 0;
      EXPECT_EQ(next.advisory, ahead_jammed);
      advisory += next.advisory;
    }
  }
  EXPECT_GT(changed, 10);
  EXPECT_GT(advisory, 0);
}

TEST(Plan, RouteAffectedLooksOnlyAhead) {
  RoutePlan p{1, 4, {{1, Direction::forward}, {2, Direction::reverse}, {3, Direction::forward}}, 1, 0, false};
  EXPECT_FALSE(route_affected(p, 1, Direction::forward));  // behind
  EXPECT_FALSE(route_affected(p, 2, Direction::reverse));  // current
  EXPECT_TRUE(route_affected(p, 3, Direction::forward));
  EXPECT_FALSE(route_affected(p, 3, Direction::reverse));
  p.current = 2;
  EXPECT_TRUE(p.ahead().empty());
}

TEST(Relay, DecisionTableIsExhaustive) {
  RoutePlan plan{1, 9, {{5, Direction::forward}, {6, Direction::forward}, {7, Direction::reverse}}, 0, 0, false};
  int cases = 0;
  for (bool verified : {false, true})
    for (bool seen_before : {false, true})
      for (bool has_plan : {false, true})
        for (bool on_road : {false, true})
          for (bool firing : {false, true})
            for (bool on_route : {false, true}) {
              auto e = event_on(on_route ? 7 : 8, on_route ? Direction::reverse : Direction::forward);
              RelayContext ctx;
              ctx.plan = has_plan ? &plan : nullptr;
              if (on_road) ctx.position = RouteStep{e.observation.road, e.observation.direction};
              ctx.detector_firing = firing;
              std::set<Bytes> seen;
              if (seen_before) seen.insert(e.id());

              RelayDecision want;
              if (!verified) want = {RelayAction::drop, DropReason::unverified};
              else if (seen_before) want = {RelayAction::drop, DropReason::duplicate};
              else if (on_road && firing) want = {RelayAction::corroborate, DropReason::none};
              else if (has_plan && on_route) want = {RelayAction::reroute_and_forward, DropReason::none};
              else want = {RelayAction::forward, DropReason::none};
              EXPECT_EQ(decide_relay(ctx, e, verified, seen), want);
              ++cases;
            }
  EXPECT_EQ(cases, 64);
}

TEST(Relay, PositionMustMatchDirectionToCorroborate) {
  RelayContext ctx;
  ctx.position = RouteStep{4, Direction::reverse};
  ctx.detector_firing = true;
  EXPECT_EQ(decide_relay(ctx, event_on(4, Direction::forward), true, {}).action, RelayAction::forward);
}

TEST(Gate, MatchesRatioRule) {
  CooperationPolicy p;
  for (std::uint32_t n = 0; n < 20; ++n)
    for (std::uint32_t f = 0; f <= n; ++f) {
      CooperationRecord r;
      for (std::uint32_t i = 0; i < n; ++i) r.observe(i < f);
      EXPECT_EQ(r.opportunities, n);
      EXPECT_EQ(r.forwarded, f);
      bool refuse = n >= 4 && 2 * f < n;
      EXPECT_EQ(cooperation_gate(r, p), refuse ? GateDecision::refuse : GateDecision::serve) << f << "/" << n;
    }
}

TEST(Gate, SessionEncryption) {
  auto rng = Rng::derive(3, "session");
  SessionKey a{rng.bytes(32), Bytes(16, 1), 0}, b{rng.bytes(32), Bytes(16, 2), 0};
  auto payload = rng.bytes(90);
  auto sealed = encrypt_for_peer(payload, a, rng);
  EXPECT_EQ(decrypt_from_peer(sealed, a), payload);
  EXPECT_THROW(decrypt_from_peer(sealed, b), CipherError);
}
