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

// What a node does with a received event: relay it, sign it, or re-plan its
// own route around it. Also the encrypted-exchange gate for free riders.

#include "vanet/aggregation.hpp"
#include "vanet/cipher.hpp"
#include "vanet/geo.hpp"

#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace vanet {

inline constexpr double kCongestionPenalty = 5.0;

using CongestionSet = std::set<RouteStep>;

inline double effective_time(const RouteStep &step, const RoadSegment &seg, const CongestionSet &congested,
                             double penalty = kCongestionPenalty) {
  double t = seg.travel_time_base();
  return congested.count(step) ? t * penalty : t;
}

struct RoutePlan {
  JunctionId origin = 0;
  JunctionId destination = 0;
  std::vector<RouteStep> steps;
  std::size_t current = 0;  // index of the step being driven
  double cost = 0.0;        // seconds, whole plan
  bool advisory = false;    // congestion ahead with no way around

  /// Steps strictly after the current one.
  std::span<const RouteStep> ahead() const {
    if (current + 1 >= steps.size()) return {};
    return std::span<const RouteStep>(steps).subspan(current + 1);
  }
};

inline double plan_cost(const RoadNetwork &net, std::span<const RouteStep> steps, const CongestionSet &congested,
                        double penalty = kCongestionPenalty) {
  double total = 0.0;
  for (const auto &s : steps) total += effective_time(s, net.segment(s.segment), congested, penalty);
  return total;
}

/// Consecutive steps share a junction and respect one-way flags.
inline bool plan_connected(const RoadNetwork &net, const RoutePlan &plan) {
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto &seg = net.segment(plan.steps[i].segment);
    if (!seg.allows(plan.steps[i].direction)) return false;
    if (i > 0 && net.segment(plan.steps[i - 1].segment).exit(plan.steps[i - 1].direction) != seg.entry(plan.steps[i].direction))
      return false;
  }
  return true;
}

/// Fastest route under the given congestion.
inline std::optional<RoutePlan> plan_route(const RoadNetwork &net, JunctionId from, JunctionId to,
                                           const CongestionSet &congested = {}, double penalty = kCongestionPenalty) {
  auto path = shortest_path(
      net, from, to, [&](const RouteStep &s, const RoadSegment &seg) { return effective_time(s, seg, congested, penalty); });
  if (!path) return std::nullopt;
  return RoutePlan{from, to, std::move(path->steps), 0, path->cost, false};
}

/// True iff the reported road and direction appear ahead on the route.
inline bool route_affected(const RoutePlan &plan, SegmentId road, Direction d) {
  for (const auto &s : plan.ahead())
    if (s.segment == road && s.direction == d) return true;
  return false;
}

/// Keeps the current step and re-plans the rest. The new plan is returned
/// only when strictly cheaper under congested weights; when the destination
/// cannot be reached or nothing beats the old route while congestion stays
/// on it, the old plan comes back with `advisory` set.
inline RoutePlan recompute_route(const RoutePlan &plan, const RoadNetwork &net, const CongestionSet &congested,
                                 double penalty = kCongestionPenalty) {
  RoutePlan kept = plan;
  kept.cost = plan_cost(net, plan.steps, congested, penalty);
  auto old_rest = plan.ahead();
  bool congestion_ahead = false;
  for (const auto &s : old_rest) congestion_ahead |= congested.count(s) != 0;
  if (plan.steps.empty() || plan.current >= plan.steps.size()) return kept;

  const auto &cur = plan.steps[plan.current];
  JunctionId from = net.segment(cur.segment).exit(cur.direction);
  auto path = shortest_path(
      net, from, plan.destination,
      [&](const RouteStep &s, const RoadSegment &seg) { return effective_time(s, seg, congested, penalty); });
  double old_cost = plan_cost(net, old_rest, congested, penalty);
  if (!path || !(path->cost < old_cost)) {
    kept.advisory = congestion_ahead;
    return kept;
  }
  RoutePlan next = plan;
  next.steps.resize(plan.current + 1);
  next.steps.insert(next.steps.end(), path->steps.begin(), path->steps.end());
  next.cost = plan_cost(net, next.steps, congested, penalty);
  next.advisory = false;
  if (next.cost > kept.cost + 1e-9) throw std::logic_error("recompute_route produced a costlier plan");
  return next;
}

//------------------------------------------------------------------------------
// Relay decision
//------------------------------------------------------------------------------

enum class RelayAction { forward, corroborate, reroute_and_forward, drop };
enum class DropReason { none, duplicate, unverified };

struct RelayDecision {
  RelayAction action = RelayAction::forward;
  DropReason reason = DropReason::none;
  friend bool operator==(const RelayDecision &, const RelayDecision &) = default;
};

inline const char *to_string(RelayAction a) {
  switch (a) {
    case RelayAction::forward: return "forward";
    case RelayAction::corroborate: return "corroborate";
    case RelayAction::reroute_and_forward: return "reroute-and-forward";
    case RelayAction::drop: return "drop";
  }
  return "?";
}

inline const char *to_string(DropReason r) {
  switch (r) {
    case DropReason::none: return "none";
    case DropReason::duplicate: return "duplicate";
    case DropReason::unverified: return "unverified";
  }
  return "?";
}

struct RelayContext {
  const RoutePlan *plan = nullptr;  // no plan: the node just drives
  std::optional<RouteStep> position;
  bool detector_firing = false;
};

/// One action per (state, event). The caller records the id in `seen` after
/// acting.
inline RelayDecision decide_relay(const RelayContext &node, const AggregatedEvent &e, bool verified,
                                  const std::set<Bytes> &seen) {
  if (!verified) return {RelayAction::drop, DropReason::unverified};
  if (seen.count(e.id())) return {RelayAction::drop, DropReason::duplicate};
  const auto &o = e.observation;
  if (node.position && node.position->segment == o.road && node.position->direction == o.direction && node.detector_firing)
    return {RelayAction::corroborate, DropReason::none};
  if (node.plan && route_affected(*node.plan, o.road, o.direction)) return {RelayAction::reroute_and_forward, DropReason::none};
  return {RelayAction::forward, DropReason::none};
}

//------------------------------------------------------------------------------
// Encrypted exchange
//------------------------------------------------------------------------------

inline EncryptedPayload encrypt_for_peer(ByteView payload, const SessionKey &session, Rng &rng) {
  return seal(session.key, payload, rng);
}

inline Bytes decrypt_from_peer(const EncryptedPayload &p, const SessionKey &session) { return open(session.key, p); }

struct CooperationPolicy {
  double min_forward_ratio = 0.5;
  std::uint32_t min_opportunities = 4;
};

/// Relay duties a peer was seen to have (overheard) against those it met.
struct CooperationRecord {
  std::uint32_t opportunities = 0;
  std::uint32_t forwarded = 0;

  void observe(bool did_forward) {
    ++opportunities;
    if (did_forward) ++forwarded;
  }
};

enum class GateDecision { serve, refuse };

inline GateDecision cooperation_gate(const CooperationRecord &r, const CooperationPolicy &p = {}) {
  if (r.opportunities < p.min_opportunities) return GateDecision::serve;
  double ratio = static_cast<double>(r.forwarded) / r.opportunities;
  return ratio < p.min_forward_ratio ? GateDecision::refuse : GateDecision::serve;
}

}  // namespace vanet
