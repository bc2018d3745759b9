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

// Tick-driven network simulation: mobility, unit-disk radio with one tick of
// latency, and every node running the full protocol stack.
//
// Tick order: scripted events, mobility, GPS samples, delivery of frames
// sent on the previous tick, then per node (ascending id) pseudonym
// rotation, beacon, neighbour and session upkeep, authentication
// scheduling, detection and promotion, outbox, relay duties and expiry.

#include "vanet/aggregation.hpp"
#include "vanet/auth.hpp"
#include "vanet/events.hpp"
#include "vanet/relay.hpp"
#include "vanet/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace vanet {

struct NodeStats {
  std::uint64_t generated = 0;
  std::uint64_t sent = 0;
  std::uint64_t broadcasted = 0;
  std::uint64_t received = 0;
  std::uint64_t lost = 0;
  std::uint64_t auth_attempts = 0;
  std::uint64_t auth_accepted = 0;

  NodeStats &operator+=(const NodeStats &o) {
    generated += o.generated;
    sent += o.sent;
    broadcasted += o.broadcasted;
    received += o.received;
    lost += o.lost;
    auth_attempts += o.auth_attempts;
    auth_accepted += o.auth_accepted;
    return *this;
  }
  friend bool operator==(const NodeStats &, const NodeStats &) = default;
};

struct NetworkStats {
  std::vector<NodeStats> nodes;
  NodeStats total;
  std::uint64_t in_flight = 0;
  std::uint64_t connections = 0;  // completed mutual authentications
  std::uint64_t events_accepted = 0;
  std::uint64_t events_rejected = 0;

  bool conserved() const { return total.generated == total.received + total.lost + in_flight; }
};

inline std::string metrics_csv(const NetworkStats &s) {
  std::ostringstream out;
  out << "node,generated,sent,broadcasted,received,lost,auth_attempts,auth_accepted\n";
  auto row = [&](const std::string &name, const NodeStats &n) {
    out << name << ',' << n.generated << ',' << n.sent << ',' << n.broadcasted << ',' << n.received << ',' << n.lost << ','
        << n.auth_attempts << ',' << n.auth_accepted << '\n';
  };
  for (std::size_t i = 0; i < s.nodes.size(); ++i) row(std::to_string(i), s.nodes[i]);
  row("TOTAL", s.total);
  return out.str();
}

/// Deterministic equipped set: the first round(fraction x count) entries of
/// a seeded permutation, so a larger fraction always equips a superset.
inline std::set<NodeId> assign_obus(std::size_t count, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("obu_fraction must be within [0, 1]");
  std::vector<NodeId> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = static_cast<NodeId>(i);
  auto rng = Rng::derive(seed, "obu");
  rng.shuffle(ids);
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// Unit-disk reachability with an inclusive boundary. `active` marks nodes
/// that are equipped and running.
inline std::vector<NodeId> neighbors_in_range(std::span<const GeoCoordinate> positions, std::span<const bool> active,
                                              NodeId node, double radio_range) {
  std::vector<NodeId> out;
  if (node >= positions.size() || !active[node]) return out;
  for (NodeId j = 0; j < positions.size(); ++j)
    if (j != node && active[j] && distance(positions[node], positions[j]) <= radio_range) out.push_back(j);
  return out;
}

/// One radio transmission. Beacons and event fan-outs address every listed
/// node; unicasts address one.
struct Transmission {
  NodeId sender = 0;
  MessageTag tag = MessageTag::beacon;
  Bytes frame;
  std::vector<NodeId> addressees;
  double sent_at = 0.0;
  bool fanout = false;
  Bytes event_id;  // fan-outs only: readable by anyone in range
};

/// Read-only view of a node for inspection after or during a run.
struct NodeView {
  NodeId id = 0;
  UserId user;
  bool equipped = false;
  bool active = false;
  VehicleState state;
  std::optional<RoutePlan> plan;
  const EventStore *store = nullptr;
  const RevocationStore *revocations = nullptr;
  std::optional<ParkedLocation> parked;
  std::optional<WalkingRoute> last_walk;
  bool walk_unavailable = false;
  std::size_t accepted_aggregates = 0;
  std::vector<double> decrypted_at;  // times an event payload was decrypted
  std::vector<Bytes> pseudonyms;     // every pseudonym used, in order
  std::map<UserId, CooperationRecord> cooperation;
  std::size_t sessions = 0;
};

class Simulation {
 public:
  using FrameObserver = std::function<void(const Transmission &)>;

  explicit Simulation(Scenario sc) : sc_(std::move(sc)), cfg_(sc_.config) {
    if (auto v = cfg_.violations(); !v.empty()) throw ValidationError(v.front());
    std::sort(sc_.script.begin(), sc_.script.end(),
              [](const ScriptEvent &a, const ScriptEvent &b) { return a.t < b.t; });
    auto equipped = assign_obus(cfg_.vehicle_count, cfg_.obu_fraction, cfg_.seed);
    auto mobility = Rng::derive(cfg_.seed, "mobility");
    nodes_.reserve(cfg_.vehicle_count);
    for (std::size_t i = 0; i < cfg_.vehicle_count; ++i) {
      nodes_.emplace_back();
      auto &n = nodes_.back();
      n.id = static_cast<NodeId>(i);
      n.equipped = equipped.count(n.id) != 0;
      n.rng = Rng::derive(cfg_.seed, "node-" + std::to_string(i));
      n.detector = CongestionDetector(cfg_.detection);
      n.scheduler = AuthScheduler(cfg_.auth_period);
      if (i < sc_.vehicles.size())
        init_explicit(n, sc_.vehicles[i], i);
      else
        init_generated(n, mobility, i);
      n.state.node = n.id;
      if (n.user) {
        for (auto &[id, key] : n.user->repository.friend_keys()) n.friend_keys.push_back(key);
        std::sort(n.friend_keys.begin(), n.friend_keys.end());
      }
    }
    stats_.nodes.resize(nodes_.size());
    for (auto &n : nodes_)
      if (n.state.ignition == Ignition::on) activate(n);
  }

  Simulation(const Simulation &) = delete;
  Simulation &operator=(const Simulation &) = delete;

  const Scenario &scenario() const { return sc_; }
  double now() const { return now_; }
  bool finished() const { return now_ >= cfg_.duration - 1e-9; }
  std::size_t size() const { return nodes_.size(); }
  void set_frame_observer(FrameObserver f) { observer_ = std::move(f); }

  /// Runs one tick at now() and advances the clock.
  void step() {
    run_script();
    move_vehicles();
    sample_gps();
    compute_neighbors();
    deliver();
    for (auto &n : nodes_)
      if (n.active) node_tick(n);
    ++tick_index_;
    now_ = static_cast<double>(tick_index_) * cfg_.tick;
  }

  void run() {
    while (!finished()) step();
  }

  NetworkStats stats() const {
    NetworkStats s = stats_;
    s.total = {};
    for (const auto &n : s.nodes) s.total += n;
    s.in_flight = 0;
    for (const auto &t : queue_) s.in_flight += t.addressees.size();
    return s;
  }

  const std::vector<std::string> &trace() const { return trace_; }
  std::string trace_text() const {
    std::string out;
    for (const auto &l : trace_) out += l + '\n';
    return out;
  }

  NodeView node(NodeId i) const {
    const auto &n = nodes_.at(i);
    NodeView v;
    v.id = n.id;
    v.user = n.user ? n.user->id : UserId{};
    v.equipped = n.equipped;
    v.active = n.active;
    v.state = n.state;
    v.plan = n.plan;
    v.store = &n.store;
    v.revocations = &n.revocations;
    v.parked = n.parked;
    v.last_walk = n.last_walk;
    v.walk_unavailable = n.walk_unavailable;
    v.accepted_aggregates = n.accepted_aggregates;
    v.decrypted_at = n.decrypted_at;
    v.pseudonyms = n.pseudonym_history;
    v.cooperation = n.cooperation;
    v.sessions = n.sessions.size();
    return v;
  }

  /// Session key this node holds with `peer`, if authenticated.
  std::optional<SessionKey> session_key(NodeId node, NodeId peer) const {
    const auto &s = nodes_.at(node).sessions;
    auto it = s.find(peer);
    if (it == s.end()) return std::nullopt;
    return it->second.key;
  }

 private:
  struct Heard {
    Bytes pseudonym;
    double last = 0.0;
  };
  struct Session {
    Bytes peer_pseudonym;
    SessionKey key;
    UserId peer_user;
    double established = 0.0;
  };
  struct PendingAuth {
    AuthEngine engine;
    NodeId peer = 0;
    double last_activity = 0.0;
  };
  struct Promotion {
    SignedObservation own;
    std::vector<SignedObservation> collected;
    std::set<NodeId> asked;
    double created = 0.0;
  };
  struct Outgoing {
    MessageTag tag = MessageTag::parking_event;
    Bytes id;
    Bytes plaintext;
    double expires = 0.0;  // inclusive
    std::set<NodeId> told;
    bool announced = false;
  };
  struct Duty {
    NodeId peer = 0;
    UserId peer_user;
    Bytes event_id;
    double deadline = 0.0;
  };

  struct Node {
    NodeId id = 0;
    const User *user = nullptr;
    bool equipped = false;
    bool freerider = false;
    bool gps = true;
    bool active = false;
    BatteryLevel battery = BatteryLevel::high;
    AdvertFilters filters;
    std::vector<Bytes> friend_keys;

    // mobility
    VehicleState state;
    std::optional<RoutePlan> plan;
    double speed = 0.0;         // explicit vehicles: km/h
    double limit_factor = 0.0;  // generated vehicles: share of the limit
    bool generated = false;

    // protocol
    Rng rng;
    RevocationStore revocations;
    BeaconState beacon;
    AuthScheduler scheduler;
    JourneyContactLog journey;
    std::map<NodeId, Heard> heard;
    std::map<std::uint64_t, PendingAuth> auths;
    std::map<NodeId, Session> sessions;
    CongestionDetector detector;
    std::vector<Sample> history;
    std::vector<Promotion> promotions;
    EventStore store;
    std::set<Bytes> seen;
    std::optional<ParkedLocation> parked;
    std::vector<Outgoing> outbox;
    std::vector<Duty> duties;
    std::map<NodeId, std::set<Bytes>> overheard;
    std::map<UserId, CooperationRecord> cooperation;

    // observations for tests and reports
    std::optional<WalkingRoute> last_walk;
    bool walk_unavailable = false;
    std::size_t accepted_aggregates = 0;
    std::vector<double> decrypted_at;
    std::vector<Bytes> pseudonym_history;

    AuthParty party() const { return AuthParty{user->id, user->keys, friend_keys, beacon.pseudonym.value, &revocations}; }
  };

  //----------------------------------------------------------------------------
  // Setup
  //----------------------------------------------------------------------------

  void init_explicit(Node &n, const VehicleSpec &v, std::size_t i) {
    n.user = v.user ? &sc_.roster.user(*v.user) : &sc_.roster.users().at(i);
    n.freerider = v.freerider;
    n.gps = v.gps;
    n.battery = v.battery;
    n.filters.blocked = v.blocked_companies;
    n.speed = v.speed;
    const auto &seg = sc_.network.segment(v.segment);
    n.state.segment = v.segment;
    n.state.direction = v.direction;
    n.state.offset = v.offset;
    n.state.position = seg.point_at(v.offset, v.direction);
    n.state.battery = v.battery;
    n.state.speed = v.parked ? 0.0 : v.speed;
    n.state.ignition = v.parked ? Ignition::off : Ignition::on;
    if (v.parked) n.parked = ParkedLocation{n.state.position, 0.0};
    if (v.destination) n.plan = plan_from(n.state.step(), *v.destination);
  }

  void init_generated(Node &n, Rng &rng, std::size_t i) {
    n.user = i < sc_.roster.size() ? &sc_.roster.users()[i] : nullptr;
    n.generated = true;
    const auto &segs = sc_.network.segments();
    const auto &seg = segs[rng.below(segs.size())];
    n.state.segment = seg.id;
    n.state.direction = seg.one_way || rng.below(2) == 0 ? Direction::forward : Direction::reverse;
    n.state.offset = rng.uniform(0.0, seg.length);
    n.state.position = seg.point_at(n.state.offset, n.state.direction);
    n.limit_factor = rng.uniform(0.6, 1.0);
    n.battery = static_cast<BatteryLevel>(rng.below(5));
    n.state.battery = n.battery;
    n.state.speed = n.limit_factor * seg.speed_limit;
    pick_destination(n, rng);
  }

  std::optional<RoutePlan> plan_from(const RouteStep &current, JunctionId destination) const {
    const auto &seg = sc_.network.segment(current.segment);
    auto rest = plan_route(sc_.network, seg.exit(current.direction), destination, {}, cfg_.congestion_penalty);
    if (!rest) return std::nullopt;
    RoutePlan p;
    p.origin = seg.entry(current.direction);
    p.destination = destination;
    p.steps.push_back(current);
    p.steps.insert(p.steps.end(), rest->steps.begin(), rest->steps.end());
    p.cost = plan_cost(sc_.network, p.steps, {}, cfg_.congestion_penalty);
    return p;
  }

  void pick_destination(Node &n, Rng &rng) {
    const auto &js = junction_ids();
    n.plan.reset();
    for (int attempt = 0; attempt < 8 && !n.plan; ++attempt) {
      auto dest = js[rng.below(js.size())];
      if (dest == sc_.network.segment(n.state.segment).exit(n.state.direction)) continue;
      n.plan = plan_from(n.state.step(), dest);
    }
  }

  const std::vector<JunctionId> &junction_ids() {
    if (junction_ids_.empty())
      for (const auto &[id, at] : sc_.network.junctions()) junction_ids_.push_back(id);
    return junction_ids_;
  }

  //----------------------------------------------------------------------------
  // Lifecycle
  //----------------------------------------------------------------------------

  void activate(Node &n) {
    n.active = n.equipped && n.user && should_launch(n.battery, cfg_.battery_threshold);
    if (!n.active) return;
    n.beacon.pseudonym = fresh_pseudonym(n.rng, now_, cfg_.pseudonyms);
    n.beacon.next_sequence = 0;
    n.pseudonym_history.push_back(n.beacon.pseudonym.value);
    n.journey.reset();
  }

  /// The app stops with the engine: radio state goes, stored events stay.
  void deactivate(Node &n) {
    n.active = false;
    n.heard.clear();
    n.auths.clear();
    n.sessions.clear();
    n.promotions.clear();
    n.duties.clear();
    n.overheard.clear();
    n.history.clear();
    n.scheduler = AuthScheduler(cfg_.auth_period);
  }

  void record(const Node &n, const char *kind, const std::string &detail) {
    std::ostringstream l;
    l << fmt(now_) << ' ' << n.id << ' ' << kind << ' ' << detail;
    trace_.push_back(l.str());
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }

  static std::string short_id(const Bytes &id) { return to_hex(ByteView(id).first(std::min<std::size_t>(4, id.size()))); }

  //----------------------------------------------------------------------------
  // Tick phases
  //----------------------------------------------------------------------------

  void run_script() {
    while (script_pos_ < sc_.script.size() && sc_.script[script_pos_].t <= now_ + 1e-9) {
      const auto &e = sc_.script[script_pos_++];
      auto &n = nodes_.at(e.vehicle);
      switch (e.kind) {
        case ScriptEvent::Kind::speed: n.speed = e.value; break;
        case ScriptEvent::Kind::gps: n.gps = e.flag; break;
        case ScriptEvent::Kind::park: park(n); break;
        case ScriptEvent::Kind::unpark: unpark(n); break;
        case ScriptEvent::Kind::find_car: find_car(n, e.where); break;
        case ScriptEvent::Kind::advert: inject_advert(n, sc_.adverts.at(e.file)); break;
      }
    }
  }

  void park(Node &n) {
    if (n.state.ignition == Ignition::off) return;
    n.state.ignition = Ignition::off;
    n.state.speed = 0.0;
    auto stored = store_parked_location(n.parked, n.state.position, now_, n.gps);
    if (n.equipped)
      record(n, "detect", stored ? "parked " + fmt(stored->location.x) + ' ' + fmt(stored->location.y) : "parked no-fix");
    if (n.active) deactivate(n);
  }

  void unpark(Node &n) {
    if (n.state.ignition == Ignition::on) return;
    n.state.ignition = Ignition::on;
    activate(n);
    auto vacancy = detect_parking_vacancy(n.parked, now_, n.gps, cfg_.parking_ttl);
    n.parked.reset();
    if (!n.active || !vacancy) return;
    record(n, "detect", "parking-vacancy " + fmt(vacancy->location.x) + ' ' + fmt(vacancy->location.y));
    ByteWriter w;
    vacancy->encode(w);
    n.outbox.push_back({MessageTag::parking_event, vacancy->id(), frame(MessageTag::parking_event, w.bytes()),
                        vacancy->announced_at + vacancy->ttl, {}, false});
  }

  void find_car(Node &n, const GeoCoordinate &owner) {
    n.last_walk = walking_route(owner, n.parked, sc_.network);
    n.walk_unavailable = !n.last_walk;
    record(n, "show", n.last_walk ? "walk " + fmt(n.last_walk->length) : std::string("walk unavailable"));
  }

  void inject_advert(Node &n, const AdvertEvent &ad) {
    if (!n.active) return;
    auto id = ad.id();
    n.seen.insert(id);
    record(n, "announce", "advert " + ad.company + ' ' + short_id(id));
    ByteWriter w;
    ad.encode(w);
    n.outbox.push_back({MessageTag::advert, id, frame(MessageTag::advert, w.bytes()), ad.expiration - 1e-9, {}, true});
  }

  double target_speed(const Node &n) const {
    const auto &seg = sc_.network.segment(n.state.segment);
    double v = n.generated ? n.limit_factor * seg.speed_limit : n.speed;
    for (const auto &z : sc_.zones)
      if (z.segment == n.state.segment && now_ >= z.from && now_ < z.until) v = std::min(v, z.speed);
    return v;
  }

  void move_vehicles() {
    for (auto &n : nodes_) {
      if (n.state.ignition == Ignition::off) continue;
      std::span<const RouteStep> upcoming;
      if (n.plan) upcoming = n.plan->ahead();
      auto r = advance_vehicle(n.state, sc_.network, cfg_.tick, {target_speed(n), upcoming});
      n.state = r.state;
      if (n.plan) n.plan->current += r.steps_entered;
      if (r.clamped && n.generated) {
        auto rng = Rng::derive(cfg_.seed ^ (static_cast<std::uint64_t>(n.id) << 32), "trip-" + fmt(now_));
        pick_destination(n, rng);
      }
    }
  }

  void sample_gps() {
    const double keep = cfg_.detection.sustain_window + cfg_.tick;
    for (auto &n : nodes_) {
      if (!n.active) continue;
      n.history.push_back({now_, n.state, n.gps});
      auto stale = std::find_if(n.history.begin(), n.history.end(), [&](const Sample &s) { return s.t >= now_ - keep - 1e-9; });
      n.history.erase(n.history.begin(), stale);
    }
  }

  void compute_neighbors() {
    neighbors_.assign(nodes_.size(), {});
    const double r = cfg_.radio_range;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<NodeId>> cells;
    auto cell_of = [&](const GeoCoordinate &p) {
      return std::pair{static_cast<std::int64_t>(std::floor(p.x / r)), static_cast<std::int64_t>(std::floor(p.y / r))};
    };
    for (const auto &n : nodes_)
      if (n.active) cells[cell_of(n.state.position)].push_back(n.id);
    for (const auto &n : nodes_) {
      if (!n.active) continue;
      auto [cx, cy] = cell_of(n.state.position);
      auto &out = neighbors_[n.id];
      for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          auto it = cells.find({cx + dx, cy + dy});
          if (it == cells.end()) continue;
          for (auto j : it->second)
            if (j != n.id && distance(n.state.position, nodes_[j].state.position) <= r) out.push_back(j);
        }
      std::sort(out.begin(), out.end());
    }
  }

  bool in_range(NodeId a, NodeId b) const {
    return nodes_[a].active && nodes_[b].active &&
           distance(nodes_[a].state.position, nodes_[b].state.position) <= cfg_.radio_range;
  }

  //----------------------------------------------------------------------------
  // Radio
  //----------------------------------------------------------------------------

  void transmit(Transmission t) {
    auto &s = stats_.nodes[t.sender];
    s.generated += t.addressees.size();
    if (t.fanout || t.tag == MessageTag::beacon)
      ++s.broadcasted;
    else
      ++s.sent;
    t.sent_at = now_;
    if (observer_) observer_(t);
    queue_.push_back(std::move(t));
  }

  void unicast(const Node &from, NodeId to, MessageTag tag, Bytes frame_bytes) {
    transmit({from.id, tag, std::move(frame_bytes), {to}, now_, false, {}});
  }

  void deliver() {
    std::vector<Transmission> batch;
    batch.swap(queue_);
    for (const auto &t : batch) {
      for (auto r : t.addressees) {
        if (in_range(t.sender, r)) {
          ++stats_.nodes[r].received;
          receive(nodes_[r], t);
        } else {
          ++stats_.nodes[t.sender].lost;
        }
      }
      if (t.fanout)
        for (auto &n : nodes_)
          if (n.id != t.sender && in_range(t.sender, n.id)) n.overheard[t.sender].insert(t.event_id);
    }
  }

  void receive(Node &n, const Transmission &t) {
    try {
      auto f = unframe(t.frame);
      switch (f.tag) {
        case MessageTag::beacon: {
          auto b = Beacon::decode(f.payload);
          n.heard[t.sender] = {b.sender_pseudonym, now_};
          break;
        }
        case MessageTag::auth_commit:
        case MessageTag::auth_challenge:
        case MessageTag::auth_response:
        case MessageTag::auth_result: on_auth(n, t.sender, AuthMessage::decode(f)); break;
        case MessageTag::pseudonym_change: on_change_notice(n, t.sender, f.payload); break;
        case MessageTag::corroboration_request:
        case MessageTag::signed_observation: on_private(n, t.sender, f); break;
        case MessageTag::aggregated_event:
        case MessageTag::parking_event:
        case MessageTag::advert: on_fanout(n, t.sender, f); break;
      }
    } catch (const std::exception &) {
      // Malformed or undecryptable frames are dropped; they still count as received.
    }
  }

  //----------------------------------------------------------------------------
  // Authentication
  //----------------------------------------------------------------------------

  void send_auth(Node &n, NodeId to, const AuthMessage &m) { unicast(n, to, m.tag, m.encode()); }

  void on_auth(Node &n, NodeId from, const AuthMessage &m) {
    auto party = n.party();
    if (m.tag == MessageTag::auth_commit) {
      if (m.responder_pseudonym != n.beacon.pseudonym.value || n.auths.count(m.session)) return;
      auto engine = AuthEngine::responder(m.session);
      ++stats_.nodes[n.id].auth_attempts;
      auto reply = engine.on_message(m, party, n.rng, now_);
      if (reply) send_auth(n, from, *reply);
      if (engine.status() == AuthStatus::pending) n.auths.emplace(m.session, PendingAuth{std::move(engine), from, now_});
      return;
    }
    auto it = n.auths.find(m.session);
    if (it == n.auths.end() || it->second.peer != from) return;
    auto &p = it->second;
    auto reply = p.engine.on_message(m, party, n.rng, now_);
    p.last_activity = now_;
    if (reply) send_auth(n, from, *reply);
    if (p.engine.status() == AuthStatus::accepted) {
      install_session(n, from, p.engine);
      if (p.engine.role() == AuthEngine::Role::responder) ++stats_.connections;
    }
    if (p.engine.status() != AuthStatus::pending) n.auths.erase(it);
  }

  void install_session(Node &n, NodeId peer, const AuthEngine &e) {
    const auto &id = *e.peer_identity();
    n.sessions[peer] = Session{e.session_key()->peer_pseudonym, *e.session_key(), id.user, now_};
    n.journey.record(id.user, now_);
    n.revocations.merge(id.revocations);
    ++stats_.nodes[n.id].auth_accepted;
  }

  void on_change_notice(Node &n, NodeId from, const Bytes &payload) {
    auto it = n.sessions.find(from);
    if (it == n.sessions.end()) return;
    auto change = open_change_notice(it->second.key.key, EncryptedPayload::decode(payload));
    if (change.old_value != it->second.peer_pseudonym) return;
    it->second.peer_pseudonym = change.new_value;
    it->second.key.peer_pseudonym = change.new_value;
  }

  void schedule_auth(Node &n) {
    std::vector<Bytes> candidates;
    std::map<Bytes, NodeId> link_of;
    std::set<NodeId> pending;
    for (const auto &[sid, p] : n.auths) pending.insert(p.peer);
    for (const auto &[link, h] : n.heard) {
      if (n.sessions.count(link) || pending.count(link)) continue;
      if (!(n.beacon.pseudonym.value < h.pseudonym)) continue;  // the smaller pseudonym initiates
      candidates.push_back(h.pseudonym);
      link_of[h.pseudonym] = link;
    }
    for (const auto &target : n.scheduler.due(candidates, {}, now_)) {
      auto session = n.rng.next_u64();
      auto engine = AuthEngine::initiator(session);
      auto m = engine.start(n.party(), target, n.rng, now_);
      ++stats_.nodes[n.id].auth_attempts;
      send_auth(n, link_of.at(target), m);
      n.auths.emplace(session, PendingAuth{std::move(engine), link_of.at(target), now_});
    }
    n.scheduler.forget_older_than(now_ - cfg_.auth_period);
  }

  //----------------------------------------------------------------------------
  // Sealed traffic
  //----------------------------------------------------------------------------

  std::optional<Bytes> open_from(const Node &n, NodeId from, const EncryptedPayload &p) const {
    auto it = n.sessions.find(from);
    if (it == n.sessions.end()) return std::nullopt;
    try {
      return decrypt_from_peer(p, it->second.key);
    } catch (const CipherError &) {
      return std::nullopt;
    }
  }

  void send_private(Node &n, NodeId to, MessageTag tag, const Bytes &plaintext) {
    auto it = n.sessions.find(to);
    if (it == n.sessions.end()) return;
    unicast(n, to, tag, frame(tag, encrypt_for_peer(frame(tag, plaintext), it->second.key, n.rng).encode()));
  }

  std::vector<PeerSessionRef> live_sessions(const Node &n) const {
    std::vector<PeerSessionRef> out;
    for (const auto &[link, s] : n.sessions)
      if (n.heard.count(link)) out.push_back({link, s.key.key});
    return out;
  }

  void on_private(Node &n, NodeId from, const Frame &f) {
    auto plain = open_from(n, from, EncryptedPayload::decode(f.payload));
    if (!plain) return;
    auto inner = unframe(*plain);
    if (inner.tag != f.tag) return;
    ByteReader r(inner.payload);
    if (f.tag == MessageTag::corroboration_request) {
      auto obs = CongestionObservation::decode(r);
      r.expect_done();
      on_corroboration_request(n, from, obs);
    } else {
      auto s = SignedObservation::decode(r);
      r.expect_done();
      on_signature(n, s);
    }
  }

  /// Sealed copies for every live session except `except`, skipping peers
  /// the cooperation gate refuses. Always transmitted, even when empty.
  void fan_out(Node &n, MessageTag tag, const Bytes &id, const Bytes &plaintext, std::optional<NodeId> except,
               std::set<NodeId> *told = nullptr) {
    Transmission t{n.id, tag, {}, {}, now_, true, id};
    ByteWriter w;
    w.raw(id);
    std::vector<EncryptedPayload> copies;
    for (const auto &[link, s] : n.sessions) {
      if (!n.heard.count(link) || (except && link == *except)) continue;
      if (told && told->count(link)) continue;
      if (cooperation_gate(n.cooperation[s.peer_user], cfg_.cooperation) == GateDecision::refuse) continue;
      copies.push_back(encrypt_for_peer(plaintext, s.key, n.rng));
      t.addressees.push_back(link);
      n.duties.push_back({link, s.peer_user, id, now_ + cfg_.duty_window});
      if (told) told->insert(link);
    }
    w.u16(static_cast<std::uint16_t>(copies.size()));
    for (const auto &c : copies) c.encode(w);
    t.frame = frame(tag, w.bytes());
    transmit(std::move(t));
  }

  void on_fanout(Node &n, NodeId from, const Frame &f) {
    ByteReader r(f.payload);
    auto id = r.raw(kDigestSize);
    auto count = r.u16();
    std::optional<Bytes> plain;
    for (std::uint16_t i = 0; i < count && !plain; ++i) plain = open_from(n, from, EncryptedPayload::decode(r));
    if (!plain) return;
    n.decrypted_at.push_back(now_);
    auto inner = unframe(*plain);
    if (inner.tag != f.tag) return;
    ByteReader body(inner.payload);
    switch (f.tag) {
      case MessageTag::aggregated_event: {
        auto e = AggregatedEvent::decode(body);
        body.expect_done();
        on_aggregate(n, from, e, *plain);
        break;
      }
      case MessageTag::parking_event: {
        auto e = ParkingEvent::decode(body);
        body.expect_done();
        on_parking(n, from, e, *plain);
        break;
      }
      case MessageTag::advert: {
        auto a = AdvertEvent::decode(body);
        body.expect_done();
        on_advert(n, from, a, *plain);
        break;
      }
      default: break;
    }
  }

  void relay(Node &n, MessageTag tag, const Bytes &id, const Bytes &plaintext, NodeId from) {
    if (n.freerider) return;
    fan_out(n, tag, id, plaintext, from);
  }

  //----------------------------------------------------------------------------
  // Events
  //----------------------------------------------------------------------------

  CongestionSet congestion_set(const Node &n) const {
    CongestionSet out;
    for (const auto &c : n.store.congestion) out.insert({c.observation.road, c.observation.direction});
    return out;
  }

  void on_aggregate(Node &n, NodeId from, const AggregatedEvent &e, const Bytes &plaintext) {
    auto id = e.id();
    if (n.seen.count(id)) return;
    auto verdict = verify_aggregate(e, &n.revocations, &n.revocations);
    if (!verdict.accepted()) {
      ++stats_.events_rejected;
      record(n, "receive", "aggregate " + short_id(id) + " rejected " + to_string(verdict.reason));
      return;
    }
    RelayContext ctx{n.plan ? &*n.plan : nullptr, n.state.step(), congestion_predicate(n.history, sc_.network, cfg_.detection)};
    auto decision = decide_relay(ctx, e, true, n.seen);
    n.seen.insert(id);
    ++stats_.events_accepted;
    ++n.accepted_aggregates;
    n.store.congestion.push_back({id, e.observation, now_});
    const auto &o = e.observation;
    record(n, "receive",
           "aggregate " + short_id(id) + " road=" + std::to_string(o.road) + " sigs=" + std::to_string(e.signatures.size()) +
               " action=" + to_string(decision.action));
    record(n, "show", "congestion road=" + std::to_string(o.road) + " dir=" + (o.direction == Direction::forward ? "fwd" : "rev"));
    if (decision.action == RelayAction::corroborate) {
      n.detector.suppress(o.road, o.direction, now_);
      std::erase_if(n.promotions, [&](const Promotion &p) { return p.own.observation.road == o.road && p.own.observation.direction == o.direction; });
    } else if (decision.action == RelayAction::reroute_and_forward && n.plan) {
      auto before = n.plan->steps;
      n.plan = recompute_route(*n.plan, sc_.network, congestion_set(n), cfg_.congestion_penalty);
      if (n.plan->steps != before)
        record(n, "route", "changed cost=" + fmt(n.plan->cost));
      else
        record(n, "route", n.plan->advisory ? "advisory congestion ahead" : "kept");
    }
    relay(n, MessageTag::aggregated_event, id, plaintext, from);
  }

  void on_parking(Node &n, NodeId from, const ParkingEvent &e, const Bytes &plaintext) {
    auto id = e.id();
    if (n.seen.count(id) || !e.visible(now_)) return;
    n.seen.insert(id);
    n.store.parking.push_back({id, e});
    record(n, "receive", "parking " + short_id(id));
    record(n, "show", "parking " + fmt(e.location.x) + ' ' + fmt(e.location.y) + " until " + fmt(e.announced_at + e.ttl));
    relay(n, MessageTag::parking_event, id, plaintext, from);
  }

  void on_advert(Node &n, NodeId from, const AdvertEvent &a, const Bytes &plaintext) {
    auto id = a.id();
    if (n.seen.count(id)) return;
    auto verdict = deliver_advert(a, n.state.position, now_, n.filters, &n.revocations);
    if (verdict == AdvertVerdict::invalid_certificate) {
      ++stats_.events_rejected;
      record(n, "receive", "advert " + short_id(id) + " rejected invalid-certificate");
      return;
    }
    n.seen.insert(id);
    if (verdict == AdvertVerdict::expired) return;
    n.store.adverts.push_back({id, a});
    record(n, "receive", "advert " + a.company + ' ' + short_id(id) + ' ' + to_string(verdict));
    if (verdict == AdvertVerdict::shown) record(n, "show", "advert " + a.company + ' ' + short_id(id));
    relay(n, MessageTag::advert, id, plaintext, from);
  }

  void on_corroboration_request(Node &n, NodeId from, const CongestionObservation &obs) {
    if (obs.observer_pseudonym == n.beacon.pseudonym.value) return;
    const double cell = cfg_.detection.cell_size;
    auto mine = [&](const Promotion &p) {
      const auto &o = p.own.observation;
      return same_congestion(obs, o.road, o.direction, o.location, cell);
    };
    for (const auto &p : n.promotions)
      if (mine(p) && p.own.signer_pseudonym < obs.observer_pseudonym) return;  // keep promoting our own
    auto signed_obs = corroborate(n.history, sc_.network, cfg_.detection, obs, *n.user, n.beacon.pseudonym.value);
    if (!signed_obs) return;
    record(n, "corroborate", "road=" + std::to_string(obs.road) + ' ' + short_id(event_id(obs)));
    ByteWriter w;
    signed_obs->encode(w);
    send_private(n, from, MessageTag::signed_observation, w.bytes());
    n.detector.suppress(obs.road, obs.direction, now_);
    std::erase_if(n.promotions, mine);
  }

  void on_signature(Node &n, const SignedObservation &s) {
    auto want = canonical_encoding(s.observation);
    for (auto it = n.promotions.begin(); it != n.promotions.end(); ++it) {
      if (canonical_encoding(it->own.observation) != want) continue;
      it->collected.push_back(s);
      auto rate = avg_users_per_minute(n.journey, now_);
      auto e = assemble_aggregate(it->own, it->collected, rate, now_, &n.revocations);
      if (!e) return;
      auto id = e->id();
      n.promotions.erase(it);
      if (n.seen.count(id)) return;
      n.seen.insert(id);
      n.store.congestion.push_back({id, e->observation, now_});
      record(n, "aggregate",
             short_id(id) + " road=" + std::to_string(e->observation.road) + " sigs=" + std::to_string(e->signatures.size()) +
                 " threshold=" + std::to_string(e->required_threshold));
      fan_out(n, MessageTag::aggregated_event, id, frame(MessageTag::aggregated_event, e->encode()), std::nullopt);
      return;
    }
  }

  //----------------------------------------------------------------------------
  // Per-node tick
  //----------------------------------------------------------------------------

  void node_tick(Node &n) {
    rotate_if_due(n);
    send_beacon(n);
    expire_peers(n);
    schedule_auth(n);
    detect(n);
    promote(n);
    flush_outbox(n);
    settle_duties(n);
    for (const auto &gone : expire_events(n.store, now_, cfg_.detection)) record(n, "expire", gone.kind + ' ' + short_id(gone.id));
  }

  void rotate_if_due(Node &n) {
    if (now_ < n.beacon.pseudonym.valid_until) return;
    auto peers = live_sessions(n);
    auto r = rotate_pseudonym(n.beacon.pseudonym, peers, now_, n.rng, cfg_.pseudonyms);
    n.beacon.pseudonym = r.next;
    n.beacon.next_sequence = 0;
    n.pseudonym_history.push_back(r.next.value);
    for (const auto &notice : r.notices)
      unicast(n, notice.peer, MessageTag::pseudonym_change, frame(MessageTag::pseudonym_change, notice.sealed.encode()));
  }

  void send_beacon(Node &n) {
    auto b = emit_beacon(n.beacon, now_);
    transmit({n.id, MessageTag::beacon, b.encode(), neighbors_[n.id], now_, false, {}});
  }

  void expire_peers(Node &n) {
    for (auto it = n.heard.begin(); it != n.heard.end();) {
      if (now_ - it->second.last > cfg_.peer_expiry) {
        n.sessions.erase(it->first);
        n.overheard.erase(it->first);
        it = n.heard.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = n.auths.begin(); it != n.auths.end();) {
      if (now_ - it->second.last_activity >= cfg_.session_timeout) {
        it->second.engine.abort_timeout();
        it = n.auths.erase(it);
      } else {
        ++it;
      }
    }
  }

  void detect(Node &n) {
    auto obs = n.detector.evaluate(n.history, sc_.network, n.beacon.pseudonym.value);
    if (!obs) return;
    record(n, "detect",
           "congestion road=" + std::to_string(obs->road) + " dir=" + (obs->direction == Direction::forward ? "fwd" : "rev") +
               ' ' + short_id(event_id(*obs)));
    n.promotions.push_back({sign_observation(*obs, *n.user, n.beacon.pseudonym.value), {}, {}, now_});
  }

  void promote(Node &n) {
    std::erase_if(n.promotions, [&](const Promotion &p) { return now_ - p.created >= cfg_.detection.cooldown; });
    for (auto &p : n.promotions) {
      std::vector<PeerSessionRef> fresh;
      for (const auto &s : live_sessions(n))
        if (!p.asked.count(s.peer)) fresh.push_back(s);
      if (fresh.empty()) continue;
      if (p.asked.empty()) record(n, "announce", "congestion " + short_id(event_id(p.own.observation)));
      auto fan = request_corroboration(p.own.observation, fresh, n.rng);
      for (auto &[peer, sealed] : fan.copies) {
        p.asked.insert(peer);
        unicast(n, peer, MessageTag::corroboration_request, frame(MessageTag::corroboration_request, sealed.encode()));
      }
    }
  }

  void flush_outbox(Node &n) {
    std::erase_if(n.outbox, [&](const Outgoing &o) { return now_ > o.expires; });
    for (auto &o : n.outbox) {
      bool fresh = false;
      for (const auto &s : live_sessions(n)) fresh |= !o.told.count(s.peer);
      if (!fresh) continue;
      if (!o.announced) {
        record(n, "announce", std::string(o.tag == MessageTag::parking_event ? "parking " : "advert ") + short_id(o.id));
        o.announced = true;
      }
      fan_out(n, o.tag, o.id, o.plaintext, std::nullopt, &o.told);
    }
  }

  void settle_duties(Node &n) {
    std::erase_if(n.duties, [&](const Duty &d) {
      if (now_ <= d.deadline) return false;
      if (n.heard.count(d.peer)) {
        auto it = n.overheard.find(d.peer);
        n.cooperation[d.peer_user].observe(it != n.overheard.end() && it->second.count(d.event_id));
      }
      return true;
    });
  }

  Scenario sc_;
  SimConfig cfg_;
  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<Transmission> queue_;
  std::vector<JunctionId> junction_ids_;
  std::vector<std::string> trace_;
  NetworkStats stats_;
  FrameObserver observer_;
  std::size_t script_pos_ = 0;
  std::uint64_t tick_index_ = 0;
  double now_ = 0.0;
};

}  // namespace vanet
