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

// Planar road geometry, vehicle kinematics and shortest paths.
//
// Coordinates are metres east/north of a scenario origin. Speeds are km/h.
// A segment joins junction `from` to junction `to`; travelling `forward`
// means from -> to. One-way segments only admit forward travel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace vanet {

using SegmentId = std::uint32_t;
using JunctionId = std::uint32_t;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeoCoordinate {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const GeoCoordinate &, const GeoCoordinate &) = default;
};

inline double distance(const GeoCoordinate &a, const GeoCoordinate &b) { return std::hypot(b.x - a.x, b.y - a.y); }

inline GeoCoordinate lerp(const GeoCoordinate &a, const GeoCoordinate &b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

enum class Direction : std::uint8_t { forward = 0, reverse = 1 };

inline Direction opposite(Direction d) { return d == Direction::forward ? Direction::reverse : Direction::forward; }

inline double kmh_to_ms(double kmh) { return kmh / 3.6; }

struct RoadSegment {
  SegmentId id = 0;
  JunctionId from = 0;
  JunctionId to = 0;
  GeoCoordinate a;
  GeoCoordinate b;
  double length = 0.0;
  double speed_limit = 0.0;  // km/h
  bool one_way = false;

  double travel_time_base() const { return length / kmh_to_ms(speed_limit); }

  JunctionId entry(Direction d) const { return d == Direction::forward ? from : to; }
  JunctionId exit(Direction d) const { return d == Direction::forward ? to : from; }
  bool allows(Direction d) const { return !one_way || d == Direction::forward; }

  /// Point `offset` metres into the segment when travelling in `d`.
  GeoCoordinate point_at(double offset, Direction d) const {
    double t = length > 0 ? std::clamp(offset / length, 0.0, 1.0) : 0.0;
    return d == Direction::forward ? lerp(a, b, t) : lerp(b, a, t);
  }
};

/// One traversal of a segment in a given direction.
struct RouteStep {
  SegmentId segment = 0;
  Direction direction = Direction::forward;
  friend auto operator<=>(const RouteStep &, const RouteStep &) = default;
};

struct Projection {
  SegmentId segment = 0;
  double offset_from_a = 0.0;  // metres from the `from` junction
  GeoCoordinate point;
  double distance = 0.0;
};

class RoadNetwork {
 public:
  void add_junction(JunctionId id, GeoCoordinate at) {
    if (!std::isfinite(at.x) || !std::isfinite(at.y))
      throw ValidationError("junction " + std::to_string(id) + ": coordinates must be finite");
    if (!junctions_.emplace(id, at).second)
      throw ValidationError("duplicate junction id " + std::to_string(id));
    adjacency_[id];
  }

  const RoadSegment &add_segment(SegmentId id, JunctionId from, JunctionId to, double speed_limit, bool one_way) {
    if (index_.count(id)) throw ValidationError("duplicate segment id " + std::to_string(id));
    auto fa = junctions_.find(from);
    auto fb = junctions_.find(to);
    if (fa == junctions_.end() || fb == junctions_.end())
      throw ValidationError("segment " + std::to_string(id) + ": endpoint is not a declared junction");
    if (!(speed_limit > 0.0) || !std::isfinite(speed_limit))
      throw ValidationError("segment " + std::to_string(id) + ": speed_limit must be > 0");
    RoadSegment s{id, from, to, fa->second, fb->second, distance(fa->second, fb->second), speed_limit, one_way};
    if (!(s.length > 0.0)) throw ValidationError("segment " + std::to_string(id) + ": length must be > 0");
    index_.emplace(id, segments_.size());
    segments_.push_back(s);
    adjacency_[from].push_back(id);
    if (to != from) adjacency_[to].push_back(id);
    return segments_.back();
  }

  bool has_segment(SegmentId id) const { return index_.count(id) != 0; }
  bool has_junction(JunctionId id) const { return junctions_.count(id) != 0; }

  const RoadSegment &segment(SegmentId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown segment " + std::to_string(id));
    return segments_[it->second];
  }

  GeoCoordinate junction(JunctionId id) const {
    auto it = junctions_.find(id);
    if (it == junctions_.end()) throw ValidationError("unknown junction " + std::to_string(id));
    return it->second;
  }

  const std::vector<RoadSegment> &segments() const { return segments_; }
  const std::map<JunctionId, GeoCoordinate> &junctions() const { return junctions_; }

  const std::vector<SegmentId> &segments_at(JunctionId j) const {
    static const std::vector<SegmentId> none;
    auto it = adjacency_.find(j);
    return it == adjacency_.end() ? none : it->second;
  }

  std::size_t degree(JunctionId j) const { return segments_at(j).size(); }

  /// Steps that leave junction `j`, optionally ignoring one-way restrictions.
  std::vector<RouteStep> departures(JunctionId j, bool respect_one_way = true) const {
    std::vector<RouteStep> out;
    for (auto sid : segments_at(j)) {
      const auto &s = segment(sid);
      if (s.from == j && (s.allows(Direction::forward) || !respect_one_way))
        out.push_back({sid, Direction::forward});
      if (s.to == j && (s.allows(Direction::reverse) || !respect_one_way))
        out.push_back({sid, Direction::reverse});
    }
    return out;
  }

  /// Nearest point on any segment; ties resolve to the lowest segment id.
  Projection project(const GeoCoordinate &p) const {
    if (segments_.empty()) throw ValidationError("empty road network");
    std::optional<Projection> best;
    for (const auto &s : segments_) {
      double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
      double t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / (dx * dx + dy * dy);
      t = std::clamp(t, 0.0, 1.0);
      GeoCoordinate q = t == 0.0 ? s.a : (t == 1.0 ? s.b : lerp(s.a, s.b, t));
      double d = distance(p, q);
      if (!best || d < best->distance || (d == best->distance && s.id < best->segment))
        best = Projection{s.id, distance(s.a, q), q, d};
    }
    return *best;
  }

  /// Junctions reachable from `start` ignoring one-way flags.
  std::set<JunctionId> component_of(JunctionId start) const {
    std::set<JunctionId> seen{start};
    std::vector<JunctionId> stack{start};
    while (!stack.empty()) {
      auto j = stack.back();
      stack.pop_back();
      for (auto step : departures(j, false)) {
        auto next = segment(step.segment).exit(step.direction);
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
    return seen;
  }

 private:
  std::map<JunctionId, GeoCoordinate> junctions_;
  std::vector<RoadSegment> segments_;
  std::map<SegmentId, std::size_t> index_;
  std::map<JunctionId, std::vector<SegmentId>> adjacency_;
};

namespace detail {
template <class T>
T parse_number(const std::string &tok, std::size_t line, const char *field) {
  std::istringstream in(tok);
  T v{};
  if (!(in >> v) || !in.eof()) throw ParseError(line, std::string("bad ") + field + " '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_ws(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline bool is_blank_or_comment(const std::string &line) {
  auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}
}  // namespace detail

/// Parses the line-oriented road description:
///   junction <id> <x> <y>
///   segment <id> <junctionA> <junctionB> <speed_limit_kmh> <oneway|twoway>
inline RoadNetwork load_network(std::istream &in) {
  RoadNetwork net;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::is_blank_or_comment(line)) continue;
    auto tok = detail::split_ws(line);
    try {
      if (tok[0] == "junction") {
        if (tok.size() != 4) throw ParseError(n, "junction expects <id> <x> <y>");
        net.add_junction(detail::parse_number<JunctionId>(tok[1], n, "junction id"),
                         {detail::parse_number<double>(tok[2], n, "x"), detail::parse_number<double>(tok[3], n, "y")});
      } else if (tok[0] == "segment") {
        if (tok.size() != 6) throw ParseError(n, "segment expects <id> <a> <b> <speed_limit_kmh> <oneway|twoway>");
        if (tok[5] != "oneway" && tok[5] != "twoway") throw ParseError(n, "bad direction '" + tok[5] + "'");
        net.add_segment(detail::parse_number<SegmentId>(tok[1], n, "segment id"),
                        detail::parse_number<JunctionId>(tok[2], n, "junction"),
                        detail::parse_number<JunctionId>(tok[3], n, "junction"),
                        detail::parse_number<double>(tok[4], n, "speed_limit"), tok[5] == "oneway");
      } else {
        throw ParseError(n, "unknown record '" + tok[0] + "'");
      }
    } catch (const ValidationError &e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return net;
}

inline RoadNetwork parse_network(const std::string &text) {
  std::istringstream in(text);
  return load_network(in);
}

inline RoadNetwork load_network_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open road file '" + path + "'");
  return load_network(in);
}

/// Road document for a rows x cols grid; junction (r, c) has id r*cols+c+1.
inline std::string grid_document(int rows, int cols, double spacing, double speed_limit) {
  std::ostringstream out;
  out << "# " << rows << "x" << cols << " grid, " << spacing << " m blocks\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out << "junction " << r * cols + c + 1 << ' ' << c * spacing << ' ' << r * spacing << '\n';
  int sid = 1;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c)
      out << "segment " << sid++ << ' ' << r * cols + c + 1 << ' ' << r * cols + c + 2 << ' ' << speed_limit << " twoway\n";
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out << "segment " << sid++ << ' ' << r * cols + c + 1 << ' ' << (r + 1) * cols + c + 1 << ' ' << speed_limit << " twoway\n";
  return out.str();
}

enum class Ignition : std::uint8_t { off, on };

enum class BatteryLevel : std::uint8_t { very_low = 0, low, medium, high, very_high };

inline std::optional<BatteryLevel> parse_battery(const std::string &s) {
  if (s == "very_low") return BatteryLevel::very_low;
  if (s == "low") return BatteryLevel::low;
  if (s == "medium") return BatteryLevel::medium;
  if (s == "high") return BatteryLevel::high;
  if (s == "very_high") return BatteryLevel::very_high;
  return std::nullopt;
}

inline const char *to_string(BatteryLevel b) {
  switch (b) {
    case BatteryLevel::very_low: return "very_low";
    case BatteryLevel::low: return "low";
    case BatteryLevel::medium: return "medium";
    case BatteryLevel::high: return "high";
    case BatteryLevel::very_high: return "very_high";
  }
  return "?";
}

using NodeId = std::uint32_t;

struct VehicleState {
  NodeId node = 0;
  GeoCoordinate position;
  double speed = 0.0;  // km/h
  SegmentId segment = 0;
  Direction direction = Direction::forward;
  double offset = 0.0;  // metres travelled into the segment along `direction`
  Ignition ignition = Ignition::on;
  BatteryLevel battery = BatteryLevel::high;

  RouteStep step() const { return {segment, direction}; }
};

/// Target speed plus the steps to take at the next junctions, in order.
struct MobilityDirective {
  double speed = 0.0;
  std::span<const RouteStep> upcoming;
};

struct AdvanceResult {
  VehicleState state;
  std::size_t steps_entered = 0;
  bool clamped = false;  // stopped at a segment end with no onward step
};

inline AdvanceResult advance_vehicle(const VehicleState &state, const RoadNetwork &net, double dt,
                                     const MobilityDirective &directive) {
  if (!(dt > 0.0)) throw std::invalid_argument("advance_vehicle: dt must be > 0");
  if (directive.speed < 0.0) throw std::invalid_argument("advance_vehicle: negative speed");
  AdvanceResult r{state, 0, false};
  auto &s = r.state;
  if (s.ignition == Ignition::off) {
    s.speed = 0.0;
    return r;
  }
  s.speed = directive.speed;
  double remaining = kmh_to_ms(directive.speed) * dt;
  const RoadSegment *seg = &net.segment(s.segment);
  while (remaining > 0.0) {
    double left = seg->length - s.offset;
    if (remaining <= left) {
      s.offset += remaining;
      break;
    }
    remaining -= left;
    if (r.steps_entered >= directive.upcoming.size()) {
      s.offset = seg->length;
      r.clamped = true;
      s.speed = 0.0;
      break;
    }
    const auto &next = directive.upcoming[r.steps_entered];
    const auto &nseg = net.segment(next.segment);
    if (nseg.entry(next.direction) != seg->exit(s.direction))
      throw ValidationError("directive step onto segment " + std::to_string(next.segment) +
                            " is not adjacent at junction " + std::to_string(seg->exit(s.direction)));
    if (!nseg.allows(next.direction))
      throw ValidationError("directive travels one-way segment " + std::to_string(next.segment) + " backwards");
    seg = &nseg;
    s.segment = next.segment;
    s.direction = next.direction;
    s.offset = 0.0;
    ++r.steps_entered;
  }
  s.position = seg->point_at(s.offset, s.direction);
  return r;
}

struct MobilityTrace {
  NodeId node = 0;
  std::vector<std::pair<double, VehicleState>> samples;

  /// Strictly increasing timestamps and displacement within the speed bound
  /// (10% slack plus 1e-6 m).
  bool consistent() const {
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const auto &[t0, s0] = samples[i - 1];
      const auto &[t1, s1] = samples[i];
      if (!(t1 > t0)) return false;
      double bound = kmh_to_ms(std::max(s0.speed, s1.speed)) * (t1 - t0) * 1.1 + 1e-6;
      if (distance(s0.position, s1.position) > bound) return false;
    }
    return true;
  }
};

struct PathResult {
  std::vector<RouteStep> steps;
  double cost = 0.0;
};

using StepCost = std::function<double(const RouteStep &, const RoadSegment &)>;

/// Dijkstra over junctions. Deterministic: ties resolve toward the lower
/// junction id and, among equal-cost arrivals, the first relaxation wins.
inline std::optional<PathResult> shortest_path(const RoadNetwork &net, JunctionId from, JunctionId to,
                                               const StepCost &cost, bool respect_one_way = true) {
  if (!net.has_junction(from) || !net.has_junction(to)) return std::nullopt;
  std::map<JunctionId, double> dist;
  std::map<JunctionId, RouteStep> via;
  using Item = std::pair<double, JunctionId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[from] = 0.0;
  pq.push({0.0, from});
  while (!pq.empty()) {
    auto [d, j] = pq.top();
    pq.pop();
    if (d > dist[j]) continue;
    if (j == to) break;
    for (const auto &step : net.departures(j, respect_one_way)) {
      const auto &seg = net.segment(step.segment);
      auto next = seg.exit(step.direction);
      double nd = d + cost(step, seg);
      auto it = dist.find(next);
      if (it == dist.end() || nd < it->second) {
        dist[next] = nd;
        via[next] = step;
        pq.push({nd, next});
      }
    }
  }
  if (!dist.count(to)) return std::nullopt;
  PathResult out;
  out.cost = dist[to];
  for (auto j = to; j != from;) {
    auto step = via.at(j);
    out.steps.push_back(step);
    j = net.segment(step.segment).entry(step.direction);
  }
  std::reverse(out.steps.begin(), out.steps.end());
  return out;
}

}  // namespace vanet
