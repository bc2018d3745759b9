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

// Simulation configuration and the scenario bundle: a directory holding
// scenario.conf plus the road, roster and advert documents it names.
//
// scenario.conf records (one per line, `#` comments):
//   name <id>                      seed <n>              duration <s>
//   tick <s>                       vehicle_count <n>     obu_fraction <0..1>
//   radio_range <m>                auth_period <s>       battery_threshold <level>
//   parking_ttl <s>                pseudonym_life <min> <max>
//   roads <file>                   roster <file>
//   vehicle <segment> <offset> <fwd|rev> <kmh> [dest=<junction>] [battery=<level>]
//           [user=<id>] [block=<company>] [parked] [freerider] [nogps]
//   speed <v> <t> <kmh>            congestion <segment> <from> <until> <kmh>
//   park <v> <t>                   unpark <v> <t>
//   gps <v> <t> <on|off>           find_car <v> <t> <x> <y>
//   advert <v> <t> <file>

#include "vanet/events.hpp"
#include "vanet/geo.hpp"
#include "vanet/relay.hpp"
#include "vanet/trust.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vanet {

struct SimConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double duration = 100.0;
  double tick = 1.0;
  std::size_t vehicle_count = 0;
  double obu_fraction = 1.0;
  double radio_range = 75.0;
  double auth_period = 20.0;
  BatteryLevel battery_threshold = BatteryLevel::low;
  double parking_ttl = 60.0;
  PseudonymPolicy pseudonyms;
  DetectionConfig detection;
  CooperationPolicy cooperation;
  double session_timeout = 3.0;  // ticks without progress before an exchange is dropped
  double peer_expiry = 5.0;      // seconds unheard before a neighbour is forgotten
  double duty_window = 3.0;      // seconds to overhear a peer's relay
  double congestion_penalty = kCongestionPenalty;

  /// Hard violations; an empty list means the config can run.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(duration > 0.0)) out.push_back("duration must be > 0");
    if (!(tick > 0.0)) out.push_back("tick must be > 0");
    if (!(obu_fraction >= 0.0 && obu_fraction <= 1.0)) out.push_back("obu_fraction must be within [0, 1]");
    if (!(radio_range > 0.0)) out.push_back("radio_range must be > 0");
    if (!(auth_period > 0.0)) out.push_back("auth_period must be > 0");
    if (!(parking_ttl > 0.0)) out.push_back("parking_ttl must be > 0");
    if (!(pseudonyms.min_life > 0.0 && pseudonyms.min_life <= pseudonyms.max_life))
      out.push_back("pseudonym_life needs 0 < min <= max");
    return out;
  }

  /// Outside the evaluated ranges but still runnable.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (vehicle_count < 600 || vehicle_count > 15000)
      out.push_back("vehicle_count " + std::to_string(vehicle_count) + " is outside the evaluated range 600-15000");
    if (obu_fraction < 0.01) out.push_back("obu_fraction below 0.01");
    return out;
  }
};

/// Should the app start on this phone at all.
inline bool should_launch(BatteryLevel battery, BatteryLevel threshold) { return battery > threshold; }

struct VehicleSpec {
  SegmentId segment = 0;
  double offset = 0.0;
  Direction direction = Direction::forward;
  double speed = 0.0;  // km/h
  std::optional<JunctionId> destination;
  BatteryLevel battery = BatteryLevel::high;
  std::optional<UserId> user;
  std::set<std::string> blocked_companies;
  bool parked = false;
  bool freerider = false;
  bool gps = true;
};

struct ScriptEvent {
  enum class Kind { speed, park, unpark, gps, find_car, advert };
  Kind kind = Kind::speed;
  double t = 0.0;
  std::size_t vehicle = 0;
  double value = 0.0;     // speed
  bool flag = false;      // gps on/off
  GeoCoordinate where;    // find_car: owner's position
  std::string file;       // advert
};

struct CongestionZone {
  SegmentId segment = 0;
  double from = 0.0;
  double until = 0.0;
  double speed = 0.0;
};

struct Scenario {
  SimConfig config;
  RoadNetwork network;
  Roster roster;
  std::vector<VehicleSpec> vehicles;  // explicit ones; the rest are generated
  std::vector<ScriptEvent> script;
  std::vector<CongestionZone> zones;
  std::map<std::string, AdvertEvent> adverts;
  std::string roads_file = "roads.txt";
  std::string roster_file = "roster.txt";
};

/// Looks up a bundle file by its name inside the bundle.
using FileSource = std::function<std::optional<std::string>(const std::string &)>;

inline FileSource directory_source(const std::filesystem::path &dir) {
  return [dir](const std::string &name) -> std::optional<std::string> {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
}

inline FileSource memory_source(std::map<std::string, std::string> files) {
  return [files = std::move(files)](const std::string &name) -> std::optional<std::string> {
    auto it = files.find(name);
    if (it == files.end()) return std::nullopt;
    return it->second;
  };
}

struct ScenarioLoad {
  std::optional<Scenario> scenario;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty() && scenario.has_value(); }
};

namespace detail {

template <class T>
bool try_number(const std::string &s, T &out) {
  try {
    out = parse_number<T>(s, 0, "value");
    return true;
  } catch (const std::exception &) {
    return false;
  }
}

}  // namespace detail

/// Parses every document of the bundle and reports all problems found, not
/// just the first. `scenario` is set only when nothing is wrong.
inline ScenarioLoad load_scenario(const FileSource &files, const std::string &main = "scenario.conf") {
  ScenarioLoad out;
  auto text = files(main);
  if (!text) {
    out.errors.push_back("missing file '" + main + "'");
    return out;
  }
  Scenario sc;
  bool count_given = false;
  std::vector<std::pair<std::size_t, std::string>> advert_refs;
  std::istringstream in(*text);
  std::string line;
  std::size_t n = 0;
  auto err = [&](const std::string &what) { out.errors.push_back(main + ":" + std::to_string(n) + ": " + what); };

  while (std::getline(in, line)) {
    ++n;
    if (detail::is_blank_or_comment(line)) continue;
    auto tok = detail::split_ws(line);
    const auto &key = tok[0];
    auto need = [&](std::size_t count, const char *usage) {
      if (tok.size() != count) {
        err(std::string(key) + " expects " + usage);
        return false;
      }
      return true;
    };
    auto num = [&](const std::string &s, double &v, const char *what) {
      if (!detail::try_number(s, v)) {
        err(std::string("bad ") + what + " '" + s + "'");
        return false;
      }
      return true;
    };
    auto idx = [&](const std::string &s, std::size_t &v) {
      if (!detail::try_number(s, v)) {
        err("bad vehicle index '" + s + "'");
        return false;
      }
      return true;
    };
    auto &cfg = sc.config;
    if (key == "name") {
      if (need(2, "<id>")) cfg.name = tok[1];
    } else if (key == "seed") {
      if (need(2, "<n>") && !detail::try_number(tok[1], cfg.seed)) err("bad seed '" + tok[1] + "'");
    } else if (key == "duration") {
      if (need(2, "<seconds>")) num(tok[1], cfg.duration, "duration");
    } else if (key == "tick") {
      if (need(2, "<seconds>")) num(tok[1], cfg.tick, "tick");
    } else if (key == "vehicle_count") {
      if (need(2, "<n>")) {
        if (detail::try_number(tok[1], cfg.vehicle_count))
          count_given = true;
        else
          err("bad vehicle_count '" + tok[1] + "'");
      }
    } else if (key == "obu_fraction") {
      if (need(2, "<fraction>")) num(tok[1], cfg.obu_fraction, "obu_fraction");
    } else if (key == "radio_range") {
      if (need(2, "<metres>")) num(tok[1], cfg.radio_range, "radio_range");
    } else if (key == "auth_period") {
      if (need(2, "<seconds>")) num(tok[1], cfg.auth_period, "auth_period");
    } else if (key == "parking_ttl") {
      if (need(2, "<seconds>")) num(tok[1], cfg.parking_ttl, "parking_ttl");
    } else if (key == "battery_threshold") {
      if (need(2, "<level>")) {
        if (auto b = parse_battery(tok[1]))
          cfg.battery_threshold = *b;
        else
          err("unknown battery level '" + tok[1] + "'");
      }
    } else if (key == "pseudonym_life") {
      if (need(3, "<min> <max>")) {
        num(tok[1], cfg.pseudonyms.min_life, "pseudonym minimum life");
        num(tok[2], cfg.pseudonyms.max_life, "pseudonym maximum life");
      }
    } else if (key == "roads") {
      if (need(2, "<file>")) sc.roads_file = tok[1];
    } else if (key == "roster") {
      if (need(2, "<file>")) sc.roster_file = tok[1];
    } else if (key == "vehicle") {
      if (tok.size() < 5) {
        err("vehicle expects <segment> <offset> <fwd|rev> <kmh> [options]");
        continue;
      }
      VehicleSpec v;
      if (!detail::try_number(tok[1], v.segment)) err("bad segment id '" + tok[1] + "'");
      num(tok[2], v.offset, "offset");
      if (tok[3] == "fwd")
        v.direction = Direction::forward;
      else if (tok[3] == "rev")
        v.direction = Direction::reverse;
      else
        err("direction must be fwd or rev, got '" + tok[3] + "'");
      num(tok[4], v.speed, "speed");
      if (v.speed < 0.0) err("speed must be >= 0");
      for (std::size_t i = 5; i < tok.size(); ++i) {
        const auto &o = tok[i];
        auto eq = o.find('=');
        std::string k = o.substr(0, eq), val = eq == std::string::npos ? "" : o.substr(eq + 1);
        if (o == "parked") {
          v.parked = true;
        } else if (o == "freerider") {
          v.freerider = true;
        } else if (o == "nogps") {
          v.gps = false;
        } else if (k == "dest") {
          JunctionId j;
          if (detail::try_number(val, j))
            v.destination = j;
          else
            err("bad destination '" + val + "'");
        } else if (k == "battery") {
          if (auto b = parse_battery(val))
            v.battery = *b;
          else
            err("unknown battery level '" + val + "'");
        } else if (k == "user" && !val.empty()) {
          v.user = val;
        } else if (k == "block" && !val.empty()) {
          v.blocked_companies.insert(val);
        } else {
          err("unknown vehicle option '" + o + "'");
        }
      }
      sc.vehicles.push_back(std::move(v));
    } else if (key == "speed") {
      ScriptEvent e{ScriptEvent::Kind::speed};
      if (need(4, "<vehicle> <t> <kmh>") && idx(tok[1], e.vehicle) && num(tok[2], e.t, "time") &&
          num(tok[3], e.value, "speed")) {
        if (e.value < 0.0)
          err("speed must be >= 0");
        else
          sc.script.push_back(e);
      }
    } else if (key == "park" || key == "unpark") {
      ScriptEvent e{key == "park" ? ScriptEvent::Kind::park : ScriptEvent::Kind::unpark};
      if (need(3, "<vehicle> <t>") && idx(tok[1], e.vehicle) && num(tok[2], e.t, "time")) sc.script.push_back(e);
    } else if (key == "gps") {
      ScriptEvent e{ScriptEvent::Kind::gps};
      if (need(4, "<vehicle> <t> <on|off>") && idx(tok[1], e.vehicle) && num(tok[2], e.t, "time")) {
        if (tok[3] != "on" && tok[3] != "off") {
          err("gps expects on or off");
        } else {
          e.flag = tok[3] == "on";
          sc.script.push_back(e);
        }
      }
    } else if (key == "find_car") {
      ScriptEvent e{ScriptEvent::Kind::find_car};
      if (need(5, "<vehicle> <t> <x> <y>") && idx(tok[1], e.vehicle) && num(tok[2], e.t, "time") &&
          num(tok[3], e.where.x, "x") && num(tok[4], e.where.y, "y"))
        sc.script.push_back(e);
    } else if (key == "advert") {
      ScriptEvent e{ScriptEvent::Kind::advert};
      if (need(4, "<vehicle> <t> <file>") && idx(tok[1], e.vehicle) && num(tok[2], e.t, "time")) {
        e.file = tok[3];
        sc.script.push_back(e);
        advert_refs.emplace_back(n, tok[3]);
      }
    } else if (key == "congestion") {
      CongestionZone z;
      if (need(5, "<segment> <from> <until> <kmh>")) {
        if (!detail::try_number(tok[1], z.segment)) err("bad segment id '" + tok[1] + "'");
        if (num(tok[2], z.from, "start") && num(tok[3], z.until, "end") && num(tok[4], z.speed, "speed")) {
          if (z.until < z.from) err("congestion ends before it starts");
          if (z.speed < 0.0) err("speed must be >= 0");
          sc.zones.push_back(z);
        }
      }
    } else {
      err("unknown record '" + key + "'");
    }
  }

  auto &cfg = sc.config;
  if (!count_given) cfg.vehicle_count = sc.vehicles.size();
  for (const auto &v : cfg.violations()) out.errors.push_back(main + ": " + v);
  for (const auto &w : cfg.warnings()) out.warnings.push_back(main + ": " + w);
  if (cfg.vehicle_count < sc.vehicles.size())
    out.errors.push_back(main + ": vehicle_count " + std::to_string(cfg.vehicle_count) + " is below the " +
                         std::to_string(sc.vehicles.size()) + " listed vehicles");

  bool roads_ok = false, roster_ok = false;
  if (auto roads = files(sc.roads_file)) {
    try {
      sc.network = parse_network(*roads);
      roads_ok = true;
      if (sc.network.segments().empty()) {
        out.errors.push_back(sc.roads_file + ": road network has no segments");
        roads_ok = false;
      }
    } catch (const std::exception &e) {
      out.errors.push_back(sc.roads_file + ": " + e.what());
    }
  } else {
    out.errors.push_back("missing road file '" + sc.roads_file + "'");
  }
  if (auto roster = files(sc.roster_file)) {
    try {
      sc.roster = parse_roster(*roster);
      roster_ok = true;
    } catch (const std::exception &e) {
      out.errors.push_back(sc.roster_file + ": " + e.what());
    }
  } else {
    out.errors.push_back("missing roster file '" + sc.roster_file + "'");
  }

  for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
    const auto &v = sc.vehicles[i];
    std::string who = main + ": vehicle " + std::to_string(i) + ": ";
    if (roads_ok) {
      if (!sc.network.has_segment(v.segment)) {
        out.errors.push_back(who + "unknown segment " + std::to_string(v.segment));
      } else {
        const auto &seg = sc.network.segment(v.segment);
        if (v.offset < 0.0 || v.offset > seg.length) out.errors.push_back(who + "offset outside the segment");
        if (!seg.allows(v.direction)) out.errors.push_back(who + "travels one-way segment backwards");
      }
      if (v.destination && !sc.network.has_junction(*v.destination))
        out.errors.push_back(who + "unknown destination junction " + std::to_string(*v.destination));
    }
    if (roster_ok && v.user && !sc.roster.contains(*v.user)) out.errors.push_back(who + "unknown user '" + *v.user + "'");
  }
  if (roster_ok && sc.roster.size() < cfg.vehicle_count) {
    std::size_t named = 0;
    for (const auto &v : sc.vehicles) named += v.user.has_value();
    if (sc.roster.size() < cfg.vehicle_count - named)
      out.errors.push_back(sc.roster_file + ": " + std::to_string(sc.roster.size()) + " users for " +
                           std::to_string(cfg.vehicle_count) + " vehicles");
  }
  for (const auto &e : sc.script) {
    if (e.vehicle >= cfg.vehicle_count)
      out.errors.push_back(main + ": script references vehicle " + std::to_string(e.vehicle) + " of " +
                           std::to_string(cfg.vehicle_count));
    if (e.t < 0.0) out.errors.push_back(main + ": script time must be >= 0");
  }
  if (roads_ok)
    for (const auto &z : sc.zones)
      if (!sc.network.has_segment(z.segment))
        out.errors.push_back(main + ": congestion on unknown segment " + std::to_string(z.segment));

  for (const auto &[line_no, name] : advert_refs) {
    if (sc.adverts.count(name)) continue;
    auto doc = files(name);
    if (!doc) {
      out.errors.push_back(main + ":" + std::to_string(line_no) + ": missing advert file '" + name + "'");
      continue;
    }
    try {
      std::istringstream a(*doc);
      sc.adverts.emplace(name, load_advert(a));
    } catch (const std::exception &e) {
      out.errors.push_back(name + ": " + e.what());
    }
  }

  if (out.errors.empty()) out.scenario = std::move(sc);
  return out;
}

inline ScenarioLoad load_scenario_dir(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir)) {
    ScenarioLoad out;
    out.errors.push_back("missing bundle directory '" + dir.string() + "'");
    return out;
  }
  return load_scenario(directory_source(dir));
}

}  // namespace vanet
