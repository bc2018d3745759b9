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

// Ready-made scenario bundles, generated as in-memory documents.

#include "vanet/events.hpp"
#include "vanet/geo.hpp"
#include "vanet/trust.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vanet {

using BundleFiles = std::map<std::string, std::string>;

namespace kits {

inline std::string user_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "user-%04zu", i + 1);
  return buf;
}

/// `count` vehicle users plus one shared friend, so every pair can
/// authenticate.
inline std::string hub_roster(std::size_t count, std::uint64_t seed_base, const std::vector<std::string> &extra = {}) {
  std::ostringstream out;
  for (std::size_t i = 0; i < count; ++i) out << "user " << user_name(i) << ' ' << seed_base + i << '\n';
  out << "user hub-friend " << seed_base + 9000 << '\n';
  for (std::size_t i = 0; i < extra.size(); ++i) out << "user " << extra[i] << ' ' << seed_base + 9100 + i << '\n';
  for (std::size_t i = 0; i < count; ++i) out << "friend " << user_name(i) << " hub-friend\n";
  return out.str();
}

inline std::string congestion_chain(bool with_corroborator) {
  std::ostringstream s;
  s << "# detector and corroborator stuck on the main road, receiver waiting on the side road\n"
    << "name " << (with_corroborator ? "congestion-chain" : "congestion-solo") << "\n"
    << "seed 42\nduration 400\nroads roads.txt\nroster roster.txt\n"
    << "vehicle 1 50 fwd 45 user=user-0001\n";
  if (with_corroborator) s << "vehicle 1 30 fwd 45 user=user-0002\n";
  s << "vehicle 3 20 fwd 0 user=user-0003\n";
  s << "speed 0 240 18\n";
  if (with_corroborator) s << "speed 1 240 18\n";
  return s.str();
}

inline BundleFiles congestion_chain_bundle(bool with_corroborator) {
  return {{"scenario.conf", congestion_chain(with_corroborator)},
          {"roads.txt",
           "junction 1 0 0\njunction 2 3360 0\njunction 3 4000 0\njunction 4 3360 -400\n"
           "segment 1 1 2 100 twoway\nsegment 2 2 3 100 twoway\nsegment 3 2 4 20 twoway\n"},
          {"roster.txt", hub_roster(3, 100)}};
}

inline BundleFiles parking_bundle() {
  return {{"scenario.conf",
           "# a parked car leaves; a nearby searcher and one further down the street\n"
           "name parking\nseed 7\nduration 120\nparking_ttl 60\nroads roads.txt\nroster roster.txt\n"
           "vehicle 1 100 fwd 0 parked\n"
           "vehicle 1 150 fwd 0\n"
           "vehicle 1 210 fwd 0\n"
           "unpark 0 10\n"},
          {"roads.txt", "junction 1 0 0\njunction 2 400 0\njunction 3 400 300\n"
                        "segment 1 1 2 50 twoway\nsegment 2 2 3 50 twoway\n"},
          {"roster.txt", hub_roster(3, 200)}};
}

inline BundleFiles find_car_bundle() {
  return {{"scenario.conf",
           "# drive, park, walk away, ask for the way back\n"
           "name find-car\nseed 11\nduration 60\nroads roads.txt\nroster roster.txt\n"
           "vehicle 1 0 fwd 36\n"
           "park 0 5\n"
           "find_car 0 40 180 230\n"},
          {"roads.txt", grid_document(4, 3, 100.0, 36.0)},
          {"roster.txt", hub_roster(1, 300)}};
}

inline BundleFiles reroute_bundle() {
  return {{"scenario.conf",
           "# a jam on the top row, reported to a car about to drive through it\n"
           "name reroute\nseed 5\nduration 500\nroads roads.txt\nroster roster.txt\n"
           "vehicle 1 40 fwd 0\n"
           "vehicle 1 60 fwd 0\n"
           "vehicle 13 150 rev 0 dest=4\n"
           "speed 2 375 36\n"},
          {"roads.txt", grid_document(4, 4, 200.0, 36.0)},
          {"roster.txt", hub_roster(3, 400)}};
}

inline std::string advert_text(const AdvertEvent &a) {
  std::ostringstream out;
  write_advert(out, a);
  return out.str();
}

inline BundleFiles advert_bundle() {
  auto roster_doc = hub_roster(4, 500, {"acme-motors"});
  auto roster = parse_roster(roster_doc);
  const auto &company = roster.user("acme-motors");
  auto ad = make_advert("acme-motors", "Spring service check 20% off", {100, 0}, 30.0, 200.0, company, "acme.png");
  auto forged = ad;
  forged.message = "Spring service check 90% off";  // signature no longer matches
  return {{"scenario.conf",
           "# a shop phone publishes an advert; one receiver blocks the company\n"
           "name advert\nseed 3\nduration 120\nroads roads.txt\nroster roster.txt\n"
           "vehicle 1 50 fwd 0\n"
           "vehicle 1 100 fwd 0\n"
           "vehicle 1 160 fwd 0\n"
           "vehicle 1 110 fwd 0 block=acme-motors\n"
           "advert 0 20 advert-acme.txt\n"
           "advert 0 40 advert-forged.txt\n"},
          {"roads.txt", "junction 1 0 0\njunction 2 500 0\nsegment 1 1 2 20 twoway\n"},
          {"roster.txt", roster_doc},
          {"advert-acme.txt", advert_text(ad)},
          {"advert-forged.txt", advert_text(forged)}};
}

inline BundleFiles free_rider_bundle() {
  auto roster_doc = hub_roster(4, 600, {"acme-motors"});
  auto roster = parse_roster(roster_doc);
  const auto &company = roster.user("acme-motors");
  BundleFiles files;
  std::ostringstream s;
  s << "# S - H - F/G chain; F never relays\n"
    << "name free-rider\nseed 9\nduration 200\nroads roads.txt\nroster roster.txt\n"
    << "vehicle 1 0 fwd 0\n"
    << "vehicle 1 50 fwd 0\n"
    << "vehicle 1 100 fwd 0 freerider\n"
    << "vehicle 2 0 fwd 0\n";
  for (int i = 0; i < 10; ++i) {
    std::string name = "advert-" + std::to_string(i + 1) + ".txt";
    auto ad = make_advert("acme-motors", "Offer number " + std::to_string(i + 1), {50, 0}, 1000.0, 1000.0, company);
    files[name] = advert_text(ad);
    s << "advert 0 " << 10 + 15 * i << ' ' << name << '\n';
  }
  files["scenario.conf"] = s.str();
  files["roads.txt"] = "junction 1 0 0\njunction 2 300 0\njunction 3 100 30\njunction 4 100 200\n"
                       "segment 1 1 2 20 twoway\nsegment 2 3 4 20 twoway\n";
  files["roster.txt"] = roster_doc;
  return files;
}

/// `vehicles` users, each friends with 3 of 12 hub users.
inline std::string demo_roster(std::size_t vehicles, std::uint64_t seed_base) {
  std::ostringstream out;
  for (std::size_t i = 0; i < vehicles; ++i) out << "user " << user_name(i) << ' ' << seed_base + i << '\n';
  for (int h = 0; h < 12; ++h) out << "user hub-" << h << ' ' << seed_base + 100000 + h << '\n';
  for (std::size_t i = 0; i < vehicles; ++i)
    for (std::size_t k = 0; k < 3; ++k) out << "friend " << user_name(i) << " hub-" << (i * 5 + k * 4) % 12 << '\n';
  return out.str();
}

inline BundleFiles demo_bundle(std::size_t vehicles = 600) {
  std::ostringstream s;
  s << "# random traffic on a 5x5 grid with a jam on segment 1\n"
    << "name demo\nseed 42\nduration 300\nvehicle_count " << vehicles << "\nobu_fraction 1.0\n"
    << "roads roads.txt\nroster roster.txt\n"
    << "congestion 1 0 300 8\n";
  return {{"scenario.conf", s.str()}, {"roads.txt", grid_document(5, 5, 250.0, 50.0)}, {"roster.txt", demo_roster(vehicles, 10000)}};
}

}  // namespace kits

inline const std::vector<std::string> &kit_names() {
  static const std::vector<std::string> names{"congestion-chain", "congestion-solo", "parking", "find-car",
                                              "advert",           "free-rider",      "reroute", "demo"};
  return names;
}

inline BundleFiles kit_bundle(const std::string &name) {
  if (name == "congestion-chain") return kits::congestion_chain_bundle(true);
  if (name == "congestion-solo") return kits::congestion_chain_bundle(false);
  if (name == "parking") return kits::parking_bundle();
  if (name == "find-car") return kits::find_car_bundle();
  if (name == "advert") return kits::advert_bundle();
  if (name == "free-rider") return kits::free_rider_bundle();
  if (name == "reroute") return kits::reroute_bundle();
  if (name == "demo") return kits::demo_bundle();
  std::string all;
  for (const auto &n : kit_names()) all += (all.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown kit '" + name + "' (available: " + all + ")");
}

/// Writes the bundle into `dir`. Existing files are kept unless `force`.
inline void write_bundle(const BundleFiles &files, const std::filesystem::path &dir, bool force) {
  std::filesystem::create_directories(dir);
  if (!force)
    for (const auto &[name, text] : files)
      if (std::filesystem::exists(dir / name))
        throw std::runtime_error("refusing to overwrite '" + (dir / name).string() + "' (use --force)");
  for (const auto &[name, text] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    out << text;
  }
}

}  // namespace vanet
