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

// vanet: validate, run and sweep scenario bundles; emit ready-made kits.

#include "vanet/kits.hpp"
#include "vanet/scenario.hpp"
#include "vanet/sim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace vanet;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void report(const std::string &bundle, const ScenarioLoad &load) {
  for (const auto &w : load.warnings) std::cerr << bundle << ": warning: " << w << '\n';
  for (const auto &e : load.errors) std::cerr << bundle << ": error: " << e << '\n';
}

void write_file(const fs::path &path, const std::string &text, bool force) {
  if (fs::exists(path) && !force) throw RuntimeFailure("refusing to overwrite '" + path.string() + "' (use --force)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out << text;
}

void print_summary(std::ostream &out, const NetworkStats &s) {
  const auto &t = s.total;
  out << "generated " << t.generated << '\n'
      << "sent " << t.sent << '\n'
      << "broadcasted " << t.broadcasted << '\n'
      << "received " << t.received << '\n'
      << "lost " << t.lost << '\n'
      << "in_flight " << s.in_flight << '\n'
      << "auth_attempts " << t.auth_attempts << '\n'
      << "auth_accepted " << t.auth_accepted << '\n'
      << "connections " << s.connections << '\n'
      << "events_accepted " << s.events_accepted << '\n'
      << "events_rejected " << s.events_rejected << '\n';
}

Scenario load_or_fail(const std::string &bundle) {
  auto load = load_scenario_dir(bundle);
  report(bundle, load);
  if (!load.ok()) throw ValidationError(std::to_string(load.errors.size()) + " problem(s) in " + bundle);
  return std::move(*load.scenario);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Smartphone VANET protocol simulator"};
  app.require_subcommand(1);

  std::vector<std::string> validate_paths;
  auto *validate = app.add_subcommand("validate", "Check scenario bundles and report every problem");
  validate->add_option("bundles", validate_paths, "Bundle directories")->required();

  std::string bundle;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool force = false;
  auto *run = app.add_subcommand("run", "Run a bundle and write metrics and trace files");
  run->add_option("bundle", bundle, "Bundle directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--force", force, "Overwrite existing outputs");

  std::string param;
  auto *sweep = app.add_subcommand("sweep", "One run per parameter value, combined CSV");
  sweep->add_option("bundle", bundle, "Bundle directory")->required();
  sweep->add_option("--param", param, "obu_fraction=<list> or vehicle_count=<list>")->required();
  sweep->add_option("--seed", seed, "Override the scenario seed");
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_flag("--force", force, "Overwrite existing outputs");

  std::string kit_name;
  auto *kit = app.add_subcommand("kit", "Write a ready-made scenario bundle");
  kit->add_option("name", kit_name, "Kit name")->required();
  kit->add_option("--out", out_dir, "Parent directory of the new bundle");
  kit->add_flag("--force", force, "Overwrite existing files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      bool ok = true;
      for (const auto &p : validate_paths) {
        auto load = load_scenario_dir(p);
        report(p, load);
        if (load.ok())
          std::cout << p << ": ok\n";
        else
          ok = false;
      }
      return ok ? 0 : kExitValidation;
    }

    if (*run) {
      auto sc = load_or_fail(bundle);
      if (seed) sc.config.seed = *seed;
      fs::create_directories(out_dir);
      auto stem = sc.config.name + "_" + std::to_string(sc.config.seed);
      auto metrics_path = fs::path(out_dir) / (stem + ".metrics.csv");
      auto trace_path = fs::path(out_dir) / (stem + ".trace");
      if (!force)
        for (const auto &p : {metrics_path, trace_path})
          if (fs::exists(p)) throw RuntimeFailure("refusing to overwrite '" + p.string() + "' (use --force)");
      Simulation sim(std::move(sc));
      sim.run();
      auto stats = sim.stats();
      write_file(metrics_path, metrics_csv(stats), true);
      write_file(trace_path, sim.trace_text(), true);
      std::cout << "wrote " << metrics_path.string() << " and " << trace_path.string() << '\n';
      print_summary(std::cout, stats);
      return 0;
    }

    if (*sweep) {
      auto eq = param.find('=');
      if (eq == std::string::npos) throw ValidationError("--param expects name=v1,v2,...");
      auto name = param.substr(0, eq);
      if (name != "obu_fraction" && name != "vehicle_count")
        throw ValidationError("sweep parameter must be obu_fraction or vehicle_count");
      std::vector<std::string> values;
      std::stringstream list(param.substr(eq + 1));
      for (std::string v; std::getline(list, v, ',');)
        if (!v.empty()) values.push_back(v);
      if (values.empty()) throw ValidationError("--param lists no values");

      auto base = load_or_fail(bundle);
      if (seed) base.config.seed = *seed;
      std::vector<Scenario> runs;
      for (const auto &v : values) {
        Scenario sc = base;
        double x = 0.0;
        if (!detail::try_number(v, x)) throw ValidationError("bad sweep value '" + v + "'");
        if (name == "obu_fraction") {
          sc.config.obu_fraction = x;
        } else {
          if (x < static_cast<double>(sc.vehicles.size()) || x != std::floor(x))
            throw ValidationError("vehicle_count " + v + " is not a whole number of at least the listed vehicles");
          sc.config.vehicle_count = static_cast<std::size_t>(x);
          if (sc.roster.size() < sc.config.vehicle_count)
            throw ValidationError("roster too small for vehicle_count " + v);
        }
        if (auto bad = sc.config.violations(); !bad.empty()) throw ValidationError(name + "=" + v + ": " + bad.front());
        for (const auto &w : sc.config.warnings()) std::cerr << "warning: " << name << "=" << v << ": " << w << '\n';
        runs.push_back(std::move(sc));
      }

      fs::create_directories(out_dir);
      auto path = fs::path(out_dir) / (base.config.name + "_" + std::to_string(base.config.seed) + "_sweep_" + name + ".csv");
      if (fs::exists(path) && !force) throw RuntimeFailure("refusing to overwrite '" + path.string() + "' (use --force)");
      std::ofstream csv(path, std::ios::trunc);
      csv << name << ",seed,generated,sent,broadcasted,received,lost,in_flight,auth_attempts,auth_accepted,connections,"
                     "events_accepted\n";
      csv.flush();
      for (std::size_t i = 0; i < runs.size(); ++i) {
        Simulation sim(std::move(runs[i]));
        sim.run();
        auto s = sim.stats();
        const auto &t = s.total;
        csv << values[i] << ',' << base.config.seed << ',' << t.generated << ',' << t.sent << ',' << t.broadcasted << ','
            << t.received << ',' << t.lost << ',' << s.in_flight << ',' << t.auth_attempts << ',' << t.auth_accepted << ','
            << s.connections << ',' << s.events_accepted << '\n';
        csv.flush();
        std::cout << name << '=' << values[i] << " connections " << s.connections << '\n';
      }
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }

    if (*kit) {
      BundleFiles files;
      try {
        files = kit_bundle(kit_name);
      } catch (const std::invalid_argument &e) {
        std::cerr << e.what() << '\n';
        return kExitValidation;
      }
      auto dir = fs::path(out_dir) / kit_name;
      write_bundle(files, dir, force);
      std::cout << "wrote kit " << kit_name << " to " << dir.string() << '\n';
      return 0;
    }
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
