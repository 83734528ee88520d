// Copyright 2026 The pacing-dyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: simulate, sweep, adversary, analyze, reproduce.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pacing_dyn/adversary_lab.hpp"
#include "pacing_dyn/analysis_json.hpp"
#include "pacing_dyn/dynamics_analyzer.hpp"
#include "pacing_dyn/errors.hpp"
#include "pacing_dyn/experiment.hpp"
#include "pacing_dyn/reproduce.hpp"
#include "pacing_dyn/trace_io.hpp"

namespace {

using nlohmann::json;
using namespace pacing_dyn;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct SimulateArgs {
  std::string config;
  std::optional<std::int64_t> horizon;
  std::optional<double> eta;
  std::optional<std::string> output_dir;
  int workers = 0;
};

int cmd_simulate(const SimulateArgs& args, bool sweep) {
  experiment::ExperimentConfig config = experiment::load_config(args.config);
  if (args.output_dir) config.output_dir = *args.output_dir;
  if (!sweep) {
    config.sweep.reset();
    if (args.horizon) {
      config.market.horizon = *args.horizon;
      if (!config.eta_explicit && *args.horizon > 0) {
        config.market.eta = 1.0 / std::sqrt(static_cast<double>(*args.horizon));
      }
    }
    if (args.eta) {
      config.market.eta = *args.eta;
      config.eta_explicit = true;
    }
    try {
      config.market.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }
  const auto records = experiment::run(config, args.workers);
  bool ok = true;
  for (const auto& r : records) {
    std::cout << experiment::to_json(r).dump() << '\n';
    ok = ok && r.error.empty();
  }
  return ok ? kExitPass : kExitFail;
}

struct SolveArgs {
  double rho_l = 0.5;
  double rho_o = 0.5;
  std::int64_t horizon = 16;
  std::optional<double> eta;
  std::optional<double> b1;
  std::string method = "enum";
  int grid = 256;
};

json solve_record(const adversary::AdversaryProblem& p, const std::string& method,
                  int grid, bool certify) {
  json out = {{"instance", p},
              {"cap", adversary::win_cap(p.rho_l, p.rho_o, p.horizon, p.eta)}};
  if (method == "enum") {
    const adversary::WinSequence best = adversary::enumerate_optimal(p);
    out["wins"] = best.wins;
    out["feasible_cost"] = best.cost;
    out["sequence"] = best;
  } else {
    const auto hi = adversary::dp_optimal(p, grid, grid, adversary::Rounding::kOptimistic);
    const auto lo = adversary::dp_optimal(p, grid, grid, adversary::Rounding::kPessimistic);
    out["wins"] = hi.wins_bound;
    out["wins_lower"] = lo.wins_bound;
    out["feasible_cost"] = lo.sequence.cost;
  }
  if (certify && p.horizon <= adversary::kMaxEnumerationHorizon) {
    out["certificate_ok"] = adversary::verify_certificate_windows(p).violations == 0;
  } else {
    out["certificate_ok"] = nullptr;
  }
  return out;
}

adversary::AdversaryProblem make_problem(double rho_l, double rho_o,
                                         std::int64_t horizon,
                                         std::optional<double> eta,
                                         std::optional<double> b1) {
  adversary::AdversaryProblem p{
      rho_l, rho_o, horizon,
      eta.value_or(horizon > 0 ? 1.0 / std::sqrt(static_cast<double>(horizon)) : 0.5),
      b1.value_or(rho_l)};
  p.validate();
  return p;
}

int cmd_solve(const SolveArgs& a) {
  if (a.method != "enum" && a.method != "dp") {
    throw ConfigError("--method must be enum or dp");
  }
  const auto p = make_problem(a.rho_l, a.rho_o, a.horizon, a.eta, a.b1);
  const json out = solve_record(p, a.method, a.grid,
                                p.horizon <= 16 && a.method == "enum");
  std::cout << out.dump() << '\n';
  return kExitPass;
}

int cmd_certify(std::int64_t horizon, const std::string& sweep_file) {
  std::ifstream in(sweep_file);
  if (!in) throw IoError(fmt::format("cannot open {}", sweep_file));
  bool ok = true;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find_first_of("0123456789") != 0) continue;  // header
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}:{}: bad number '{}'", sweep_file, line_no, cell));
      }
    }
    if (fields.size() < 2 || fields.size() > 4) {
      throw ConfigError(fmt::format(
          "{}:{}: expected rho_l,rho_o[,eta[,b1]]", sweep_file, line_no));
    }
    const auto p = make_problem(
        fields[0], fields[1], horizon,
        fields.size() > 2 ? std::optional<double>(fields[2]) : std::nullopt,
        fields.size() > 3 ? std::optional<double>(fields[3]) : std::nullopt);
    const json out = solve_record(p, "enum", 0, true);
    ok = ok && out["wins"].get<double>() <= out["cap"].get<double>() &&
         out["certificate_ok"] == true;
    std::cout << out.dump() << '\n';
  }
  return ok ? kExitPass : kExitFail;
}

struct AnalyzeArgs {
  std::string trace;
  std::int64_t window = 0;
  std::int64_t stride = 1;
  std::int64_t start = 1;
  std::optional<double> d;
};

int cmd_analyze(const std::string& what, const AnalyzeArgs& a) {
  const Trace trace = load_trace(a.trace);
  if (a.stride < 1) throw ConfigError("--stride must be >= 1");
  if (what == "potential") {
    const auto rho = trace.config().rhos();
    for (std::int64_t t = a.start; t <= trace.num_rounds() + 1; t += a.stride) {
      const std::optional<int> winner =
          t <= trace.num_rounds() ? std::optional<int>(trace.winner(t)) : std::nullopt;
      json j = dynamics::potential(trace.bids(t), rho, winner);
      j["round"] = t;
      std::cout << j.dump() << '\n';
    }
  } else if (what == "milestones") {
    std::cout << json(dynamics::milestones(trace, a.d)).dump() << '\n';
  } else if (what == "discrepancy") {
    const std::int64_t tau =
        a.window > 0 ? a.window
                     : static_cast<std::int64_t>(std::ceil(1.0 / trace.config().eta));
    bool ok = true;
    dynamics::for_each_window(trace, tau, a.stride, a.start,
                              [&](const dynamics::WindowStats& w) {
                                ok = ok && w.floor_holds;
                                std::cout << json(w).dump() << '\n';
                              });
    return ok ? kExitPass : kExitFail;
  } else if (what == "roundrobin") {
    std::cout << json(dynamics::detect_round_robin(trace)).dump() << '\n';
  } else {
    throw ConfigError("analysis must be potential, milestones, discrepancy or roundrobin");
  }
  return kExitPass;
}

int cmd_reproduce(const std::string& suite, const std::string& report_path,
                  const CLI::App& sub) {
  if (suite.empty()) {
    std::cerr << sub.help();
    return kExitUsage;
  }
  std::vector<std::string> names;
  if (suite == "all") {
    names = reproduce::suite_names();
  } else if (reproduce::is_suite(suite)) {
    names = {suite};
  } else {
    std::cerr << fmt::format("unknown suite '{}'; choose one of: all", suite);
    for (const auto& n : reproduce::suite_names()) std::cerr << ", " << n;
    std::cerr << '\n';
    return kExitUsage;
  }
  json verdicts = json::array();
  bool ok = true;
  for (const auto& name : names) {
    const reproduce::Verdict v = reproduce::run_suite(name);
    const json j = reproduce::to_json(v);
    std::cout << j.dump() << '\n' << std::flush;
    verdicts.push_back(j);
    ok = ok && v.pass;
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw IoError(fmt::format("cannot write {}", report_path));
    out << json{{"pass", ok}, {"verdicts", verdicts}}.dump(2) << '\n';
  }
  return ok ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-pacing auction simulator and verification lab"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one config point");
  simulate->add_option("--config", sim.config, "YAML experiment config")->required();
  simulate->add_option("--T", sim.horizon, "Override the horizon");
  simulate->add_option("--eta", sim.eta, "Override the learning rate");
  simulate->add_option("--out", sim.output_dir, "Override output_dir");

  SimulateArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run every sweep point of a config");
  sweep->add_option("--config", sweep_args.config, "YAML experiment config")->required();
  sweep->add_option("--out", sweep_args.output_dir, "Override output_dir");
  sweep->add_option("--workers", sweep_args.workers,
                    "Worker threads (default PACING_DYN_WORKERS or all cores)");

  auto* adversary = app.add_subcommand("adversary", "Optimizer problem tools");
  adversary->require_subcommand(1);
  SolveArgs solve;
  auto* solve_cmd = adversary->add_subcommand("solve", "Maximize optimizer wins");
  solve_cmd->add_option("--rho-l", solve.rho_l, "Learner share");
  solve_cmd->add_option("--rho-o", solve.rho_o, "Optimizer share");
  solve_cmd->add_option("--T", solve.horizon, "Horizon");
  solve_cmd->add_option("--eta", solve.eta, "Learning rate (default 1/sqrt(T))");
  solve_cmd->add_option("--b1", solve.b1, "Learner initial bid (default rho_l)");
  solve_cmd->add_option("--method", solve.method, "enum or dp");
  solve_cmd->add_option("--grid", solve.grid, "DP grid cells per axis");
  std::int64_t certify_horizon = 16;
  std::string sweep_file;
  auto* certify = adversary->add_subcommand("certify", "Check cap and certificate over a CSV grid");
  certify->add_option("--T", certify_horizon, "Horizon")->required();
  certify->add_option("--sweep-file", sweep_file, "CSV rows rho_l,rho_o[,eta[,b1]]")
      ->required();

  auto* analyze = app.add_subcommand("analyze", "Analyze a saved trace");
  std::string analysis;
  AnalyzeArgs an;
  analyze->add_option("analysis", analysis, "potential|milestones|discrepancy|roundrobin")
      ->required();
  analyze->add_option("--trace", an.trace, "Trace CSV with .meta.json sidecar")->required();
  analyze->add_option("--window", an.window, "Window length (default ceil(1/eta))");
  analyze->add_option("--stride", an.stride, "Stride between windows or rounds");
  analyze->add_option("--start", an.start, "First window start or round");
  analyze->add_option("--D", an.d, "Milestone distance parameter");

  auto* repro = app.add_subcommand("reproduce", "Run acceptance suites");
  std::string suite;
  std::string report;
  repro->add_option("suite", suite, "Suite name or 'all'");
  repro->add_option("--report", report, "Write a JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, false);
    if (*sweep) return cmd_simulate(sweep_args, true);
    if (*solve_cmd) return cmd_solve(solve);
    if (*certify) return cmd_certify(certify_horizon, sweep_file);
    if (*analyze) return cmd_analyze(analysis, an);
    if (*repro) return cmd_reproduce(suite, report, *repro);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
