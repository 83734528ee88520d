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

#include "pacing_dyn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "pacing_dyn/adversary_lab.hpp"
#include "pacing_dyn/analysis_json.hpp"
#include "pacing_dyn/dynamics_analyzer.hpp"
#include "pacing_dyn/errors.hpp"
#include "pacing_dyn/trace_io.hpp"

namespace pacing_dyn::experiment {
namespace {

using nlohmann::json;

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("field '{}': cannot read value '{}'", field,
                                  YAML::Dump(node)));
  }
}

template <class T>
std::vector<T> sequence(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) {
    throw ConfigError(fmt::format("field '{}' must be a list", field));
  }
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(scalar<T>(node[i], fmt::format("{}[{}]", field, i)));
  }
  return out;
}

AgentPolicy parse_policy(const YAML::Node& agent, const std::string& field) {
  const YAML::Node kind = agent["policy"];
  if (!kind) return policy::PrimalPacing{};
  const auto name = scalar<std::string>(kind, field + ".policy");
  if (name == "pacing") return policy::PrimalPacing{};
  if (name == "scripted") {
    return policy::Scripted{sequence<double>(agent["bids"], field + ".bids")};
  }
  if (name == "match") {
    if (!agent["learner"]) {
      throw ConfigError(fmt::format("field '{}.learner' is required", field));
    }
    return policy::MatchLearner{scalar<int>(agent["learner"], field + ".learner")};
  }
  throw ConfigError(fmt::format(
      "field '{}.policy' must be pacing, scripted or match, got '{}'", field,
      name));
}

TieBreak parse_tie_break(const YAML::Node& root) {
  const YAML::Node node = root["tie_break"];
  if (!node) return tie_break::LowestIndex{};
  const auto name = scalar<std::string>(node, "tie_break");
  if (name == "lowest") return tie_break::LowestIndex{};
  if (name == "highest") return tie_break::HighestIndex{};
  if (name == "random") {
    return tie_break::SeededRandom{
        root["seed"] ? scalar<std::uint64_t>(root["seed"], "seed") : 0};
  }
  if (name == "favor") {
    if (!root["favor"]) throw ConfigError("field 'favor' is required");
    return tie_break::FavorAgent{scalar<int>(root["favor"], "favor")};
  }
  throw ConfigError(fmt::format(
      "field 'tie_break' must be lowest, highest, random or favor, got '{}'",
      name));
}

AnalysisRequest parse_analysis(const YAML::Node& node, std::size_t index) {
  const std::string field = fmt::format("analyses[{}]", index);
  std::string name;
  YAML::Node options;
  if (node.IsScalar()) {
    name = scalar<std::string>(node, field);
  } else if (node.IsMap() && node.size() == 1) {
    name = node.begin()->first.as<std::string>();
    options = node.begin()->second;
  } else {
    throw ConfigError(fmt::format("field '{}' must be a name or a single-key map",
                                  field));
  }
  AnalysisRequest r;
  if (name == "milestones") {
    r.kind = AnalysisRequest::Kind::kMilestones;
  } else if (name == "discrepancy") {
    r.kind = AnalysisRequest::Kind::kDiscrepancy;
    if (options && options.IsMap()) {
      if (options["window"]) r.window = scalar<std::int64_t>(options["window"], field + ".window");
      if (options["stride"]) r.stride = scalar<std::int64_t>(options["stride"], field + ".stride");
      if (options["start"]) r.start = scalar<std::int64_t>(options["start"], field + ".start");
    }
    if (r.window < 0 || r.stride < 1 || r.start < 1) {
      throw ConfigError(fmt::format(
          "field '{}': need window >= 0, stride >= 1, start >= 1", field));
    }
  } else if (name == "round_robin") {
    r.kind = AnalysisRequest::Kind::kRoundRobin;
  } else if (name == "adversary") {
    r.kind = AnalysisRequest::Kind::kAdversary;
  } else {
    throw ConfigError(fmt::format(
        "field '{}': unknown analysis '{}' (milestones, discrepancy, "
        "round_robin, adversary)",
        field, name));
  }
  return r;
}

const char* analysis_name(AnalysisRequest::Kind kind) {
  switch (kind) {
    case AnalysisRequest::Kind::kMilestones: return "milestones";
    case AnalysisRequest::Kind::kDiscrepancy: return "discrepancy";
    case AnalysisRequest::Kind::kRoundRobin: return "round_robin";
    case AnalysisRequest::Kind::kAdversary: return "adversary";
  }
  return "unknown";
}

void validate_market(const MarketConfig& market) {
  try {
    market.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(fmt::format("market: {}", e.what()));
  }
}

// Re-derives defaulted fields after a sweep axis changed T or rho.
void apply_defaults(ExperimentConfig& c) {
  if (!c.eta_explicit && c.market.horizon > 0) {
    c.market.eta = 1.0 / std::sqrt(static_cast<double>(c.market.horizon));
  }
  if (!c.initial_bids_explicit) {
    for (AgentSpec& a : c.market.agents) a.initial_bid = a.rho;
  }
}

}  // namespace

std::size_t SweepAxes::size() const {
  auto axis = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
  return axis(etas.size()) * axis(rhos.size()) * axis(horizons.size()) *
         axis(seeds.size());
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config parse error: {}", e.what()));
  }
  if (!root.IsMap()) throw ConfigError("config must be a key-value map");

  ExperimentConfig c;
  if (root["name"]) c.name = scalar<std::string>(root["name"], "name");
  if (c.name.empty() || c.name.find('/') != std::string::npos) {
    throw ConfigError("field 'name' must be non-empty without '/'");
  }
  if (root["output_dir"]) {
    c.output_dir = scalar<std::string>(root["output_dir"], "output_dir");
  }
  if (root["stream_above"]) {
    c.stream_above = scalar<std::int64_t>(root["stream_above"], "stream_above");
  }

  MarketConfig& m = c.market;
  const YAML::Node horizon = root["T"] ? root["T"] : root["horizon"];
  if (!horizon) throw ConfigError("field 'T' is required");
  m.horizon = scalar<std::int64_t>(horizon, "T");
  if (m.horizon < 0) throw ConfigError("field 'T' must be >= 0");

  if (const YAML::Node agents = root["agents"]) {
    if (!agents.IsSequence() || agents.size() == 0) {
      throw ConfigError("field 'agents' must be a non-empty list");
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string field = fmt::format("agents[{}]", i);
      const YAML::Node a = agents[i];
      if (!a["rho"]) throw ConfigError(fmt::format("field '{}.rho' is required", field));
      AgentSpec spec{static_cast<int>(i), scalar<double>(a["rho"], field + ".rho"),
                     0.0, parse_policy(a, field)};
      if (a["initial_bid"]) {
        spec.initial_bid = scalar<double>(a["initial_bid"], field + ".initial_bid");
        c.initial_bids_explicit = true;
      } else {
        spec.initial_bid = std::holds_alternative<policy::PrimalPacing>(spec.policy)
                               ? spec.rho
                               : 0.0;
      }
      m.agents.push_back(std::move(spec));
    }
    if (c.initial_bids_explicit) {
      // Mixed explicit and defaulted bids stay as written.
      for (std::size_t i = 0; i < agents.size(); ++i) {
        if (!agents[i]["initial_bid"]) {
          m.agents[i].initial_bid = m.agents[i].is_pacing() ? m.agents[i].rho : 0.0;
        }
      }
    }
  } else {
    std::vector<double> rho;
    if (root["rho"]) rho = sequence<double>(root["rho"], "rho");
    int n = root["n"] ? scalar<int>(root["n"], "n") : static_cast<int>(rho.size());
    if (n < 1) throw ConfigError("field 'n' must be >= 1 (or give 'rho')");
    if (rho.empty()) rho.assign(static_cast<std::size_t>(n), 1.0 / n);
    if (static_cast<int>(rho.size()) != n) {
      throw ConfigError(fmt::format("field 'rho' has {} entries, n is {}",
                                    rho.size(), n));
    }
    std::vector<double> bids = rho;
    if (root["initial_bids"]) {
      bids = sequence<double>(root["initial_bids"], "initial_bids");
      c.initial_bids_explicit = true;
      if (bids.size() != rho.size()) {
        throw ConfigError(fmt::format("field 'initial_bids' has {} entries, n is {}",
                                      bids.size(), n));
      }
    }
    for (int i = 0; i < n; ++i) {
      m.agents.push_back(AgentSpec{i, rho[static_cast<std::size_t>(i)],
                                   bids[static_cast<std::size_t>(i)],
                                   policy::PrimalPacing{}});
    }
  }

  if (root["eta"]) {
    m.eta = scalar<double>(root["eta"], "eta");
    c.eta_explicit = true;
    if (!(m.eta > 0.0 && m.eta < 1.0)) {
      throw ConfigError(fmt::format("field 'eta': eta must lie in (0,1), got {}", m.eta));
    }
  } else if (m.horizon > 0) {
    m.eta = 1.0 / std::sqrt(static_cast<double>(m.horizon));
  } else {
    m.eta = 0.5;
  }
  if (root["format"]) {
    const auto f = scalar<std::string>(root["format"], "format");
    if (f == "first") {
      m.format = AuctionFormat::kFirstPrice;
    } else if (f == "second") {
      m.format = AuctionFormat::kSecondPrice;
    } else {
      throw ConfigError(fmt::format("field 'format' must be first or second, got '{}'", f));
    }
  }
  m.tie_break = parse_tie_break(root);
  if (root["normalize_budgets"]) {
    m.normalize_budgets = scalar<bool>(root["normalize_budgets"], "normalize_budgets");
  }
  validate_market(m);

  if (const YAML::Node analyses = root["analyses"]) {
    if (!analyses.IsSequence()) throw ConfigError("field 'analyses' must be a list");
    for (std::size_t i = 0; i < analyses.size(); ++i) {
      c.analyses.push_back(parse_analysis(analyses[i], i));
    }
  }

  if (const YAML::Node sweep = root["sweep"]) {
    if (!sweep.IsMap()) throw ConfigError("field 'sweep' must be a map");
    SweepAxes axes;
    if (sweep["eta"]) axes.etas = sequence<double>(sweep["eta"], "sweep.eta");
    if (sweep["T"]) axes.horizons = sequence<std::int64_t>(sweep["T"], "sweep.T");
    if (sweep["seed"]) axes.seeds = sequence<std::uint64_t>(sweep["seed"], "sweep.seed");
    if (sweep["rho"]) {
      const YAML::Node grid = sweep["rho"];
      if (!grid.IsSequence()) throw ConfigError("field 'sweep.rho' must be a list of lists");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        axes.rhos.push_back(sequence<double>(grid[i], fmt::format("sweep.rho[{}]", i)));
      }
    }
    if (sweep["cap"]) axes.cap = scalar<std::size_t>(sweep["cap"], "sweep.cap");
    if (axes.size() > axes.cap) {
      throw ConfigError(fmt::format("field 'sweep': {} points exceed cap {}",
                                    axes.size(), axes.cap));
    }
    for (double eta : axes.etas) {
      if (!(eta > 0.0 && eta < 1.0)) {
        throw ConfigError(fmt::format("field 'sweep.eta': eta must lie in (0,1), got {}", eta));
      }
    }
    for (const auto& rho : axes.rhos) {
      if (rho.size() != m.agents.size()) {
        throw ConfigError(fmt::format("field 'sweep.rho': entry has {} shares for {} agents",
                                      rho.size(), m.agents.size()));
      }
    }
    c.sweep = std::move(axes);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

json resolved_json(const ExperimentConfig& c) {
  json analyses = json::array();
  for (const AnalysisRequest& r : c.analyses) {
    json a = {{"kind", analysis_name(r.kind)}};
    if (r.kind == AnalysisRequest::Kind::kDiscrepancy) {
      a["window"] = r.window;
      a["stride"] = r.stride;
      a["start"] = r.start;
    }
    analyses.push_back(std::move(a));
  }
  json j = {{"name", c.name},
            {"market", pacing_dyn::to_json(c.market)},
            {"analyses", analyses}};
  if (c.sweep) {
    j["sweep"] = {{"eta", c.sweep->etas},
                  {"rho", c.sweep->rhos},
                  {"T", c.sweep->horizons},
                  {"seed", c.sweep->seeds}};
  }
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  // nlohmann objects keep keys sorted, so dump() is canonical.
  return sha256_hex(resolved_json(config).dump());
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config) {
  if (!config.sweep) return {config};
  const SweepAxes& axes = *config.sweep;
  if (axes.size() > axes.cap) {
    throw ConfigError(fmt::format("sweep of {} points exceeds cap {}",
                                  axes.size(), axes.cap));
  }
  auto or_none = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
  std::vector<ExperimentConfig> points;
  points.reserve(axes.size());
  for (std::size_t e = 0; e < or_none(axes.etas.size()); ++e) {
    for (std::size_t r = 0; r < or_none(axes.rhos.size()); ++r) {
      for (std::size_t h = 0; h < or_none(axes.horizons.size()); ++h) {
        for (std::size_t s = 0; s < or_none(axes.seeds.size()); ++s) {
          ExperimentConfig p = config;
          p.sweep.reset();
          if (!axes.rhos.empty()) {
            for (std::size_t i = 0; i < p.market.agents.size(); ++i) {
              p.market.agents[i].rho = axes.rhos[r][i];
            }
          }
          if (!axes.horizons.empty()) p.market.horizon = axes.horizons[h];
          apply_defaults(p);
          if (!axes.etas.empty()) {
            p.market.eta = axes.etas[e];
            p.eta_explicit = true;
          }
          if (!axes.seeds.empty()) {
            p.market.tie_break = tie_break::SeededRandom{axes.seeds[s]};
          }
          points.push_back(std::move(p));
        }
      }
    }
  }
  return points;
}

json to_json(const RunRecord& record) {
  json j = {{"config_hash", record.config_hash},
            {"trace_path", record.trace_path.string()},
            {"metrics", record.metrics},
            {"wall_time_s", record.wall_time_s},
            {"schema_version", record.schema_version}};
  if (!record.error.empty()) j["error"] = record.error;
  return j;
}

std::filesystem::path experiment_dir(const ExperimentConfig& config) {
  return config.output_dir / config.name;
}

namespace {

json budget_metrics(const MarketConfig& market, std::span<const double> spent,
                    std::span<const double> final_bids) {
  json out = json::array();
  const double horizon = static_cast<double>(market.horizon);
  for (const AgentSpec& a : market.agents) {
    if (!a.is_pacing()) continue;
    const auto k = static_cast<std::size_t>(a.id);
    const double rhs =
        a.rho * horizon + (a.initial_bid - final_bids[k]) / market.eta;
    const double budget = a.rho * horizon;
    out.push_back({{"agent", a.id},
                   {"spend", spent[k]},
                   {"identity_rhs", rhs},
                   {"budget", budget},
                   {"identity_ok",
                    std::abs(spent[k] - rhs) <= 1e-6 * std::max(1.0, horizon)},
                   {"within_budget", spent[k] <= budget + 1e-9}});
  }
  return out;
}

std::int64_t window_length(const AnalysisRequest& r, double eta) {
  return r.window > 0 ? r.window
                      : static_cast<std::int64_t>(std::ceil(1.0 / eta));
}

// Summary over all windows; the per-window stream is available from the CLI.
struct DiscrepancySummary {
  std::int64_t windows = 0;
  std::int64_t floor_violations = 0;
  double min_discrepancy = std::numeric_limits<double>::infinity();
  double max_discrepancy = -std::numeric_limits<double>::infinity();

  void add(const dynamics::WindowStats& w) {
    ++windows;
    if (!w.floor_holds) ++floor_violations;
    min_discrepancy = std::min(min_discrepancy, w.discrepancy);
    max_discrepancy = std::max(max_discrepancy, w.discrepancy);
  }
  json to_json(std::int64_t tau) const {
    return {{"window", tau},
            {"windows", windows},
            {"floor_violations", floor_violations},
            {"min_discrepancy", windows ? json(min_discrepancy) : json(nullptr)},
            {"max_discrepancy", windows ? json(max_discrepancy) : json(nullptr)}};
  }
};

json adversary_metrics(const MarketConfig& market) {
  if (market.num_agents() < 2 || !market.agents[0].is_pacing()) {
    throw InvalidInput("adversary analysis needs a pacing agent 0 and opponents");
  }
  adversary::AdversaryProblem p;
  p.rho_l = market.agents[0].rho;
  p.rho_o = 0.0;
  for (int i = 1; i < market.num_agents(); ++i) p.rho_o += market.agents[static_cast<std::size_t>(i)].rho;
  p.horizon = market.horizon;
  p.eta = market.eta;
  p.initial_bid = market.agents[0].initial_bid;
  json out = {{"instance", p},
              {"cap", adversary::win_cap(p.rho_l, p.rho_o, p.horizon, p.eta)}};
  if (p.horizon <= 20) {
    const adversary::WinSequence best = adversary::enumerate_optimal(p, 1);
    out["method"] = "enum";
    out["wins"] = best.wins;
    out["feasible_cost"] = best.cost;
  } else {
    const adversary::DpResult hi =
        adversary::dp_optimal(p, 256, 256, adversary::Rounding::kOptimistic);
    out["method"] = "dp";
    out["wins"] = hi.wins_bound;
    out["feasible_cost"] = nullptr;
  }
  if (p.horizon <= 16) {
    out["certificate_ok"] = adversary::verify_certificate_windows(p).violations == 0;
  } else {
    out["certificate_ok"] = nullptr;
  }
  return out;
}

template <class Fn>
void guarded(json& metrics, const char* key, Fn&& fn) {
  try {
    metrics[key] = fn();
  } catch (const std::exception& e) {
    metrics[key] = {{"error", e.what()}};
  }
}

void analyze_in_memory(const ExperimentConfig& point, const Trace& trace,
                       json& metrics) {
  for (const AnalysisRequest& r : point.analyses) {
    switch (r.kind) {
      case AnalysisRequest::Kind::kMilestones:
        guarded(metrics, "milestones",
                [&] { return json(dynamics::milestones(trace)); });
        break;
      case AnalysisRequest::Kind::kDiscrepancy:
        guarded(metrics, "discrepancy", [&] {
          const std::int64_t tau = window_length(r, point.market.eta);
          DiscrepancySummary summary;
          dynamics::for_each_window(trace, tau, r.stride, r.start,
                                    [&](const dynamics::WindowStats& w) {
                                      summary.add(w);
                                    });
          return summary.to_json(tau);
        });
        break;
      case AnalysisRequest::Kind::kRoundRobin:
        guarded(metrics, "round_robin",
                [&] { return json(dynamics::detect_round_robin(trace)); });
        break;
      case AnalysisRequest::Kind::kAdversary:
        guarded(metrics, "adversary", [&] { return adversary_metrics(point.market); });
        break;
    }
  }
}

// Single pass for long horizons: the trace goes straight to disk and only
// streaming analyses run.
void run_streaming(const ExperimentConfig& point,
                   const std::filesystem::path& csv, json& metrics) {
  std::ofstream out(csv);
  if (!out) throw IoError(fmt::format("cannot write {}", csv.string()));
  TraceCsvWriter writer(out, point.market.num_agents());
  const std::vector<double> rho = point.market.rhos();

  std::optional<dynamics::MilestoneScanner> milestones;
  std::optional<dynamics::WindowScanner> windows;
  DiscrepancySummary summary;
  std::int64_t tau = 0;
  for (const AnalysisRequest& r : point.analyses) {
    if (r.kind == AnalysisRequest::Kind::kMilestones) {
      guarded(metrics, "milestones", [&] {
        for (const AgentSpec& a : point.market.agents) {
          if (!a.is_pacing()) throw InvalidInput("milestones need self-play");
        }
        milestones.emplace(rho, point.market.eta, point.market.horizon);
        return json(nullptr);
      });
    } else if (r.kind == AnalysisRequest::Kind::kDiscrepancy) {
      tau = window_length(r, point.market.eta);
      windows.emplace(rho, point.market.eta, tau, r.stride, r.start,
                      [&](const dynamics::WindowStats& w) { summary.add(w); });
    } else if (r.kind == AnalysisRequest::Kind::kRoundRobin) {
      metrics["round_robin"] = {{"error", "round-robin detection needs an in-memory trace"}};
    } else {
      guarded(metrics, "adversary", [&] { return adversary_metrics(point.market); });
    }
  }

  std::vector<double> spent(rho.size(), 0.0);
  const std::vector<double> final_bids = simulate_streaming(
      point.market, [&](const RoundView& v) {
        writer.write_round(v.round, v.bids, v.winner, v.price);
        if (windows) windows->observe(v.bids, v.winner);
        for (std::size_t i = 0; i < spent.size(); ++i) spent[i] = v.states_after[i].spent;
        if (milestones) milestones->observe(v.bids);
      });
  if (windows) {
    windows->observe_final(final_bids);
    metrics["discrepancy"] = summary.to_json(tau);
  }
  if (milestones) {
    milestones->observe(final_bids);
    metrics["milestones"] = milestones->finish();
  }
  out.close();
  if (!out) throw IoError(fmt::format("failed writing {}", csv.string()));
  save_trace_meta(csv, point.market, final_bids);
  metrics["budget"] = budget_metrics(point.market, spent, final_bids);
}

}  // namespace

RunRecord run_point(const ExperimentConfig& point) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.config_hash = config_hash(point);
  try {
    const std::filesystem::path dir =
        experiment_dir(point) / record.config_hash.substr(0, 16);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    }
    record.trace_path = dir / "trace.csv";
    if (point.market.horizon > point.stream_above) {
      run_streaming(point, record.trace_path, record.metrics);
    } else {
      const Trace trace = simulate(point.market);
      save_trace(record.trace_path, trace);
      std::vector<double> spent(static_cast<std::size_t>(trace.num_agents()), 0.0);
      for (std::int64_t t = 1; t <= trace.num_rounds(); ++t) {
        spent[static_cast<std::size_t>(trace.winner(t))] += trace.price(t);
      }
      record.metrics["budget"] =
          budget_metrics(point.market, spent, trace.final_bids());
      analyze_in_memory(point, trace, record.metrics);
    }
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  record.wall_time_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  return record;
}

int workers_from_env() {
  if (const char* env = std::getenv("PACING_DYN_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<RunRecord> run(const ExperimentConfig& config, int workers) {
  const std::vector<ExperimentConfig> points = expand_sweep(config);
  std::vector<RunRecord> records(points.size());
  const int pool_size = std::max(
      1, std::min(workers > 0 ? workers : workers_from_env(),
                  static_cast<int>(points.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      records[k] = run_point(points[k]);
    }
  };
  if (pool_size == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < pool_size; ++w) pool.emplace_back(work);
  }

  const std::filesystem::path dir = experiment_dir(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path metrics_path = dir / "metrics.jsonl";
  std::ofstream out(metrics_path);
  if (!out) throw IoError(fmt::format("cannot write {}", metrics_path.string()));
  for (const RunRecord& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError(fmt::format("failed writing {}", metrics_path.string()));
  return records;
}

}  // namespace pacing_dyn::experiment
