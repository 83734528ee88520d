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

#include "pacing_dyn/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "pacing_dyn/adversary_lab.hpp"
#include "pacing_dyn/analysis_json.hpp"
#include "pacing_dyn/dynamics_analyzer.hpp"
#include "pacing_dyn/errors.hpp"
#include "pacing_dyn/experiment.hpp"

namespace pacing_dyn::reproduce {
namespace {

using nlohmann::json;
namespace adv = pacing_dyn::adversary;
namespace dyn = pacing_dyn::dynamics;

// Pinned tolerances and limits.
constexpr double kIdentityTolerancePerRound = 1e-6;
constexpr double kBudgetSlack = 1e-9;
constexpr double kCertificateTolerance = 1e-9;
constexpr double kStepTolerance = 1e-9;
constexpr double kDiscrepancySlack = 1e-9;
constexpr std::int64_t kMaxBracketWidth = 2;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> random_shares(std::mt19937_64& rng, int n, double floor) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& v : w) total += (v = uniform(rng, 0.05, 1.0));
  for (double& v : w) v = floor / n + (1.0 - floor) * v / total;
  return w;
}

std::vector<adv::AdversaryProblem> cap_grid() {
  std::vector<adv::AdversaryProblem> out;
  for (std::int64_t t = 4; t <= 20; ++t) {
    for (int k = 1; k <= 9; ++k) {
      const double rho_o = k / 10.0;
      out.push_back(adv::AdversaryProblem::standard_instance(1.0 - rho_o, rho_o, t));
    }
  }
  return out;
}

const std::vector<Trace>& self_play_traces() {
  static const std::vector<Trace> traces = [] {
    std::vector<Trace> out;
    for (const MarketConfig& c : self_play_configs()) out.push_back(simulate(c));
    return out;
  }();
  return traces;
}

const Trace& band_trace() {
  static const Trace trace = simulate(band_config());
  return trace;
}

Verdict make_verdict(std::string suite, int criterion, std::string title) {
  Verdict v;
  v.suite = std::move(suite);
  v.criterion = criterion;
  v.title = std::move(title);
  return v;
}

Verdict finish(Verdict v, double measured, double bound, bool pass,
               std::chrono::steady_clock::time_point started,
               bool larger_is_better = false) {
  v.measured = measured;
  v.bound = bound;
  v.margin = larger_is_better ? measured - bound : bound - measured;
  v.runtime_s = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - started)
                    .count();
  v.pass = pass && (!v.runtime_limit_s || v.runtime_s < *v.runtime_limit_s);
  return v;
}

Verdict budget_identity() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("budget-identity", 1, "payment identity and budget feasibility");
  v.runtime_limit_s = 5.0;
  double worst_identity = 0.0;  // |lhs - rhs| / T
  double worst_overspend = -std::numeric_limits<double>::infinity();
  std::int64_t agents_checked = 0;
  for (const MarketConfig& c : budget_identity_configs()) {
    const Trace trace = simulate(c);
    for (const AgentSpec& a : c.agents) {
      if (!a.is_pacing()) continue;
      const PaymentIdentity id = payment_identity(trace, a.id);
      worst_identity = std::max(
          worst_identity,
          std::abs(id.lhs - id.rhs) / static_cast<double>(c.horizon));
      worst_overspend = std::max(worst_overspend, id.lhs - c.budget(a.id));
      ++agents_checked;
    }
  }
  v.details = {{"configs", budget_identity_configs().size()},
               {"pacing_agents", agents_checked},
               {"max_overspend", worst_overspend},
               {"overspend_bound", kBudgetSlack}};
  return finish(v, worst_identity, kIdentityTolerancePerRound,
                worst_identity <= kIdentityTolerancePerRound &&
                    worst_overspend <= kBudgetSlack,
                started);
}

Verdict adversary_cap() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("adversary-cap", 2, "optimizer wins stay under the win cap");
  v.runtime_limit_s = 120.0;
  double worst = -std::numeric_limits<double>::infinity();  // wins - cap
  std::int64_t violations = 0;
  json tightest;
  const int workers = experiment::workers_from_env();
  for (const adv::AdversaryProblem& p : cap_grid()) {
    const adv::WinSequence best = adv::enumerate_optimal(p, workers);
    const double cap = adv::win_cap(p.rho_l, p.rho_o, p.horizon, p.eta);
    const double gap = static_cast<double>(best.wins) - cap;
    if (gap > 0.0) ++violations;
    if (gap > worst) {
      worst = gap;
      tightest = {{"instance", p}, {"wins", best.wins}, {"cap", cap}};
    }
  }
  v.details = {{"instances", cap_grid().size()},
               {"violations", violations},
               {"tightest", tightest}};
  return finish(v, worst, 0.0, violations == 0, started);
}

Verdict lagrangian_cert() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("lagrangian-cert", 3, "windowed Lagrangian bound on every sequence");
  v.runtime_limit_s = 300.0;
  std::int64_t violations = 0;
  std::int64_t windows = 0;
  std::int64_t instances = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (double eta : {0.1, 0.25, 0.5}) {
    for (int k = 1; k <= 9; ++k) {
      const double rho_o = k / 10.0;
      for (std::int64_t t = 1; t <= 16; ++t) {
        const adv::AdversaryProblem p{1.0 - rho_o, rho_o, t, eta, 1.0 - rho_o};
        const adv::CertificateCheck check =
            adv::verify_certificate_windows(p, kCertificateTolerance);
        violations += check.violations;
        windows += check.windows;
        min_slack = std::min(min_slack, check.min_slack);
        ++instances;
      }
    }
  }
  v.details = {{"instances", instances},
               {"windows", windows},
               {"min_slack", min_slack},
               {"tolerance", kCertificateTolerance}};
  return finish(v, static_cast<double>(violations), 0.0, violations == 0,
                started);
}

Verdict reduction() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("reduction", 4, "bid matching keeps wins at lower cost");
  constexpr int kSamples = 1000;
  constexpr std::int64_t kHorizon = 12;
  std::int64_t violations = 0;
  std::int64_t runs = 0;
  for (int s = 0; s < kSamples; ++s) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(s) + 4000);
    adv::LearnerSpec learner;
    learner.rho = uniform(rng, 0.2, 0.8);
    learner.initial_bid = learner.rho * uniform(rng, 0.5, 1.0);
    learner.eta = uniform(rng, 0.05, 0.5);
    std::vector<double> bids(static_cast<std::size_t>(kHorizon));
    for (double& b : bids) b = uniform(rng, 0.0, 1.5);
    for (AuctionFormat format :
         {AuctionFormat::kFirstPrice, AuctionFormat::kSecondPrice}) {
      if (!adv::match_bids_reduction(learner, bids, format).holds()) ++violations;
      ++runs;
    }
  }
  v.details = {{"runs", runs}, {"violations", violations}};
  return finish(v, static_cast<double>(violations), 0.0, violations == 0,
                started);
}

Verdict subgradient_step() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("subgradient-step", 5, "self-play update equals a subgradient step");
  std::int64_t violations = 0;
  for (const Trace& trace : self_play_traces()) {
    violations += static_cast<std::int64_t>(
        dyn::verify_subgradient_step(trace, kStepTolerance).size());
  }
  v.details = {{"traces", self_play_traces().size()},
               {"tolerance", kStepTolerance}};
  return finish(v, static_cast<double>(violations), 0.0, violations == 0,
                started);
}

Verdict descent() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("descent", 6, "per-round distance inequalities");
  std::int64_t descent_violations = 0;
  std::int64_t avg_violations = 0;
  std::int64_t rounds = 0;
  std::int64_t avg_rounds = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (const Trace& trace : self_play_traces()) {
    const double rho_min = dyn::rho_min(trace.config().rhos());
    const double eta = trace.config().eta;
    const double d = dyn::default_first_pass_d(rho_min, eta);
    for (std::int64_t t = 1; t <= trace.num_rounds(); ++t) {
      const auto b = trace.bids(t);
      const auto next = trace.bids(t + 1);
      const dyn::InequalityCheck step = dyn::descent_inequality(b, next, rho_min, eta);
      ++rounds;
      worst_excess = std::max(worst_excess, step.lhs - step.rhs);
      if (!step.holds()) ++descent_violations;
      const dyn::AvgCheck avg = dyn::avg_inequality(b, next, rho_min, eta, d);
      if (const auto* check = std::get_if<dyn::InequalityCheck>(&avg)) {
        ++avg_rounds;
        worst_excess = std::max(worst_excess, check->lhs - check->rhs);
        if (!check->holds()) ++avg_violations;
      }
    }
  }
  v.details = {{"rounds", rounds},
               {"descent_violations", descent_violations},
               {"avg_rounds_with_hypothesis", avg_rounds},
               {"avg_violations", avg_violations},
               {"max_lhs_minus_rhs", worst_excess}};
  const std::int64_t total = descent_violations + avg_violations;
  return finish(v, static_cast<double>(total), 0.0,
                total == 0 && avg_rounds > 0, started);
}

Verdict milestones() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("milestones", 7, "bids stay in the 1 +- O(eta) band after warm-up");
  v.runtime_limit_s = 30.0;
  const dyn::ConvergenceMilestones m = dyn::milestones(band_trace());
  const double excess = std::max(m.band.lo - m.band_min_bid,
                                 m.band_max_bid - m.band.hi);
  v.details = m;
  return finish(v, excess, 0.0, m.band_holds, started);
}

Verdict discrepancy() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("discrepancy", 8, "window wins after warm-up and the realized floor");
  const Trace& trace = band_trace();
  const MarketConfig& c = trace.config();
  const double eta = c.eta;
  const double rho_min = dyn::rho_min(c.rhos());
  const auto tau = static_cast<std::int64_t>(std::ceil(1.0 / eta));
  const std::int64_t warmup = dyn::band_warmup(rho_min, eta);

  double worst_gap = std::numeric_limits<double>::infinity();
  std::int64_t bound_windows = 0;
  dyn::for_each_window(trace, tau, 1, warmup, [&](const dyn::WindowStats& w) {
    const double rho = c.agents[static_cast<std::size_t>(w.agent)].rho;
    const double t = static_cast<double>(tau);
    const double lower =
        rho * t - 6.0 * rho * t * eta / rho_min - 18.0 / rho_min;
    worst_gap = std::min(worst_gap, static_cast<double>(w.wins) - lower);
    ++bound_windows;
  });

  std::int64_t floor_windows = 0;
  std::int64_t floor_violations = 0;
  auto scan = [&](const Trace& tr, std::int64_t length) {
    dyn::for_each_window(tr, length, 1, 1, [&](const dyn::WindowStats& w) {
      if (!tr.config().agents[static_cast<std::size_t>(w.agent)].is_pacing()) return;
      ++floor_windows;
      if (static_cast<double>(w.wins) < w.guaranteed_floor - kDiscrepancySlack) {
        ++floor_violations;
      }
    });
  };
  scan(trace, tau);
  for (const Trace& tr : self_play_traces()) {
    for (std::int64_t length :
         {std::int64_t{1}, std::int64_t{10}, std::int64_t{100},
          static_cast<std::int64_t>(std::ceil(1.0 / tr.config().eta))}) {
      if (length <= tr.num_rounds()) scan(tr, length);
    }
  }
  for (const MarketConfig& cfg : budget_identity_configs()) {
    const Trace tr = simulate(cfg);
    for (std::int64_t length : {std::int64_t{1}, std::int64_t{7}, std::int64_t{50}}) {
      if (length <= tr.num_rounds()) scan(tr, length);
    }
  }

  v.details = {{"window", tau},
               {"warmup", warmup},
               {"bound_windows", bound_windows},
               {"floor_windows", floor_windows},
               {"floor_violations", floor_violations}};
  return finish(v, worst_gap, 0.0,
                bound_windows > 0 && worst_gap >= -kDiscrepancySlack &&
                    floor_violations == 0,
                started, true);
}

Verdict round_robin() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("round-robin", 9, "winners cycle within the schedule");
  v.runtime_limit_s = 5.0;
  double worst_ratio = 0.0;  // period_start / schedule
  bool ok = true;
  json runs = json::array();
  for (const MarketConfig& c : round_robin_configs()) {
    const Trace trace = simulate(c);
    const dyn::RoundRobinReport r = dyn::detect_round_robin(trace);
    const double n = static_cast<double>(c.num_agents());
    const bool discrepancy_ok = r.max_discrepancy <= (n - 1.0) / n + 1e-9;
    const bool ordered = !r.period_start || !r.holds_from ||
                         *r.period_start <= *r.holds_from;
    const bool run_ok = r.hypothesis && r.within_schedule() && discrepancy_ok &&
                        ordered && dyn::sum_bound_check(trace);
    ok = ok && run_ok;
    if (r.period_start) {
      worst_ratio = std::max(worst_ratio,
                             static_cast<double>(*r.period_start) / r.schedule);
    } else {
      worst_ratio = std::numeric_limits<double>::infinity();
    }
    json entry = r;
    entry["n"] = c.num_agents();
    entry["eta"] = c.eta;
    entry["T"] = c.horizon;
    runs.push_back(std::move(entry));
  }
  v.details = {{"runs", runs}};
  return finish(v, worst_ratio, 1.0, ok, started);
}

Verdict dp_bracket() {
  const auto started = std::chrono::steady_clock::now();
  Verdict v = make_verdict("dp-bracket", 10, "dp bounds bracket the exact optimum");
  std::int64_t bracket_violations = 0;
  std::int64_t max_width = 0;
  const int workers = experiment::workers_from_env();
  for (const adv::AdversaryProblem& p : cap_grid()) {
    const std::int64_t exact = adv::enumerate_optimal(p, workers).wins;
    const auto lo = adv::dp_optimal(p, 256, 256, adv::Rounding::kPessimistic);
    const auto hi = adv::dp_optimal(p, 256, 256, adv::Rounding::kOptimistic);
    if (lo.wins_bound > exact || hi.wins_bound < exact) ++bracket_violations;
    const auto lo_fine = adv::dp_optimal(p, 1024, 1024, adv::Rounding::kPessimistic);
    const auto hi_fine = adv::dp_optimal(p, 1024, 1024, adv::Rounding::kOptimistic);
    if (lo_fine.wins_bound > exact || hi_fine.wins_bound < exact) {
      ++bracket_violations;
    }
    max_width = std::max(max_width, hi_fine.wins_bound - lo_fine.wins_bound);
  }
  v.details = {{"instances", cap_grid().size()},
               {"bracket_violations", bracket_violations}};
  return finish(v, static_cast<double>(max_width),
                static_cast<double>(kMaxBracketWidth),
                bracket_violations == 0 && max_width <= kMaxBracketWidth,
                started);
}

using SuiteFn = Verdict (*)();

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"budget-identity", budget_identity}, {"adversary-cap", adversary_cap},
      {"lagrangian-cert", lagrangian_cert}, {"reduction", reduction},
      {"subgradient-step", subgradient_step}, {"descent", descent},
      {"milestones", milestones},           {"discrepancy", discrepancy},
      {"round-robin", round_robin},         {"dp-bracket", dp_bracket}};
  return suites;
}

}  // namespace

json to_json(const Verdict& v) {
  json j = {{"suite", v.suite},
            {"criterion", v.criterion},
            {"title", v.title},
            {"pass", v.pass},
            {"measured", v.measured},
            {"bound", v.bound},
            {"margin", v.margin},
            {"runtime_s", v.runtime_s},
            {"details", v.details}};
  if (v.runtime_limit_s) j["runtime_limit_s"] = *v.runtime_limit_s;
  // JSON has no infinities.
  for (const char* key : {"measured", "margin"}) {
    if (!std::isfinite(j[key].get<double>())) j[key] = nullptr;
  }
  return j;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

bool is_suite(std::string_view name) {
  return std::find(suite_names().begin(), suite_names().end(), name) !=
         suite_names().end();
}

Verdict run_suite(std::string_view name) {
  for (const auto& [suite, fn] : registry()) {
    if (suite == name) return fn();
  }
  throw InvalidInput(fmt::format("unknown suite '{}'", name));
}

std::vector<MarketConfig> budget_identity_configs() {
  std::vector<MarketConfig> out;
  constexpr int kConfigs = 200;
  const int sizes[] = {1, 2, 3, 5};
  for (int s = 0; s < kConfigs; ++s) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(s) + 1000);
    const int n = sizes[s % 4];
    MarketConfig c;
    c.horizon = std::uniform_int_distribution<std::int64_t>(50, 2000)(rng);
    c.eta = uniform(rng, 0.01, 0.5);
    c.format = (s / 4) % 2 == 0 ? AuctionFormat::kFirstPrice
                                : AuctionFormat::kSecondPrice;
    c.tie_break = tie_break::SeededRandom{static_cast<std::uint64_t>(s)};
    const std::vector<double> rho = random_shares(rng, n, 0.2);
    for (int i = 0; i < n; ++i) {
      const double share = rho[static_cast<std::size_t>(i)];
      AgentSpec a{i, share, share * uniform(rng, 0.0, 1.0), policy::PrimalPacing{}};
      const int kind = i == 0 ? 0 : static_cast<int>(rng() % 4);
      std::vector<double> script(static_cast<std::size_t>(c.horizon));
      switch (kind) {
        case 1:  // Random bids.
          for (double& b : script) b = uniform(rng, 0.0, 2.0);
          break;
        case 2:  // Overbid every round.
          std::fill(script.begin(), script.end(), 1.5);
          break;
        case 3:  // Bursts: idle, then bid high.
          for (std::size_t t = 0; t < script.size(); ++t) {
            script[t] = (t / 25) % 2 == 0 ? 0.0 : 3.0;
          }
          break;
        default:
          break;
      }
      if (kind != 0) {
        a.initial_bid = 0.0;
        a.policy = policy::Scripted{std::move(script)};
      }
      c.agents.push_back(std::move(a));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<MarketConfig> self_play_configs() {
  std::vector<MarketConfig> out;
  constexpr int kConfigs = 100;
  const int sizes[] = {2, 3, 5};
  for (int s = 0; s < kConfigs; ++s) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(s) + 2000);
    const int n = sizes[s % 3];
    MarketConfig c;
    c.horizon = 10000;
    // Half of each share is uniform so rho_min >= 0.5 / n.
    const std::vector<double> rho = random_shares(rng, n, 0.5);
    c.eta = 0.02 * *std::min_element(rho.begin(), rho.end());
    for (int i = 0; i < n; ++i) {
      const double share = rho[static_cast<std::size_t>(i)];
      c.agents.push_back(AgentSpec{i, share, share * uniform(rng, 0.5, 1.0),
                                   policy::PrimalPacing{}});
    }
    out.push_back(std::move(c));
  }
  return out;
}

MarketConfig band_config() {
  MarketConfig c;
  c.agents = {AgentSpec{0, 0.5, 0.5, policy::PrimalPacing{}},
              AgentSpec{1, 0.5, 0.5, policy::PrimalPacing{}}};
  c.horizon = 6'000'000;
  c.eta = 4e-5;
  return c;
}

std::vector<MarketConfig> round_robin_configs() {
  std::vector<MarketConfig> out;
  for (int n : {2, 3, 5}) {
    for (double eta : {0.01, 0.05}) {
      MarketConfig c;
      c.eta = eta;
      const double nd = static_cast<double>(n);
      const double schedule = nd * nd / (2.0 * eta) * std::log(1.0 / eta) + nd + 1.0;
      c.horizon = 2 * static_cast<std::int64_t>(std::ceil(schedule));
      for (int i = 0; i < n; ++i) {
        // Distinct entries at or below 1/n.
        const double bid = (1.0 / nd) * (1.0 - 0.3 * i / nd);
        c.agents.push_back(AgentSpec{i, 1.0 / nd, bid, policy::PrimalPacing{}});
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace pacing_dyn::reproduce
