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

#include "pacing_dyn/dynamics_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "pacing_dyn/errors.hpp"

namespace pacing_dyn::dynamics {
namespace {

void require_self_play(const Trace& trace) {
  for (const AgentSpec& agent : trace.config().agents) {
    if (!agent.is_pacing()) {
      throw InvalidInput(
          fmt::format("agent {} does not run the pacing update", agent.id));
    }
  }
}

double squared(double x) { return x * x; }

double log_inv(double eta) { return std::log(1.0 / eta); }

void check_round(const Trace& trace, std::int64_t t) {
  if (t < 1 || t > trace.num_rounds()) {
    throw InvalidInput(fmt::format("round {} outside [1, {}]", t,
                                   trace.num_rounds()));
  }
}

}  // namespace

double rho_min(std::span<const double> rho) {
  if (rho.empty()) throw InvalidInput("empty budget vector");
  return *std::min_element(rho.begin(), rho.end());
}

double dist_one(std::span<const double> b) {
  double acc = 0.0;
  for (double v : b) acc += squared(v - 1.0);
  return std::sqrt(acc);
}

double dist_avg(std::span<const double> b) {
  if (b.empty()) return 0.0;
  const double avg =
      std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  double acc = 0.0;
  for (double v : b) acc += squared(v - avg);
  return std::sqrt(acc);
}

PotentialState potential(std::span<const double> b, std::span<const double> rho,
                         std::optional<int> maximizer) {
  if (b.empty() || b.size() != rho.size()) {
    throw InvalidInput(fmt::format("bid and budget vectors differ: {} vs {}",
                                   b.size(), rho.size()));
  }
  for (double v : b) {
    if (!(v >= 0.0)) throw InvalidInput("bids must be non-negative");
  }
  const double rho_sum = std::accumulate(rho.begin(), rho.end(), 0.0);
  if (std::abs(rho_sum - 1.0) > 1e-12) {
    throw InvalidInput(fmt::format("budget shares sum to {}, not 1", rho_sum));
  }

  PotentialState s;
  s.b.assign(b.begin(), b.end());
  s.rho.assign(rho.begin(), rho.end());
  const auto top = std::max_element(b.begin(), b.end());
  s.b_max = *top;
  s.b_min = *std::min_element(b.begin(), b.end());
  s.b_avg = std::accumulate(b.begin(), b.end(), 0.0) /
            static_cast<double>(b.size());
  s.maximizer = static_cast<int>(top - b.begin());
  if (maximizer) {
    if (*maximizer < 0 || *maximizer >= static_cast<int>(b.size())) {
      throw InvalidInput("maximizer index out of range");
    }
    if (b[static_cast<std::size_t>(*maximizer)] < s.b_max - kTieTolerance) {
      throw InvalidInput("designated maximizer does not hold the top bid");
    }
    s.maximizer = *maximizer;
  }

  double dot = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) dot += rho[i] * b[i];
  s.f_value = 0.5 * s.b_max * s.b_max - dot + 0.5;
  s.subgrad.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) s.subgrad[i] = -rho[i];
  s.subgrad[static_cast<std::size_t>(s.maximizer)] += s.b_max;
  s.dist_one = dist_one(b);
  s.dist_avg = dist_avg(b);
  return s;
}

void require_first_price_self_play(const Trace& trace) {
  require_self_play(trace);
  if (trace.config().format != AuctionFormat::kFirstPrice) {
    throw InvalidInput("subgradient form needs a first-price trace");
  }
}

std::vector<StepViolation> verify_subgradient_step(const Trace& trace,
                                                   double tolerance) {
  require_first_price_self_play(trace);
  const std::vector<double> rho = trace.config().rhos();
  const double eta = trace.config().eta;
  std::vector<StepViolation> out;
  for (std::int64_t t = 1; t <= trace.num_rounds(); ++t) {
    const auto b = trace.bids(t);
    const auto next = trace.bids(t + 1);
    const double b_max = *std::max_element(b.begin(), b.end());
    const int w = trace.winner(t);
    for (int i = 0; i < trace.num_agents(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double g = (i == w ? b_max : 0.0) - rho[k];
      const double expected = b[k] - eta * g;
      if (std::abs(expected - next[k]) > tolerance) {
        out.push_back({t, i, expected, next[k]});
      }
    }
  }
  return out;
}

InequalityCheck descent_inequality(std::span<const double> b,
                                   std::span<const double> b_next,
                                   double rho_min, double eta) {
  return {squared(dist_one(b_next)),
          (1.0 - eta * rho_min + 2.0 * eta * eta) * squared(dist_one(b)) +
              3.0 * eta * eta};
}

AvgCheck avg_inequality(std::span<const double> b,
                        std::span<const double> b_next, double rho_min,
                        double eta, double d) {
  const double radius = d * std::sqrt(eta);
  const double d1 = dist_one(b);
  if (d1 > radius ||
      radius > std::sqrt(1.0 / (2.0 * static_cast<double>(b.size())))) {
    return HypothesisNotMet{d1, radius};
  }
  const double da = dist_avg(b);
  return InequalityCheck{
      squared(dist_avg(b_next)),
      da * da - 2.0 * rho_min * eta * da + 4.0 * eta * eta * (d * d + 1.0)};
}

InequalityCheck check_descent_inequality(const Trace& trace, std::int64_t t) {
  require_self_play(trace);
  check_round(trace, t);
  return descent_inequality(trace.bids(t), trace.bids(t + 1),
                            rho_min(trace.config().rhos()), trace.config().eta);
}

AvgCheck check_avg_inequality(const Trace& trace, std::int64_t t, double d) {
  require_self_play(trace);
  check_round(trace, t);
  return avg_inequality(trace.bids(t), trace.bids(t + 1),
                        rho_min(trace.config().rhos()), trace.config().eta, d);
}

MilestoneBand band_for(double a, double eta) {
  return {1.0 - 2.0 * a * eta - eta * eta, 1.0 + a * eta + 2.0 * eta * eta * eta};
}

bool ConvergenceMilestones::within_schedule() const {
  auto on_time = [](const std::optional<std::int64_t>& t, double sched) {
    return t && static_cast<double>(*t) <= sched;
  };
  return on_time(t_sqrt_eta, sched_sqrt_eta) && on_time(t_avg, sched_avg) &&
         on_time(t_one, sched_one) &&
         on_time(t_avg_refined, sched_avg_refined) &&
         on_time(t_one_refined, sched_one_refined) && band_holds;
}

double default_first_pass_d(double rho_min, double eta) {
  return std::sqrt(15.0 / (4.0 * rho_min) + eta);
}

double default_second_pass_d(double rho_min, double eta) {
  return std::sqrt(667.0 * eta) / rho_min;
}

std::int64_t band_warmup(double rho_min, double eta) {
  return static_cast<std::int64_t>(
      std::ceil(11.0 / (eta * rho_min) * log_inv(eta)));
}

MilestoneScanner::MilestoneScanner(std::vector<double> rho, double eta,
                                   std::int64_t horizon,
                                   std::optional<double> d)
    : rho_(std::move(rho)), eta_(eta), horizon_(horizon) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0,1)");
  rho_min_ = rho_min(rho_);
  if (!(rho_min_ > 0.0)) throw InvalidInput("budget shares must be positive");
  const double n = static_cast<double>(rho_.size());
  const double log_term = log_inv(eta);

  out_.d = d.value_or(default_first_pass_d(rho_min_, eta));
  out_.a = 3.0 * (out_.d * out_.d + 1.0) / rho_min_;
  out_.t0 = 1;
  out_.sched_sqrt_eta =
      static_cast<double>(out_.t0) + 15.0 / (4.0 * eta * rho_min_) * log_term;
  out_.sched_avg = out_.sched_sqrt_eta + 1.0 + 1.0 / (2.0 * eta);
  out_.sched_one = out_.sched_avg + 3.0 * (n / eta) * log_term;

  out_.d_refined = default_second_pass_d(rho_min_, eta);
  out_.a_refined = 3.0 * (out_.d_refined * out_.d_refined + 1.0) / rho_min_;
  out_.sched_avg_refined = out_.sched_one + 1.0 + 2.0 / eta;
  out_.sched_one_refined = out_.sched_avg_refined + 3.0 * (n / eta) * log_term;

  out_.band_start = band_warmup(rho_min_, eta);
  out_.band = {1.0 - 12.0 * eta / rho_min_ - eta * eta,
               1.0 + 6.0 * eta / rho_min_ + 2.0 * eta * eta * eta};
  out_.band_min_bid = std::numeric_limits<double>::infinity();
  out_.band_max_bid = -std::numeric_limits<double>::infinity();
  out_.eta_hypothesis = eta <= std::pow(rho_min_, 5) / 667.0;
  if (horizon_ + 1 < out_.band_start) {
    throw ScheduleExceedsHorizon(fmt::format(
        "band warm-up needs {} rounds, trace has {}", out_.band_start,
        horizon_ + 1));
  }
  first_band_ = band_for(out_.a, eta);
  refined_band_ = band_for(out_.a_refined, eta);
}

void MilestoneScanner::observe(std::span<const double> bids) {
  if (bids.size() != rho_.size()) throw InvalidInput("bid vector size");
  ++t_;
  const double d1 = dist_one(bids);
  if (t_ == out_.t0) {
    sqrt_target_ = 15.0 * eta_ / (4.0 * rho_min_) +
                   eta_ * eta_ * eta_ * d1 * d1;
  }
  const auto [lo, hi] = std::minmax_element(bids.begin(), bids.end());
  auto inside = [&](const MilestoneBand& band) {
    return *lo >= band.lo && *hi <= band.hi;
  };
  const double da = dist_avg(bids);

  if (!out_.t_sqrt_eta && d1 * d1 <= sqrt_target_) out_.t_sqrt_eta = t_;
  if (out_.t_sqrt_eta && !out_.t_avg && da <= out_.a * eta_) out_.t_avg = t_;
  if (out_.t_avg && !out_.t_one && inside(first_band_)) out_.t_one = t_;
  if (out_.t_one && !out_.t_avg_refined && da <= out_.a_refined * eta_) {
    out_.t_avg_refined = t_;
  }
  if (out_.t_avg_refined && !out_.t_one_refined && inside(refined_band_)) {
    out_.t_one_refined = t_;
  }
  if (t_ >= out_.band_start) {
    out_.band_min_bid = std::min(out_.band_min_bid, *lo);
    out_.band_max_bid = std::max(out_.band_max_bid, *hi);
  }
}

ConvergenceMilestones MilestoneScanner::finish() const {
  if (t_ != horizon_ + 1) {
    throw InvalidInput(fmt::format("scanner saw {} bid vectors, expected {}",
                                   t_, horizon_ + 1));
  }
  ConvergenceMilestones out = out_;
  out.band_holds = out.band_min_bid >= out.band.lo &&
                   out.band_max_bid <= out.band.hi;
  return out;
}

ConvergenceMilestones milestones(const Trace& trace, std::optional<double> d) {
  require_self_play(trace);
  MilestoneScanner scanner(trace.config().rhos(), trace.config().eta,
                           trace.num_rounds(), d);
  for (std::int64_t t = 1; t <= trace.num_rounds() + 1; ++t) {
    scanner.observe(trace.bids(t));
  }
  return scanner.finish();
}

double wins_floor(double m, double big_m, double rho, std::int64_t tau,
                  double eta) {
  if (m > big_m) {
    throw InvalidInput(fmt::format("bid range inverted: m={} > M={}", m, big_m));
  }
  if (!(m >= 0.0) || !(big_m > 0.0)) {
    throw InvalidInput("bid range must satisfy 0 <= m <= M, M > 0");
  }
  if (tau < 0) throw InvalidInput("window length must be non-negative");
  if (!(eta > 0.0)) throw InvalidInput("eta must be positive");
  return rho * static_cast<double>(tau) / big_m - (big_m - m) / (eta * big_m);
}

namespace {

WindowStats make_window(int agent, std::int64_t t1, std::int64_t tau,
                        std::int64_t wins, double m, double big_m, double rho,
                        double eta) {
  WindowStats w;
  w.agent = agent;
  w.start = t1;
  w.length = tau;
  w.wins = wins;
  w.discrepancy = static_cast<double>(wins) - rho * static_cast<double>(tau);
  w.m = m;
  w.big_m = big_m;
  w.guaranteed_floor = big_m > 0.0 ? wins_floor(m, big_m, rho, tau, eta)
                                   : -std::numeric_limits<double>::infinity();
  w.floor_holds = static_cast<double>(wins) >= w.guaranteed_floor - 1e-9;
  return w;
}

}  // namespace

WindowStats window_discrepancy(const Trace& trace, int agent, std::int64_t t1,
                               std::int64_t tau) {
  if (agent < 0 || agent >= trace.num_agents()) {
    throw InvalidInput(fmt::format("agent {} out of range", agent));
  }
  if (t1 < 1 || tau < 0 || t1 + tau > trace.num_rounds() + 1) {
    throw InvalidInput(fmt::format("window [{}, {}) outside trace of {} rounds",
                                   t1, t1 + tau, trace.num_rounds()));
  }
  if (!trace.config().agents[static_cast<std::size_t>(agent)].is_pacing()) {
    throw InvalidInput("window floor needs a pacing agent");
  }
  std::int64_t wins = 0;
  for (std::int64_t t = t1; t < t1 + tau; ++t) wins += trace.winner(t) == agent;
  double m = std::numeric_limits<double>::infinity();
  double big_m = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = t1; t <= t1 + tau; ++t) {
    m = std::min(m, trace.bid(t, agent));
    big_m = std::max(big_m, trace.bid(t, agent));
  }
  return make_window(agent, t1, tau, wins, m, big_m,
                     trace.config().agents[static_cast<std::size_t>(agent)].rho,
                     trace.config().eta);
}

WindowScanner::WindowScanner(std::vector<double> rho, double eta,
                             std::int64_t tau, std::int64_t stride,
                             std::int64_t first_start, Sink sink)
    : rho_(std::move(rho)),
      eta_(eta),
      tau_(tau),
      stride_(stride),
      first_start_(first_start),
      sink_(std::move(sink)),
      extremes_(rho_.size()),
      win_prefix_(rho_.size(),
                  std::vector<std::int64_t>(static_cast<std::size_t>(tau + 1), 0)) {
  if (tau < 0 || stride < 1 || first_start < 1) {
    throw InvalidInput("window scan needs tau >= 0, stride >= 1, start >= 1");
  }
}

void WindowScanner::push_bids(std::span<const double> bids) {
  if (bids.size() != rho_.size()) throw InvalidInput("bid vector size");
  ++t_;
  const std::int64_t s = t_ - tau_;
  const auto ring = static_cast<std::size_t>(tau_ + 1);
  const bool emit = s >= first_start_ && (s - first_start_) % stride_ == 0;
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    auto& e = extremes_[i];
    while (!e.lo.empty() && e.lo.back().second >= bids[i]) e.lo.pop_back();
    while (!e.hi.empty() && e.hi.back().second <= bids[i]) e.hi.pop_back();
    e.lo.emplace_back(t_, bids[i]);
    e.hi.emplace_back(t_, bids[i]);
    while (e.lo.front().first < s) e.lo.pop_front();
    while (e.hi.front().first < s) e.hi.pop_front();
    if (emit) {
      // Prefix counts: slot k % ring holds wins over rounds 1..k.
      const auto& prefix = win_prefix_[i];
      const std::int64_t wins =
          prefix[static_cast<std::size_t>(t_ - 1) % ring] -
          prefix[static_cast<std::size_t>(s - 1) % ring];
      sink_(make_window(static_cast<int>(i), s, tau_, wins,
                        e.lo.front().second, e.hi.front().second, rho_[i],
                        eta_));
    }
  }
}

void WindowScanner::observe(std::span<const double> bids, int winner) {
  push_bids(bids);
  const auto ring = static_cast<std::size_t>(tau_ + 1);
  const auto now = static_cast<std::size_t>(t_);
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    auto& prefix = win_prefix_[i];
    prefix[now % ring] =
        prefix[(now - 1) % ring] + (static_cast<int>(i) == winner ? 1 : 0);
  }
}

void WindowScanner::observe_final(std::span<const double> bids) {
  push_bids(bids);
}

void for_each_window(const Trace& trace, std::int64_t tau, std::int64_t stride,
                     std::int64_t first_start,
                     const std::function<void(const WindowStats&)>& fn) {
  WindowScanner scanner(trace.config().rhos(), trace.config().eta, tau, stride,
                        first_start, fn);
  for (std::int64_t t = 1; t <= trace.num_rounds(); ++t) {
    scanner.observe(trace.bids(t), trace.winner(t));
  }
  scanner.observe_final(trace.final_bids());
}

RoundRobinCondition round_robin_condition(std::span<const double> bids,
                                          double eta) {
  RoundRobinCondition c;
  if (bids.empty()) return c;
  c.permutation.resize(bids.size());
  std::iota(c.permutation.begin(), c.permutation.end(), 0);
  std::stable_sort(c.permutation.begin(), c.permutation.end(),
                   [&](int a, int b) {
                     return bids[static_cast<std::size_t>(a)] >
                            bids[static_cast<std::size_t>(b)];
                   });
  auto bid_at = [&](std::size_t k) {
    return bids[static_cast<std::size_t>(c.permutation[k])];
  };
  for (std::size_t k = 0; k + 1 < bids.size(); ++k) {
    if (bid_at(k) - bid_at(k + 1) > kStrictGap) ++c.strict_count;
  }
  if (bid_at(bids.size() - 1) - (1.0 - eta) * bid_at(0) > kStrictGap) {
    ++c.strict_count;
  }
  c.holds = c.strict_count == static_cast<int>(bids.size());
  return c;
}

std::optional<std::int64_t> period_start(std::span<const int> winners, int n) {
  const auto total = static_cast<std::int64_t>(winners.size());
  if (n < 1 || total < n) return std::nullopt;
  auto w = [&](std::int64_t t) { return winners[static_cast<std::size_t>(t - 1)]; };
  std::int64_t p = total - n + 1;
  while (p > 1 && w(p - 1) == w(p - 1 + n)) --p;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (std::int64_t t = p; t < p + n; ++t) {
    const int agent = w(t);
    if (agent < 0 || agent >= n || seen[static_cast<std::size_t>(agent)]) {
      return std::nullopt;
    }
    seen[static_cast<std::size_t>(agent)] = 1;
  }
  return p;
}

RoundRobinReport detect_round_robin(const Trace& trace) {
  require_self_play(trace);
  const int n = trace.num_agents();
  if (n < 1) throw InvalidInput("trace has no agents");
  for (const AgentSpec& agent : trace.config().agents) {
    if (std::abs(agent.rho - 1.0 / n) > 1e-12) {
      throw InvalidInput(fmt::format(
          "round-robin analysis needs equal budgets; agent {} has {}",
          agent.id, agent.rho));
    }
  }
  const double eta = trace.config().eta;
  const std::int64_t total = trace.num_rounds();
  RoundRobinReport r;
  const double nd = static_cast<double>(n);
  r.schedule = nd * nd / (2.0 * eta) * log_inv(eta) + nd + 1.0;
  const auto first = trace.bids(1);
  r.hypothesis = *std::max_element(first.begin(), first.end()) <= 1.0 / nd;

  r.absorbing = true;
  for (std::int64_t t = 1; t <= total + 1; ++t) {
    const bool holds = round_robin_condition(trace.bids(t), eta).holds;
    if (holds && !r.holds_from) r.holds_from = t;
    if (!holds && r.holds_from) r.absorbing = false;
  }
  if (!r.holds_from) r.absorbing = false;

  r.period_start = period_start(trace.winners(), n);
  if (r.period_start) {
    const std::int64_t p = *r.period_start;
    for (std::int64_t t = p; t < p + n; ++t) r.permutation.push_back(trace.winner(t));
    // Periodicity makes windows beyond one period and length 2n redundant.
    std::vector<std::int64_t> wins(static_cast<std::size_t>(n));
    for (std::int64_t s = p; s < p + n && s <= total; ++s) {
      std::fill(wins.begin(), wins.end(), 0);
      for (std::int64_t tau = 1; tau <= 2 * n && s + tau - 1 <= total; ++tau) {
        ++wins[static_cast<std::size_t>(trace.winner(s + tau - 1))];
        for (std::int64_t c : wins) {
          r.max_discrepancy =
              std::max(r.max_discrepancy,
                       std::abs(static_cast<double>(c) -
                                static_cast<double>(tau) / nd));
        }
      }
    }
  }
  return r;
}

bool sum_bound_check(const Trace& trace) {
  const double n = static_cast<double>(trace.num_agents());
  for (std::int64_t t = 1; t <= trace.num_rounds() + 1; ++t) {
    const auto b = trace.bids(t);
    if (std::accumulate(b.begin(), b.end(), 0.0) > n + 1e-9) return false;
  }
  return true;
}

}  // namespace pacing_dyn::dynamics
