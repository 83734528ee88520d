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

#include "pacing_dyn/adversary_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "pacing_dyn/errors.hpp"
#include "pacing_dyn/exact.hpp"

namespace pacing_dyn::adversary {
namespace {

using exact::QuadraticNumber;

struct ExactProblem {
  QuadraticNumber b1;
  QuadraticNumber eta_rho_l;      // win step increment
  QuadraticNumber one_minus_eta;  // lose step factor
  QuadraticNumber budget;
};

ExactProblem lift(const AdversaryProblem& p) {
  const QuadraticNumber eta = exact::exact_learning_rate(p.eta, p.horizon);
  const QuadraticNumber rho_l(exact::rationalize(p.rho_l));
  return ExactProblem{
      QuadraticNumber(exact::rationalize(p.initial_bid)), eta * rho_l,
      QuadraticNumber(mpq_class(1)) - eta,
      QuadraticNumber(exact::rationalize(p.rho_o) *
                      mpq_class(mpz_class(std::to_string(p.horizon))))};
}

bool exact_prefix_affordable(const ExactProblem& e,
                             std::span<const std::uint8_t> x) {
  QuadraticNumber bid = e.b1;
  QuadraticNumber cost;
  for (std::uint8_t won : x) {
    if (won) {
      cost += bid;
      bid += e.eta_rho_l;
    } else {
      bid *= e.one_minus_eta;
      bid += e.eta_rho_l;
    }
  }
  return cost <= e.budget;
}

// Depth-first branch and bound over win patterns. Feasibility is decided in
// binary64 unless the cost lands within kAmbiguity of the budget, in which
// case the prefix is re-evaluated exactly.
class Enumerator {
 public:
  Enumerator(const AdversaryProblem& p, const ExactProblem& e)
      : p_(p),
        e_(e),
        horizon_(static_cast<std::size_t>(p.horizon)),
        budget_(p.budget()),
        margin_(kAmbiguity * std::max(1.0, p.budget())),
        x_(horizon_, 0) {}

  // Fixes the first prefix.size() decisions, then searches the rest.
  void search_from(std::span<const std::uint8_t> prefix) {
    double bid = p_.initial_bid;
    double cost = 0.0;
    std::int64_t wins = 0;
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      x_[t] = prefix[t];
      if (prefix[t]) {
        if (!affordable(t, cost + bid)) return;
        cost += bid;
        bid += p_.eta * p_.rho_l;
        ++wins;
      } else {
        bid += p_.eta * (p_.rho_l - bid);
      }
    }
    dfs(prefix.size(), bid, cost, wins);
  }

  std::int64_t best_wins() const { return best_wins_; }
  const std::vector<std::uint8_t>& best_x() const { return best_x_; }

 private:
  static constexpr double kAmbiguity = 1e-9;

  bool affordable(std::size_t t, double new_cost) const {
    if (new_cost <= budget_ - margin_) return true;
    if (new_cost > budget_ + margin_) return false;
    return exact_prefix_affordable(
        e_, std::span<const std::uint8_t>(x_).first(t + 1));
  }

  void dfs(std::size_t t, double bid, double cost, std::int64_t wins) {
    if (t == horizon_) {
      if (wins > best_wins_) {
        best_wins_ = wins;
        best_x_ = x_;
      }
      return;
    }
    if (wins + static_cast<std::int64_t>(horizon_ - t) <= best_wins_) return;
    x_[t] = 0;
    dfs(t + 1, bid + p_.eta * (p_.rho_l - bid), cost, wins);
    x_[t] = 1;
    if (affordable(t, cost + bid)) {
      dfs(t + 1, bid + p_.eta * p_.rho_l, cost + bid, wins + 1);
    }
    x_[t] = 0;
  }

  const AdversaryProblem& p_;
  const ExactProblem& e_;
  std::size_t horizon_;
  double budget_;
  double margin_;
  std::vector<std::uint8_t> x_;
  std::int64_t best_wins_ = -1;
  std::vector<std::uint8_t> best_x_;
};

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs fn(k) for k in [0, count) on up to `workers` threads.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::min(resolve_workers(workers), count);
  if (workers <= 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) fn(k);
    });
  }
}

}  // namespace

void AdversaryProblem::validate() const {
  if (!(rho_l > 0.0) || !(rho_o > 0.0)) {
    throw InvalidInput("budget shares must be positive");
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput(fmt::format("eta must lie in (0,1), got {}", eta));
  }
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");
  if (!(initial_bid >= 0.0)) throw InvalidInput("initial bid must be >= 0");
}

AdversaryProblem AdversaryProblem::standard_instance(double rho_l, double rho_o,
                                                    std::int64_t horizon) {
  return AdversaryProblem{rho_l, rho_o, horizon,
                          1.0 / std::sqrt(static_cast<double>(horizon)), rho_l};
}

WinSequence evaluate_sequence(const AdversaryProblem& problem,
                              std::span<const std::uint8_t> x) {
  if (static_cast<std::int64_t>(x.size()) != problem.horizon) {
    throw InvalidInput("win pattern length differs from horizon");
  }
  WinSequence seq;
  seq.x.assign(x.begin(), x.end());
  seq.bid_path.reserve(x.size() + 1);
  double bid = problem.initial_bid;
  seq.bid_path.push_back(bid);
  for (std::uint8_t won : x) {
    if (won) {
      seq.cost += bid;
      ++seq.wins;
    }
    bid += problem.eta * (problem.rho_l - (won ? 0.0 : bid));
    seq.bid_path.push_back(bid);
  }
  seq.feasible = exactly_feasible(problem, x);
  return seq;
}

bool exactly_feasible(const AdversaryProblem& problem,
                      std::span<const std::uint8_t> x) {
  return exact_prefix_affordable(lift(problem), x);
}

WinSequence enumerate_optimal(const AdversaryProblem& problem, int workers) {
  problem.validate();
  if (problem.horizon > kMaxEnumerationHorizon) {
    throw InstanceTooLarge(fmt::format(
        "enumeration supports T <= {}, got {}", kMaxEnumerationHorizon,
        problem.horizon));
  }
  const ExactProblem lifted = lift(problem);
  const int prefix_bits =
      static_cast<int>(std::min<std::int64_t>(problem.horizon, 3));
  const int tasks = 1 << prefix_bits;

  std::vector<std::int64_t> wins(static_cast<std::size_t>(tasks), -1);
  std::vector<std::vector<std::uint8_t>> patterns(
      static_cast<std::size_t>(tasks));
  parallel_for(tasks, workers, [&](int k) {
    std::vector<std::uint8_t> prefix(static_cast<std::size_t>(prefix_bits));
    for (int bit = 0; bit < prefix_bits; ++bit) {
      prefix[static_cast<std::size_t>(bit)] =
          static_cast<std::uint8_t>((k >> (prefix_bits - 1 - bit)) & 1);
    }
    Enumerator search(problem, lifted);
    search.search_from(prefix);
    wins[static_cast<std::size_t>(k)] = search.best_wins();
    patterns[static_cast<std::size_t>(k)] = search.best_x();
  });

  // Prefixes are in lexicographic order, so the first maximum is the
  // lexicographically smallest optimum.
  std::size_t best = 0;
  for (std::size_t k = 1; k < wins.size(); ++k) {
    if (wins[k] > wins[best]) best = k;
  }
  if (wins[best] < 0) {
    throw std::logic_error("enumeration found no feasible pattern");
  }
  return evaluate_sequence(problem, patterns[best]);
}

DpResult dp_optimal(const AdversaryProblem& problem, int bid_grid,
                    int budget_grid, Rounding rounding) {
  problem.validate();
  if (bid_grid < 2 || budget_grid < 2) {
    throw InvalidInput("dp grids must have at least 2 cells");
  }
  const std::int64_t horizon = problem.horizon;
  if (horizon > std::numeric_limits<std::uint16_t>::max()) {
    throw InvalidInput("dp horizon too long");
  }
  if (horizon == 0) return {0, evaluate_sequence(problem, {})};

  const bool optimistic = rounding == Rounding::kOptimistic;
  const double bid_cap = std::max(2.0, problem.initial_bid + 1.0);
  const std::int64_t nb = bid_grid;
  const std::int64_t nB = budget_grid;
  const double bid_step = bid_cap / static_cast<double>(nb);
  const double budget_step = problem.budget() / static_cast<double>(nB);
  const std::size_t row = static_cast<std::size_t>(nB + 1);
  const std::size_t cells = static_cast<std::size_t>(nb + 1) * row;
  if (static_cast<double>(cells) * static_cast<double>(horizon + 1) > 6e8) {
    throw InvalidInput("dp table too large for this horizon and grid");
  }

  // Conservative cell rounding: optimistic rounds bids down and charges less,
  // pessimistic rounds bids up and charges more.
  constexpr double kSlack = 1e-9;
  auto cell_of = [&](double value, double step, std::int64_t limit) {
    const double u = value / step;
    const double r = optimistic ? std::floor(u - kSlack) : std::ceil(u + kSlack);
    return static_cast<std::int64_t>(
        std::clamp(r, 0.0, static_cast<double>(limit + 1)));
  };

  std::vector<std::int64_t> lose_next(static_cast<std::size_t>(nb + 1));
  std::vector<std::int64_t> win_next(static_cast<std::size_t>(nb + 1));
  std::vector<std::int64_t> charge(static_cast<std::size_t>(nb + 1));
  for (std::int64_t i = 0; i <= nb; ++i) {
    const double bid = static_cast<double>(i) * bid_step;
    const auto k = static_cast<std::size_t>(i);
    lose_next[k] = cell_of(bid + problem.eta * (problem.rho_l - bid), bid_step, nb);
    win_next[k] = cell_of(bid + problem.eta * problem.rho_l, bid_step, nb);
    charge[k] = cell_of(bid, budget_step, nB);
  }
  const std::int64_t start = cell_of(problem.initial_bid, bid_step, nb);
  if (start > nb) throw GridOverflow("initial bid outside dp bid range");

  auto overflow = [&](std::int64_t t) {
    return GridOverflow(fmt::format(
        "reachable learner bid exceeds dp cap {} at round {}", bid_cap, t + 1));
  };

  // Forward pass: only reachable states must stay inside the bid range.
  {
    std::vector<std::uint8_t> seen(cells, 0);
    std::vector<std::uint32_t> frontier{
        static_cast<std::uint32_t>(static_cast<std::size_t>(start) * row +
                                   static_cast<std::size_t>(nB))};
    std::vector<std::uint32_t> next;
    for (std::int64_t t = 0; t < horizon; ++t) {
      next.clear();
      auto visit = [&](std::size_t cell) {
        if (!seen[cell]) {
          seen[cell] = 1;
          next.push_back(static_cast<std::uint32_t>(cell));
        }
      };
      for (std::uint32_t cell : frontier) {
        const std::size_t i = cell / row;
        const auto j = static_cast<std::int64_t>(cell % row);
        if (lose_next[i] > nb) throw overflow(t);
        visit(static_cast<std::size_t>(lose_next[i]) * row +
              static_cast<std::size_t>(j));
        if (j >= charge[i]) {
          if (win_next[i] > nb) throw overflow(t);
          visit(static_cast<std::size_t>(win_next[i]) * row +
                static_cast<std::size_t>(j - charge[i]));
        }
      }
      for (std::uint32_t cell : next) seen[cell] = 0;
      frontier.swap(next);
    }
  }

  // Backward pass over the full grid; values[t] is the best win count from
  // round t + 1 onward.
  std::vector<std::vector<std::uint16_t>> values(
      static_cast<std::size_t>(horizon + 1));
  values[static_cast<std::size_t>(horizon)].assign(cells, 0);
  for (std::int64_t t = horizon - 1; t >= 0; --t) {
    const auto& later = values[static_cast<std::size_t>(t + 1)];
    auto& now = values[static_cast<std::size_t>(t)];
    now.resize(cells);
    for (std::int64_t i = 0; i <= nb; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const std::uint16_t* lose_row =
          &later[static_cast<std::size_t>(std::min(lose_next[k], nb)) * row];
      const std::uint16_t* win_row =
          &later[static_cast<std::size_t>(std::min(win_next[k], nb)) * row];
      std::uint16_t* out = &now[k * row];
      const std::size_t d =
          static_cast<std::size_t>(std::min<std::int64_t>(charge[k], nB + 1));
      for (std::size_t j = 0; j < std::min(d, row); ++j) out[j] = lose_row[j];
      for (std::size_t j = d; j < row; ++j) {
        out[j] = std::max<std::uint16_t>(
            lose_row[j], static_cast<std::uint16_t>(win_row[j - d] + 1));
      }
    }
  }

  std::vector<std::uint8_t> x(static_cast<std::size_t>(horizon), 0);
  std::size_t i = static_cast<std::size_t>(start);
  std::size_t j = static_cast<std::size_t>(nB);
  const std::uint16_t bound = values[0][i * row + j];
  for (std::int64_t t = 0; t < horizon; ++t) {
    const std::uint16_t v = values[static_cast<std::size_t>(t)][i * row + j];
    const auto& later = values[static_cast<std::size_t>(t + 1)];
    const auto lose = static_cast<std::size_t>(lose_next[i]);
    if (later[lose * row + j] == v) {
      i = lose;
    } else {
      x[static_cast<std::size_t>(t)] = 1;
      j -= static_cast<std::size_t>(charge[i]);
      i = static_cast<std::size_t>(win_next[i]);
    }
  }

  DpResult result{bound, evaluate_sequence(problem, x)};
  if (!optimistic && (!result.sequence.feasible ||
                      result.sequence.wins != result.wins_bound)) {
    throw std::logic_error("pessimistic dp produced an infeasible pattern");
  }
  return result;
}

double lagrangian_value(const AdversaryProblem& problem,
                        const WinSequence& seq, double lambda) {
  double value =
      lambda * static_cast<double>(problem.horizon) * problem.rho_o;
  for (std::size_t t = 0; t < seq.x.size(); ++t) {
    if (seq.x[t]) value += 1.0 - lambda * seq.bid_path[t];
  }
  return value;
}

LagrangianCertificate LagrangianCertificate::make(double rho_l, double rho_o,
                                                  double eta) {
  const double total_sq = (rho_l + rho_o) * (rho_l + rho_o);
  LagrangianCertificate c;
  c.rho_l = rho_l;
  c.rho_o = rho_o;
  c.eta = eta;
  c.lambda = rho_l / total_sq;
  c.linear_coeff = (rho_o * rho_o + (rho_o * rho_o + rho_l * rho_l) * eta) / total_sq;
  c.g_quadratic = 0.5 / (eta * total_sq);
  c.g_linear = -(2.0 * rho_o + rho_l) / (eta * total_sq);
  c.g_constant = 2.0 / eta;
  return c;
}

double interval_lagrangian_bound(const LagrangianCertificate& cert,
                                 std::int64_t tau, double b) {
  if (tau < 0) throw InvalidInput("window length must be non-negative");
  if (!(b >= 0.0)) throw InvalidInput("bid must be non-negative");
  return cert.linear_coeff * static_cast<double>(tau) + cert.g(b);
}

double induction_step_slack(const LagrangianCertificate& cert, double b) {
  const double win = 1.0 - cert.lambda * b +
                     cert.g(b + cert.eta * cert.rho_l) - cert.g(b);
  const double lose = cert.g(b + cert.eta * (cert.rho_l - b)) - cert.g(b);
  return cert.linear_coeff - std::max(win, lose);
}

CertificateCheck verify_certificate_windows(const AdversaryProblem& problem,
                                            double tolerance) {
  problem.validate();
  if (problem.horizon > kMaxEnumerationHorizon) {
    throw InstanceTooLarge("certificate check enumerates 2^T patterns");
  }
  const auto horizon = static_cast<std::size_t>(problem.horizon);
  const LagrangianCertificate cert =
      LagrangianCertificate::make(problem.rho_l, problem.rho_o, problem.eta);
  CertificateCheck check;
  check.min_slack = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> x(horizon, 0);
  std::vector<double> bids(horizon + 1, 0.0);
  bids[0] = problem.initial_bid;

  auto leaf = [&] {
    ++check.sequences;
    double windowed = 0.0;
    for (std::size_t tau = 0; tau <= horizon; ++tau) {
      const std::size_t start = horizon - tau;
      if (tau > 0 && x[start]) windowed += 1.0 - cert.lambda * bids[start];
      const double slack =
          interval_lagrangian_bound(cert, static_cast<std::int64_t>(tau),
                                    bids[start]) -
          windowed;
      ++check.windows;
      check.min_slack = std::min(check.min_slack, slack);
      if (slack < -tolerance) ++check.violations;
    }
  };
  auto dfs = [&](auto&& self, std::size_t t) -> void {
    if (t == horizon) {
      leaf();
      return;
    }
    for (std::uint8_t won : {std::uint8_t{0}, std::uint8_t{1}}) {
      x[t] = won;
      bids[t + 1] =
          bids[t] + problem.eta * (problem.rho_l - (won ? 0.0 : bids[t]));
      self(self, t + 1);
    }
  };
  dfs(dfs, 0);
  return check;
}

double win_cap(double rho_l, double rho_o, std::int64_t horizon,
                       double eta) {
  if (!(rho_l > 0.0) || !(rho_o > 0.0) || !(eta > 0.0) || horizon < 0) {
    throw InvalidInput("win cap needs positive inputs");
  }
  const double share = rho_o / (rho_l + rho_o);
  const double t = static_cast<double>(horizon);
  double cap = (share + eta) * t + 2.0 / eta;
  if (horizon > 0 && std::abs(eta - 1.0 / std::sqrt(t)) <= 1e-12) {
    cap = std::min(cap, share * t + 3.0 * std::sqrt(t));
  }
  return cap;
}

std::vector<DualPoint> lagrangian_dual_sweep(const AdversaryProblem& problem,
                                             std::span<const double> lambdas) {
  problem.validate();
  if (problem.horizon > kMaxEnumerationHorizon) {
    throw InstanceTooLarge("dual sweep enumerates 2^T patterns");
  }
  const auto horizon = static_cast<std::size_t>(problem.horizon);
  std::vector<DualPoint> out;
  for (double lambda : lambdas) {
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
    double best = -std::numeric_limits<double>::infinity();
    auto dfs = [&](auto&& self, std::size_t t, double bid, double value) -> void {
      if (t == horizon) {
        best = std::max(best, value);
        return;
      }
      if (value + static_cast<double>(horizon - t) <= best) return;
      self(self, t + 1, bid + problem.eta * (problem.rho_l - bid), value);
      self(self, t + 1, bid + problem.eta * problem.rho_l,
           value + 1.0 - lambda * bid);
    };
    dfs(dfs, 0, problem.initial_bid, 0.0);
    out.push_back({lambda, lambda * problem.budget() + best});
  }
  return out;
}

ReductionResult match_bids_reduction(const LearnerSpec& learner,
                                     std::span<const double> optimizer_bids,
                                     AuctionFormat format,
                                     double optimizer_rho) {
  const auto horizon = static_cast<std::int64_t>(optimizer_bids.size());
  MarketConfig original_cfg;
  original_cfg.agents = {
      AgentSpec{0, learner.rho, learner.initial_bid, policy::PrimalPacing{}},
      AgentSpec{1, optimizer_rho, 0.0,
                policy::Scripted{{optimizer_bids.begin(), optimizer_bids.end()}}}};
  original_cfg.horizon = horizon;
  original_cfg.eta = learner.eta;
  original_cfg.format = format;
  original_cfg.tie_break = tie_break::FavorAgent{1};
  original_cfg.normalize_budgets = false;

  ReductionResult result;
  result.original = simulate(original_cfg);

  MarketConfig matched_cfg = original_cfg;
  matched_cfg.agents[1].policy = policy::MatchLearner{0};
  Market market(matched_cfg);
  TraceBuilder builder(matched_cfg);
  builder.reserve(horizon);
  result.same_win_pattern = true;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const int wanted = result.original.winner(t);
    const Resolution r = market.step(tie_break::FavorAgent{wanted});
    builder.add_round(market.posted_bids(), r.winner, r.price);
    if (r.winner != wanted) result.same_win_pattern = false;
  }
  result.transformed = std::move(builder).finish(market.upcoming_bids());

  result.learner_bids_dominated = true;
  for (std::int64_t t = 1; t <= horizon + 1; ++t) {
    if (result.transformed.bid(t, 0) > result.original.bid(t, 0) + 1e-12) {
      result.learner_bids_dominated = false;
    }
  }
  for (std::int64_t t = 1; t <= horizon; ++t) {
    if (result.original.winner(t) == 1) {
      ++result.original_wins;
      result.original_cost += result.original.price(t);
    }
    if (result.transformed.winner(t) == 1) {
      ++result.transformed_wins;
      result.transformed_cost += result.transformed.price(t);
    }
  }
  return result;
}

}  // namespace pacing_dyn::adversary
