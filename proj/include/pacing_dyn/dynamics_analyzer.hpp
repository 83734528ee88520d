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

#ifndef PACING_DYN_DYNAMICS_ANALYZER_HPP_
#define PACING_DYN_DYNAMICS_ANALYZER_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pacing_dyn/auction_engine.hpp"

namespace pacing_dyn::dynamics {

// f(b) = 1/2 max_i b_i^2 - rho.b + 1/2, evaluated with the subgradient
// b_max e_k - rho at maximizer k.
struct PotentialState {
  std::vector<double> b;
  std::vector<double> rho;
  double f_value = 0.0;
  std::vector<double> subgrad;
  int maximizer = 0;
  double dist_one = 0.0;  // ||b - 1||
  double dist_avg = 0.0;  // ||b - b_avg 1||
  double b_avg = 0.0;
  double b_max = 0.0;
  double b_min = 0.0;
};

// Without `maximizer` the lowest maximal index is used. A designated index
// must hold a bid within kTieTolerance of the maximum.
PotentialState potential(std::span<const double> b, std::span<const double> rho,
                         std::optional<int> maximizer = std::nullopt);

double rho_min(std::span<const double> rho);
double dist_one(std::span<const double> b);
double dist_avg(std::span<const double> b);

struct StepViolation {
  std::int64_t round = 0;
  int agent = 0;
  double expected = 0.0;
  double actual = 0.0;
};

// Throws InvalidInput unless every agent paces and the format is first price.
void require_first_price_self_play(const Trace& trace);

std::vector<StepViolation> verify_subgradient_step(const Trace& trace,
                                                   double tolerance = 1e-9);

inline constexpr double kInequalityTolerance = 1e-9;

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs + kInequalityTolerance; }
};

struct HypothesisNotMet {
  double dist_one = 0.0;
  double threshold = 0.0;  // D sqrt(eta); also fails if above sqrt(1/(2n))
};

using AvgCheck = std::variant<InequalityCheck, HypothesisNotMet>;

// One-step forms on consecutive bid vectors.
InequalityCheck descent_inequality(std::span<const double> b,
                                   std::span<const double> b_next,
                                   double rho_min, double eta);
AvgCheck avg_inequality(std::span<const double> b,
                        std::span<const double> b_next, double rho_min,
                        double eta, double d);

// t in [1, T]; compares rounds t and t + 1.
InequalityCheck check_descent_inequality(const Trace& trace, std::int64_t t);
AvgCheck check_avg_inequality(const Trace& trace, std::int64_t t, double d);

struct MilestoneBand {
  double lo = 0.0;
  double hi = 0.0;
};

// Bid band [1 - 2 A eta - eta^2, 1 + A eta + 2 eta^3].
MilestoneBand band_for(double a, double eta);

struct ConvergenceMilestones {
  double d = 0.0;
  double a = 0.0;  // 3 (D^2 + 1) / rho_min
  std::int64_t t0 = 1;
  std::optional<std::int64_t> t_sqrt_eta;
  std::optional<std::int64_t> t_avg;
  std::optional<std::int64_t> t_one;
  double sched_sqrt_eta = 0.0;
  double sched_avg = 0.0;
  double sched_one = 0.0;

  // Second pass with D^2 = 667 eta / rho_min^2.
  double d_refined = 0.0;
  double a_refined = 0.0;
  std::optional<std::int64_t> t_avg_refined;
  std::optional<std::int64_t> t_one_refined;
  double sched_avg_refined = 0.0;
  double sched_one_refined = 0.0;

  // Final band from band_start to T + 1.
  std::int64_t band_start = 0;
  MilestoneBand band;
  double band_min_bid = 0.0;
  double band_max_bid = 0.0;
  bool band_holds = false;

  bool eta_hypothesis = false;  // eta <= rho_min^5 / 667

  bool within_schedule() const;
};

double default_first_pass_d(double rho_min, double eta);
double default_second_pass_d(double rho_min, double eta);
std::int64_t band_warmup(double rho_min, double eta);

// Consumes b^(1), ..., b^(T+1) in order. Throws ScheduleExceedsHorizon when
// T + 1 falls short of the band warm-up.
class MilestoneScanner {
 public:
  MilestoneScanner(std::vector<double> rho, double eta, std::int64_t horizon,
                   std::optional<double> d = std::nullopt);

  void observe(std::span<const double> bids);
  ConvergenceMilestones finish() const;

 private:
  std::vector<double> rho_;
  double eta_;
  std::int64_t horizon_;
  double rho_min_;
  double sqrt_target_ = 0.0;
  MilestoneBand first_band_;
  MilestoneBand refined_band_;
  std::int64_t t_ = 0;
  ConvergenceMilestones out_;
};

ConvergenceMilestones milestones(const Trace& trace,
                                 std::optional<double> d = std::nullopt);

// rho tau / M - (M - m) / (eta M).
double wins_floor(double m, double big_m, double rho, std::int64_t tau,
                  double eta);

struct WindowStats {
  int agent = 0;
  std::int64_t start = 0;   // t1
  std::int64_t length = 0;  // tau; wins counted over [t1, t1 + tau)
  std::int64_t wins = 0;
  double discrepancy = 0.0;  // wins - rho tau
  double m = 0.0;            // bid range over [t1, t1 + tau]
  double big_m = 0.0;
  double guaranteed_floor = 0.0;
  bool floor_holds = false;
};

WindowStats window_discrepancy(const Trace& trace, int agent, std::int64_t t1,
                               std::int64_t tau);

// Sliding windows of fixed length over a stream of rounds. Feed
// observe(t, bids, winner) for t = 1..T and observe_final(bids) for T + 1.
class WindowScanner {
 public:
  using Sink = std::function<void(const WindowStats&)>;

  WindowScanner(std::vector<double> rho, double eta, std::int64_t tau,
                std::int64_t stride, std::int64_t first_start, Sink sink);

  void observe(std::span<const double> bids, int winner);
  void observe_final(std::span<const double> bids);

 private:
  struct Extremes {
    std::deque<std::pair<std::int64_t, double>> lo;
    std::deque<std::pair<std::int64_t, double>> hi;
  };

  void push_bids(std::span<const double> bids);

  std::vector<double> rho_;
  double eta_;
  std::int64_t tau_;
  std::int64_t stride_;
  std::int64_t first_start_;
  Sink sink_;
  std::int64_t t_ = 0;  // index of the last bid vector pushed
  std::vector<Extremes> extremes_;
  std::vector<std::vector<std::int64_t>> win_prefix_;  // ring, size tau + 1
};

// Every agent, windows starting at first_start, first_start + stride, ...
void for_each_window(const Trace& trace, std::int64_t tau, std::int64_t stride,
                     std::int64_t first_start,
                     const std::function<void(const WindowStats&)>& fn);

struct RoundRobinCondition {
  bool holds = false;
  std::vector<int> permutation;  // agents by descending bid
  int strict_count = 0;          // strict links in the chain, wrap included
};

inline constexpr double kStrictGap = 1e-12;

RoundRobinCondition round_robin_condition(std::span<const double> bids,
                                          double eta);

struct RoundRobinReport {
  std::optional<std::int64_t> holds_from;
  std::optional<std::int64_t> period_start;
  std::vector<int> permutation;  // winner order from period_start
  double max_discrepancy = 0.0;  // windows starting at or after period_start
  double schedule = 0.0;         // n^2 / (2 eta) log(1/eta) + n + 1
  bool hypothesis = false;       // b_max^(1) <= 1/n
  bool absorbing = false;        // condition never lapses after holds_from

  bool within_schedule() const {
    return period_start && static_cast<double>(*period_start) <= schedule;
  }
};

std::optional<std::int64_t> period_start(std::span<const int> winners, int n);

RoundRobinReport detect_round_robin(const Trace& trace);

bool sum_bound_check(const Trace& trace);

}  // namespace pacing_dyn::dynamics

#endif  // PACING_DYN_DYNAMICS_ANALYZER_HPP_
