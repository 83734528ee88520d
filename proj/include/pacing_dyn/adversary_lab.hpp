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

// The Optimizer's problem against a primal pacing Learner.
//
// After bid matching, the Optimizer only chooses which rounds to win
// (x_t = 1), paying the Learner's current bid b_t, while the Learner's bid
// evolves deterministically:
//
//   maximize   sum_t x_t
//   subject to sum_t x_t b_t <= rho_O * T
//   where      b_{t+1} = b_t + eta * (rho_L - b_t * (1 - x_t)).
//
// This module solves that program exactly for short horizons, brackets it by
// dynamic programming for longer ones, and checks the Lagrangian certificate
// that bounds its value.

#ifndef PACING_DYN_ADVERSARY_LAB_HPP_
#define PACING_DYN_ADVERSARY_LAB_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pacing_dyn/auction_engine.hpp"

namespace pacing_dyn::adversary {

struct AdversaryProblem {
  double rho_l = 0.5;  // Learner budget share
  double rho_o = 0.5;  // Optimizer budget share
  std::int64_t horizon = 0;
  double eta = 0.1;
  double initial_bid = 0.5;

  double budget() const { return rho_o * static_cast<double>(horizon); }
  void validate() const;

  // eta = 1/sqrt(T) and b^(1) = rho_L.
  static AdversaryProblem standard_instance(double rho_l, double rho_o,
                                           std::int64_t horizon);
};

struct WinSequence {
  std::vector<std::uint8_t> x;
  std::int64_t wins = 0;
  double cost = 0.0;
  std::vector<double> bid_path;  // b^(1) .. b^(T+1)
  bool feasible = false;         // cost <= rho_O * T, decided exactly
};

// Learner bid path and Optimizer cost of a win pattern (binary64), with the
// feasibility flag decided in exact arithmetic.
WinSequence evaluate_sequence(const AdversaryProblem& problem,
                              std::span<const std::uint8_t> x);

bool exactly_feasible(const AdversaryProblem& problem,
                      std::span<const std::uint8_t> x);

inline constexpr std::int64_t kMaxEnumerationHorizon = 24;

// Maximum-win feasible sequence, lexicographically smallest among optima.
// Branches over the leading bits run on up to `workers` threads (0 = auto).
WinSequence enumerate_optimal(const AdversaryProblem& problem, int workers = 0);

enum class Rounding { kOptimistic, kPessimistic };

struct DpResult {
  std::int64_t wins_bound = 0;
  WinSequence sequence;
};

// Dynamic program over (round, bid cell, remaining-budget cell). Grids count
// cells: bids live on [0, max(2, b^(1) + 1)] split into `bid_grid` cells and
// remaining budget on [0, rho_O T] split into `budget_grid` cells, so doubling
// a grid refines it. Optimistic rounding yields an upper bound on the optimum;
// Pessimistic yields a sequence that is feasible in exact arithmetic.
DpResult dp_optimal(const AdversaryProblem& problem, int bid_grid,
                    int budget_grid, Rounding rounding);

// lambda * T * rho_O + sum_t x_t (1 - lambda b_t).
double lagrangian_value(const AdversaryProblem& problem,
                        const WinSequence& seq, double lambda);

struct LagrangianCertificate {
  double rho_l = 0.0;
  double rho_o = 0.0;
  double eta = 0.0;
  double lambda = 0.0;        // rho_L / (rho_L + rho_O)^2
  double linear_coeff = 0.0;  // (rho_O^2 + (rho_O^2 + rho_L^2) eta) / (rho_O + rho_L)^2
  // g(b) = g_quadratic b^2 + g_linear b + g_constant
  double g_quadratic = 0.0;
  double g_linear = 0.0;
  double g_constant = 0.0;

  static LagrangianCertificate make(double rho_l, double rho_o, double eta);
  double g(double b) const { return (g_quadratic * b + g_linear) * b + g_constant; }
  double g_argmin() const { return 2.0 * rho_o + rho_l; }
};

// linear_coeff * tau + g(b): bounds sum x_t (1 - lambda b_t) over any window
// of tau rounds that starts with Learner bid b.
double interval_lagrangian_bound(const LagrangianCertificate& cert,
                                 std::int64_t tau, double b);

// linear_coeff minus the larger of the win and lose branch increments of the
// one-step induction; non-negative when the certificate's induction holds at b.
double induction_step_slack(const LagrangianCertificate& cert, double b);

struct CertificateCheck {
  std::int64_t sequences = 0;
  std::int64_t windows = 0;
  std::int64_t violations = 0;
  double min_slack = 0.0;  // min over windows of bound - windowed sum
};

// Enumerates every binary sequence of the problem's horizon and checks the
// windowed bound on every suffix window, including the empty one.
CertificateCheck verify_certificate_windows(const AdversaryProblem& problem,
                                            double tolerance = 1e-9);

// min of (rho_O/(rho_L+rho_O) + eta) T + 2/eta and, when eta = 1/sqrt(T),
// rho_O/(rho_L+rho_O) T + 3 sqrt(T).
double win_cap(double rho_l, double rho_o, std::int64_t horizon,
                       double eta);

struct DualPoint {
  double lambda = 0.0;
  double bound = 0.0;  // max over all binary x of the Lagrangian
};

// Lagrangian dual function at each lambda (enumeration, T <= 24).
std::vector<DualPoint> lagrangian_dual_sweep(const AdversaryProblem& problem,
                                             std::span<const double> lambdas);

struct LearnerSpec {
  double rho = 0.5;
  double initial_bid = 0.5;
  double eta = 0.1;
};

struct ReductionResult {
  Trace original;
  Trace transformed;
  std::int64_t original_wins = 0;
  std::int64_t transformed_wins = 0;
  double original_cost = 0.0;
  double transformed_cost = 0.0;
  bool same_win_pattern = false;
  bool learner_bids_dominated = false;  // transformed <= original, every round

  bool holds() const {
    return same_win_pattern && original_wins == transformed_wins &&
           transformed_cost <= original_cost + 1e-12 && learner_bids_dominated;
  }
};

// Replays `optimizer_bids` against a pacing Learner (agent 0; Optimizer is
// agent 1 and wins ties), then replaces every Optimizer bid with the Learner's
// concurrent bid, breaking each tie to reproduce the original win pattern.
// The Optimizer's budget share is `optimizer_rho`.
ReductionResult match_bids_reduction(const LearnerSpec& learner,
                                     std::span<const double> optimizer_bids,
                                     AuctionFormat format,
                                     double optimizer_rho = 1.0);

}  // namespace pacing_dyn::adversary

#endif  // PACING_DYN_ADVERSARY_LAB_HPP_
