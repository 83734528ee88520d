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

#include <cmath>
#include <random>
#include <vector>

#include <gmpxx.h>
#include <gtest/gtest.h>

#include "pacing_dyn/adversary_lab.hpp"
#include "pacing_dyn/errors.hpp"

namespace pacing_dyn::adversary {
namespace {

using Bits = std::vector<std::uint8_t>;

// Brute-force oracle over all 2^T patterns in exact rationals. Only valid
// when every parameter is a short decimal or simple fraction.
struct OracleResult {
  std::int64_t wins = -1;
  Bits x;
};

OracleResult brute_force(mpq_class rho_l, mpq_class rho_o, int horizon,
                         mpq_class eta, mpq_class b1) {
  OracleResult best;
  const mpq_class budget = rho_o * horizon;
  for (std::uint32_t mask = 0; mask < (1u << horizon); ++mask) {
    Bits x(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) x[static_cast<std::size_t>(t)] = (mask >> (horizon - 1 - t)) & 1u;
    mpq_class bid = b1;
    mpq_class cost = 0;
    std::int64_t wins = 0;
    for (std::uint8_t won : x) {
      if (won) {
        cost += bid;
        ++wins;
        bid += eta * rho_l;
      } else {
        bid += eta * (rho_l - bid);
      }
    }
    // Masks ascend lexicographically, so keep the first maximum.
    if (cost <= budget && wins > best.wins) {
      best.wins = wins;
      best.x = x;
    }
  }
  return best;
}

TEST(EnumerateOptimal, SingleRound) {
  const WinSequence s = enumerate_optimal({0.5, 0.5, 1, 0.5, 0.5});
  EXPECT_EQ(s.wins, 1);
  EXPECT_EQ(s.x, Bits{1});
  EXPECT_DOUBLE_EQ(s.cost, 0.5);
  EXPECT_TRUE(s.feasible);
}

TEST(EnumerateOptimal, TwoRounds) {
  const AdversaryProblem p{0.5, 0.5, 2, 0.5, 0.5};
  const WinSequence s = enumerate_optimal(p);
  EXPECT_EQ(s.wins, 1);
  EXPECT_EQ(s.x, (Bits{0, 1}));  // lexicographically smallest optimum
  const WinSequence both = evaluate_sequence(p, Bits{1, 1});
  EXPECT_DOUBLE_EQ(both.cost, 1.25);
  EXPECT_FALSE(both.feasible);
  EXPECT_TRUE(evaluate_sequence(p, Bits{1, 0}).feasible);
}

TEST(EnumerateOptimal, EmptyHorizon) {
  const WinSequence s = enumerate_optimal({0.5, 0.5, 0, 0.5, 0.5});
  EXPECT_EQ(s.wins, 0);
  EXPECT_TRUE(s.x.empty());
  EXPECT_EQ(s.bid_path.size(), 1u);
}

TEST(EnumerateOptimal, TooLarge) {
  EXPECT_THROW(enumerate_optimal({0.5, 0.5, 25, 0.2, 0.5}), InstanceTooLarge);
}

TEST(EnumerateOptimal, InvalidProblems) {
  EXPECT_THROW(enumerate_optimal({0.0, 0.5, 4, 0.2, 0.5}), InvalidInput);
  EXPECT_THROW(enumerate_optimal({0.5, 0.5, 4, 1.0, 0.5}), InvalidInput);
  EXPECT_THROW(enumerate_optimal({0.5, 0.5, -1, 0.5, 0.5}), InvalidInput);
}

TEST(EnumerateOptimal, MatchesExactOracle) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 60; ++k) {
    const int rl = 1 + static_cast<int>(rng() % 9);
    const int ro = 1 + static_cast<int>(rng() % 9);
    const int eta_den = 2 + static_cast<int>(rng() % 8);
    const int horizon = 1 + static_cast<int>(rng() % 12);
    const int b1_num = static_cast<int>(rng() % (rl + 1));
    const OracleResult want =
        brute_force(mpq_class(rl, 10), mpq_class(ro, 10), horizon,
                    mpq_class(1, eta_den), mpq_class(b1_num, 10));
    const AdversaryProblem p{rl / 10.0, ro / 10.0, horizon, 1.0 / eta_den,
                             b1_num / 10.0};
    const WinSequence got = enumerate_optimal(p, 1);
    EXPECT_EQ(got.wins, want.wins) << k;
    EXPECT_EQ(got.x, want.x) << k;
    EXPECT_TRUE(got.feasible);
  }
}

TEST(EnumerateOptimal, BudgetExactlyMetIsFeasible) {
  // Winning every round costs 0.2 + 0.3 + 0.4 + 0.5 = 1.4 = budget; the
  // binary64 sum lands just above.
  const AdversaryProblem p{0.2, 0.35, 4, 0.5, 0.2};
  const WinSequence all = evaluate_sequence(p, Bits{1, 1, 1, 1});
  EXPECT_TRUE(all.feasible);
  EXPECT_EQ(enumerate_optimal(p).wins, 4);
}

TEST(EnumerateOptimal, ThreadCountDoesNotChangeResult) {
  for (std::int64_t t : {9, 14, 18}) {
    const auto p = AdversaryProblem::standard_instance(0.3, 0.7, t);
    const WinSequence one = enumerate_optimal(p, 1);
    const WinSequence four = enumerate_optimal(p, 4);
    EXPECT_EQ(one.x, four.x);
    EXPECT_EQ(one.wins, four.wins);
  }
}

TEST(EnumerateOptimal, WinCapOverGrid) {
  for (std::int64_t t = 1; t <= 14; ++t) {
    for (int k = 1; k <= 9; ++k) {
      const double rho_l = k / 10.0;
      for (int j = 1; j <= 9; ++j) {
        const double rho_o = j / 10.0;
        for (double eta : {1.0 / std::sqrt(static_cast<double>(t)), 0.05, 0.2}) {
          if (!(eta < 1.0)) continue;
          const AdversaryProblem p{rho_l, rho_o, t, eta, rho_l};
          EXPECT_LE(static_cast<double>(enumerate_optimal(p, 1).wins),
                    win_cap(rho_l, rho_o, t, eta))
              << rho_l << " " << rho_o << " " << t << " " << eta;
        }
      }
    }
  }
}

TEST(EvaluateSequence, BidPathFollowsUpdate) {
  const AdversaryProblem p{0.4, 0.6, 5, 0.3, 0.25};
  const WinSequence s = evaluate_sequence(p, Bits{1, 0, 0, 1, 1});
  ASSERT_EQ(s.bid_path.size(), 6u);
  for (std::size_t t = 0; t < 5; ++t) {
    const double b = s.bid_path[t];
    EXPECT_DOUBLE_EQ(s.bid_path[t + 1], b + 0.3 * (0.4 - b * (1 - s.x[t])));
  }
  EXPECT_EQ(s.wins, 3);
  EXPECT_THROW(evaluate_sequence(p, Bits{1, 0}), InvalidInput);
}

TEST(FormatInvariance, MatchedBidsCostTheSameInBothFormats) {
  const auto p = AdversaryProblem::standard_instance(0.4, 0.6, 12);
  const WinSequence best = enumerate_optimal(p);
  for (AuctionFormat format : {AuctionFormat::kFirstPrice, AuctionFormat::kSecondPrice}) {
    MarketConfig c;
    c.agents = {AgentSpec{0, p.rho_l, p.initial_bid},
                AgentSpec{1, p.rho_o, 0.0, policy::MatchLearner{0}}};
    c.horizon = p.horizon;
    c.eta = p.eta;
    c.format = format;
    c.normalize_budgets = false;
    Market market(c);
    double cost = 0.0;
    std::int64_t wins = 0;
    for (std::uint8_t won : best.x) {
      const Resolution r = market.step(tie_break::FavorAgent{won ? 1 : 0});
      if (r.winner == 1) {
        ++wins;
        cost += r.price;
      }
    }
    EXPECT_EQ(wins, best.wins);
    EXPECT_NEAR(cost, best.cost, 1e-12);
  }
}

TEST(DpOptimal, BracketsExactOptimum) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 30;) {
    const double rho_l = u(rng);
    const AdversaryProblem p{rho_l, u(rng), 1 + static_cast<std::int64_t>(rng() % 14),
                             0.05 + 0.5 * u(rng), rho_l * u(rng)};
    // Keep every reachable bid below the grid cap of 2.
    if (p.initial_bid + static_cast<double>(p.horizon) * p.eta * p.rho_l > 1.9) continue;
    ++k;
    const std::int64_t exact = enumerate_optimal(p, 1).wins;
    const DpResult lo = dp_optimal(p, 256, 256, Rounding::kPessimistic);
    const DpResult hi = dp_optimal(p, 256, 256, Rounding::kOptimistic);
    EXPECT_LE(lo.wins_bound, exact);
    EXPECT_GE(hi.wins_bound, exact);
    EXPECT_TRUE(lo.sequence.feasible);
    EXPECT_EQ(lo.sequence.wins, lo.wins_bound);
  }
}

TEST(DpOptimal, NoBudgetNoWins) {
  const DpResult r =
      dp_optimal({0.5, 1e-9, 10, 0.1, 0.5}, 64, 64, Rounding::kPessimistic);
  EXPECT_EQ(r.wins_bound, 0);
  EXPECT_EQ(r.sequence.wins, 0);
}

TEST(DpOptimal, RefinementNeverLosesWins) {
  for (int k = 1; k <= 9; k += 2) {
    const auto p = AdversaryProblem::standard_instance(1.0 - k / 10.0, k / 10.0, 16);
    std::int64_t previous = 0;
    for (int grid : {32, 64, 128, 256, 512}) {
      const std::int64_t wins = dp_optimal(p, grid, grid, Rounding::kPessimistic).wins_bound;
      EXPECT_GE(wins, previous) << k << " " << grid;
      previous = wins;
    }
  }
}

TEST(DpOptimal, ErrorPaths) {
  const AdversaryProblem p{0.5, 0.5, 6, 0.2, 0.5};
  EXPECT_THROW(dp_optimal(p, 1, 64, Rounding::kOptimistic), InvalidInput);
  EXPECT_THROW(dp_optimal(p, 64, 1, Rounding::kOptimistic), InvalidInput);
  // A rich optimizer can push the learner's bid past the cap of 2.
  const AdversaryProblem runaway{0.9, 5.0, 6, 0.9, 0.9};
  EXPECT_THROW(dp_optimal(runaway, 64, 64, Rounding::kOptimistic), GridOverflow);
}

TEST(DpOptimal, ZeroHorizon) {
  const DpResult r = dp_optimal({0.5, 0.5, 0, 0.2, 0.5}, 8, 8, Rounding::kOptimistic);
  EXPECT_EQ(r.wins_bound, 0);
}

TEST(LagrangianValue, Examples) {
  const AdversaryProblem p{0.5, 0.5, 1, 0.5, 0.5};
  const WinSequence s = evaluate_sequence(p, Bits{1});
  EXPECT_DOUBLE_EQ(lagrangian_value(p, s, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(lagrangian_value(p, s, 0.0), 1.0);
  const AdversaryProblem q{0.3, 0.7, 4, 0.25, 0.3};
  const WinSequence none = evaluate_sequence(q, Bits{0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(lagrangian_value(q, none, 0.2), 0.2 * 4 * 0.7);
  const WinSequence some = evaluate_sequence(q, Bits{1, 0, 1, 1});
  EXPECT_DOUBLE_EQ(lagrangian_value(q, some, 0.0), 3.0);
}

TEST(LagrangianValue, WeakDualityOnFeasibleSequences) {
  for (int k = 1; k <= 9; k += 2) {
    const double rho_o = k / 10.0;
    const AdversaryProblem p{1.0 - rho_o, rho_o, 10, 0.3, 1.0 - rho_o};
    const double lambda = p.rho_l / ((p.rho_l + p.rho_o) * (p.rho_l + p.rho_o));
    for (std::uint32_t mask = 0; mask < (1u << 10); ++mask) {
      Bits x(10);
      for (int t = 0; t < 10; ++t) x[static_cast<std::size_t>(t)] = (mask >> t) & 1u;
      const WinSequence s = evaluate_sequence(p, x);
      if (!s.feasible) continue;
      EXPECT_LE(static_cast<double>(s.wins), lagrangian_value(p, s, lambda) + 1e-12);
    }
  }
}

TEST(Certificate, CoefficientsAndExamples) {
  const LagrangianCertificate c = LagrangianCertificate::make(0.5, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(c.lambda, 0.5);
  EXPECT_DOUBLE_EQ(c.linear_coeff, 0.5);
  // g(b) = b^2 - 3b + 4 for these parameters.
  for (double b : {0.0, 0.5, 1.0, 2.5}) EXPECT_NEAR(c.g(b), b * b - 3 * b + 4, 1e-12);
  EXPECT_DOUBLE_EQ(interval_lagrangian_bound(c, 0, 0.5), 2.75);
  EXPECT_DOUBLE_EQ(interval_lagrangian_bound(c, 2, 0.5), 3.75);
  EXPECT_DOUBLE_EQ(c.g_argmin(), 1.5);
  EXPECT_THROW(interval_lagrangian_bound(c, -1, 0.5), InvalidInput);
  EXPECT_THROW(interval_lagrangian_bound(c, 1, -0.1), InvalidInput);
}

TEST(Certificate, GIsNonNegativeWithMinimumAtArgmin) {
  for (int i = 1; i <= 9; ++i) {
    for (int j = 1; j <= 9; ++j) {
      for (double eta : {0.01, 0.1, 0.25, 0.5, 0.9}) {
        const auto c = LagrangianCertificate::make(i / 10.0, j / 10.0, eta);
        const double at_min = c.g(c.g_argmin());
        EXPECT_GE(at_min, 0.0);
        for (double b = 0.0; b <= 4.0; b += 0.05) {
          EXPECT_GE(c.g(b), at_min - 1e-12);
        }
      }
    }
  }
}

TEST(Certificate, InductionStepHoldsOnGrid) {
  for (int i = 1; i <= 9; ++i) {
    for (int j = 1; j <= 9; ++j) {
      for (double eta : {0.05, 0.1, 0.25, 0.5}) {
        const auto c = LagrangianCertificate::make(i / 10.0, j / 10.0, eta);
        for (double b = 0.0; b <= 3.0; b += 0.01) {
          EXPECT_GE(induction_step_slack(c, b), -1e-12)
              << i << " " << j << " " << eta << " " << b;
        }
      }
    }
  }
}

TEST(Certificate, WindowsDominateEverySequence) {
  for (int k = 1; k <= 9; k += 4) {
    const double rho_o = k / 10.0;
    for (double eta : {0.1, 0.5}) {
      const AdversaryProblem p{1.0 - rho_o, rho_o, 10, eta, 1.0 - rho_o};
      const CertificateCheck check = verify_certificate_windows(p);
      EXPECT_EQ(check.violations, 0);
      EXPECT_EQ(check.sequences, 1024);
      EXPECT_EQ(check.windows, 1024 * 11);
      EXPECT_GE(check.min_slack, 0.0);
    }
  }
  EXPECT_THROW(verify_certificate_windows({0.5, 0.5, 25, 0.2, 0.5}), InstanceTooLarge);
}

TEST(WinCap, Examples) {
  EXPECT_DOUBLE_EQ(win_cap(0.5, 0.5, 100, 0.1), 80.0);
  EXPECT_DOUBLE_EQ(win_cap(0.5, 0.5, 100, 0.2), 80.0);
  EXPECT_NEAR(win_cap(0.5, 1e-12, 100, 0.2), 0.2 * 100 + 10, 1e-9);
  EXPECT_THROW(win_cap(0.0, 0.5, 10, 0.1), InvalidInput);
}

TEST(DualSweep, EveryMultiplierBoundsTheOptimum) {
  const auto p = AdversaryProblem::standard_instance(0.6, 0.4, 12);
  const std::int64_t exact = enumerate_optimal(p).wins;
  const std::vector<double> lambdas{0.0, 0.1, 0.24, 0.6, 1.0, 2.0};
  const auto points = lagrangian_dual_sweep(p, lambdas);
  ASSERT_EQ(points.size(), lambdas.size());
  EXPECT_DOUBLE_EQ(points[0].bound, 12.0);
  for (const DualPoint& d : points) {
    EXPECT_GE(d.bound, static_cast<double>(exact) - 1e-12) << d.lambda;
  }
}

TEST(Reduction, SingleRound) {
  const std::vector<double> bids{0.9};
  const ReductionResult r =
      match_bids_reduction({0.5, 0.5, 0.1}, bids, AuctionFormat::kFirstPrice);
  EXPECT_DOUBLE_EQ(r.original_cost, 0.9);
  EXPECT_DOUBLE_EQ(r.transformed.bid(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(r.transformed_cost, 0.5);
  EXPECT_EQ(r.original_wins, 1);
  EXPECT_EQ(r.transformed_wins, 1);
  EXPECT_TRUE(r.holds());
}

TEST(Reduction, SilentOptimizer) {
  const std::vector<double> bids(8, 0.0);
  for (AuctionFormat f : {AuctionFormat::kFirstPrice, AuctionFormat::kSecondPrice}) {
    const ReductionResult r = match_bids_reduction({0.5, 0.3, 0.2}, bids, f);
    EXPECT_EQ(r.original_wins, 0);
    EXPECT_EQ(r.transformed_wins, 0);
    EXPECT_EQ(r.original_cost, 0.0);
    EXPECT_EQ(r.transformed_cost, 0.0);
    EXPECT_TRUE(r.holds());
  }
}

TEST(Reduction, RandomBidVectors) {
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double rho = 0.2 + 0.6 * u(rng);
    const LearnerSpec learner{rho, rho * u(rng), 0.05 + 0.5 * u(rng)};
    std::vector<double> bids(12);
    for (double& b : bids) b = 1.5 * u(rng);
    for (AuctionFormat f : {AuctionFormat::kFirstPrice, AuctionFormat::kSecondPrice}) {
      const ReductionResult r = match_bids_reduction(learner, bids, f);
      EXPECT_TRUE(r.same_win_pattern) << k;
      EXPECT_EQ(r.original_wins, r.transformed_wins) << k;
      EXPECT_LE(r.transformed_cost, r.original_cost + 1e-12) << k;
      EXPECT_TRUE(r.learner_bids_dominated) << k;
    }
  }
}

}  // namespace
}  // namespace pacing_dyn::adversary
