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

#include <gtest/gtest.h>

#include "pacing_dyn/auction_engine.hpp"
#include "pacing_dyn/errors.hpp"

namespace pacing_dyn {
namespace {

MarketConfig two_agent_config(std::int64_t horizon) {
  MarketConfig c;
  c.agents = {AgentSpec{0, 0.5, 0.5}, AgentSpec{1, 0.5, 0.4}};
  c.horizon = horizon;
  c.eta = 0.1;
  return c;
}

TEST(ResolveRound, FirstPricePaysOwnBid) {
  const std::vector<double> bids{0.5, 0.4};
  const RoundResult r =
      resolve_round(bids, AuctionFormat::kFirstPrice, tie_break::LowestIndex{});
  EXPECT_EQ(r.winner, 0);
  EXPECT_DOUBLE_EQ(r.price, 0.5);
  EXPECT_EQ(r.payments, (std::vector<double>{0.5, 0.0}));
}

TEST(ResolveRound, SecondPricePaysRunnerUp) {
  const std::vector<double> bids{0.5, 0.4};
  const RoundResult r =
      resolve_round(bids, AuctionFormat::kSecondPrice, tie_break::LowestIndex{});
  EXPECT_EQ(r.winner, 0);
  EXPECT_DOUBLE_EQ(r.price, 0.4);
  EXPECT_EQ(r.payments, (std::vector<double>{0.4, 0.0}));
}

TEST(ResolveRound, TieBreakPolicies) {
  const std::vector<double> bids{0.5, 0.5};
  EXPECT_EQ(resolve_round(bids, AuctionFormat::kFirstPrice,
                          tie_break::HighestIndex{}).winner, 1);
  EXPECT_EQ(resolve_round(bids, AuctionFormat::kFirstPrice,
                          tie_break::LowestIndex{}).winner, 0);
  EXPECT_EQ(resolve_round(bids, AuctionFormat::kFirstPrice,
                          tie_break::FavorAgent{1}).winner, 1);
  EXPECT_DOUBLE_EQ(resolve_round(bids, AuctionFormat::kFirstPrice,
                                 tie_break::HighestIndex{}).price, 0.5);
}

TEST(ResolveRound, TieToleranceIsAbsolute) {
  const std::vector<double> near{0.5, 0.5 + 0.5e-9};
  EXPECT_EQ(resolve_round(near, AuctionFormat::kFirstPrice,
                          tie_break::LowestIndex{}).winner, 0);
  const std::vector<double> apart{0.5, 0.5 + 2e-9};
  EXPECT_EQ(resolve_round(apart, AuctionFormat::kFirstPrice,
                          tie_break::LowestIndex{}).winner, 1);
}

TEST(ResolveRound, FavoredAgentOutsideTieLoses) {
  const std::vector<double> bids{0.7, 0.5};
  EXPECT_EQ(resolve_round(bids, AuctionFormat::kFirstPrice,
                          tie_break::FavorAgent{1}).winner, 0);
}

TEST(ResolveRound, SingleBidderSecondPriceIsFree) {
  const std::vector<double> bids{0.8};
  const RoundResult r =
      resolve_round(bids, AuctionFormat::kSecondPrice, tie_break::LowestIndex{});
  EXPECT_EQ(r.winner, 0);
  EXPECT_EQ(r.price, 0.0);
}

TEST(ResolveRound, EmptyBidsRejected) {
  EXPECT_THROW(resolve_round({}, AuctionFormat::kFirstPrice,
                             tie_break::LowestIndex{}),
               InvalidInput);
}

TEST(PacingUpdate, Examples) {
  EXPECT_DOUBLE_EQ(pacing_update(1.0, 0.5, 1.0, 0.1), 0.95);
  EXPECT_DOUBLE_EQ(pacing_update(0.5, 0.5, 0.5, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(pacing_update(0.3, 0.5, 0.0, 0.1), 0.35);
}

TEST(PacingUpdate, PaymentAboveBidRejected) {
  EXPECT_THROW(pacing_update(0.3, 0.5, 0.4, 0.1), InvalidInput);
}

TEST(PacingUpdate, FloorProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double bid = 2.0 * u(rng);
    const double rho = u(rng) + 1e-3;
    const double payment = bid * u(rng);
    const double eta = 0.001 + 0.998 * u(rng);
    const double next = pacing_update(bid, rho, payment, eta);
    EXPECT_GE(next, std::min(bid, rho) - 1e-15);
    EXPECT_GE(next, 0.0);
  }
}

TEST(Simulate, TwoRoundExampleMatchesHandUpdate) {
  const Trace trace = simulate(two_agent_config(2));
  // Oracle: apply the update by hand with the first-price rule.
  std::vector<double> b{0.5, 0.4};
  for (std::int64_t t = 1; t <= 2; ++t) {
    const int w = b[1] > b[0] ? 1 : 0;
    EXPECT_EQ(trace.winner(t), w);
    EXPECT_DOUBLE_EQ(trace.price(t), b[static_cast<std::size_t>(w)]);
    for (std::size_t i = 0; i < 2; ++i) {
      const double paid = static_cast<int>(i) == w ? b[i] : 0.0;
      b[i] = b[i] + 0.1 * (0.5 - paid);
    }
    EXPECT_DOUBLE_EQ(trace.bid(t + 1, 0), b[0]);
    EXPECT_DOUBLE_EQ(trace.bid(t + 1, 1), b[1]);
  }
  EXPECT_DOUBLE_EQ(trace.bid(2, 1), 0.45);
  EXPECT_DOUBLE_EQ(trace.final_bids()[1], 0.5);
  EXPECT_DOUBLE_EQ(trace.final_bids()[0], 0.5);
}

TEST(Simulate, ZeroHorizonKeepsInitialBids) {
  const Trace trace = simulate(two_agent_config(0));
  EXPECT_EQ(trace.num_rounds(), 0);
  EXPECT_EQ(std::vector<double>(trace.final_bids().begin(), trace.final_bids().end()),
            (std::vector<double>{0.5, 0.4}));
  const PaymentIdentity id = payment_identity(trace, 0);
  EXPECT_EQ(id.lhs, 0.0);
  EXPECT_EQ(id.rhs, 0.0);
}

TEST(Simulate, SingleAgentFixedPoint) {
  MarketConfig c;
  c.agents = {AgentSpec{0, 1.0, 1.0}};
  c.horizon = 10;
  c.eta = 0.5;
  const Trace trace = simulate(c);
  for (std::int64_t t = 1; t <= 10; ++t) {
    EXPECT_EQ(trace.winner(t), 0);
    EXPECT_DOUBLE_EQ(trace.price(t), 1.0);
    EXPECT_DOUBLE_EQ(trace.bid(t + 1, 0), 1.0);
  }
  const PaymentIdentity id = payment_identity(trace, 0);
  EXPECT_DOUBLE_EQ(id.lhs, 10.0);
  EXPECT_DOUBLE_EQ(id.rhs, 10.0);
}

TEST(PaymentIdentity, TwoRoundTrace) {
  const PaymentIdentity id = payment_identity(simulate(two_agent_config(2)), 0);
  EXPECT_DOUBLE_EQ(id.lhs, 1.0);
  EXPECT_NEAR(id.rhs, 1.0, 1e-12);
}

TEST(PaymentIdentity, ScriptedAgentRejected) {
  MarketConfig c = two_agent_config(3);
  c.agents[1].policy = policy::Scripted{{0.1, 0.2, 0.3}};
  EXPECT_THROW(payment_identity(simulate(c), 1), InvalidInput);
}

TEST(MarketConfig, ValidationErrors) {
  MarketConfig c = two_agent_config(5);
  c.eta = 1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = two_agent_config(5);
  c.agents[0].rho = 0.4;
  EXPECT_THROW(c.validate(), InvalidInput);  // shares sum to 0.9
  c.agents[0].initial_bid = 0.4;
  c.normalize_budgets = false;
  EXPECT_NO_THROW(c.validate());
  c = two_agent_config(5);
  c.agents[1].initial_bid = 0.6;  // pacing bid above rho
  EXPECT_THROW(c.validate(), InvalidInput);
  c = two_agent_config(5);
  c.agents[1].policy = policy::Scripted{{0.1, 0.2}};
  EXPECT_THROW(simulate(c), InvalidInput);  // schedule shorter than T
}

TEST(Simulate, ScriptedBidsCappedAtRemainingBudget) {
  MarketConfig c;
  c.agents = {AgentSpec{0, 0.5, 0.0}, AgentSpec{1, 0.5, 0.0, policy::Scripted{{0.8, 0.8, 0.8, 0.8}}}};
  c.horizon = 4;
  c.eta = 0.1;
  const Trace trace = simulate(c);
  // Budget 2: pays 0.8, 0.8, then only 0.4 remains, then nothing.
  EXPECT_DOUBLE_EQ(trace.bid(3, 1), 0.4);
  EXPECT_DOUBLE_EQ(trace.bid(4, 1), 0.0);
  double spent = 0.0;
  for (std::int64_t t = 1; t <= 4; ++t) spent += trace.payment(t, 1);
  EXPECT_LE(spent, 2.0 + 1e-12);
}

TEST(Simulate, MatchLearnerCopiesLearnerBid) {
  MarketConfig c;
  c.agents = {AgentSpec{0, 0.5, 0.3}, AgentSpec{1, 0.5, 0.0, policy::MatchLearner{0}}};
  c.horizon = 20;
  c.eta = 0.2;
  const Trace trace = simulate(c);
  for (std::int64_t t = 1; t <= 20; ++t) {
    EXPECT_EQ(trace.bid(t, 1), trace.bid(t, 0));
  }
}

MarketConfig random_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1 + static_cast<int>(rng() % 5);
  MarketConfig c;
  c.horizon = 100 + static_cast<std::int64_t>(rng() % 400);
  c.eta = 0.01 + 0.9 * u(rng);
  c.format = rng() % 2 ? AuctionFormat::kFirstPrice : AuctionFormat::kSecondPrice;
  c.tie_break = tie_break::SeededRandom{seed};
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& v : w) total += (v = 0.1 + u(rng));
  for (int i = 0; i < n; ++i) {
    const double rho = w[static_cast<std::size_t>(i)] / total;
    AgentSpec a{i, rho, rho * u(rng)};
    if (i > 0 && rng() % 2) {
      std::vector<double> script(static_cast<std::size_t>(c.horizon));
      for (double& b : script) b = 2.0 * u(rng);
      a.policy = policy::Scripted{script};
    }
    c.agents.push_back(a);
  }
  return c;
}

TEST(SimulateProperty, BudgetFeasibilityAndIdentity) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const MarketConfig c = random_config(seed);
    const Trace trace = simulate(c);
    const double horizon = static_cast<double>(c.horizon);
    for (const AgentSpec& a : c.agents) {
      if (!a.is_pacing()) continue;
      const PaymentIdentity id = payment_identity(trace, a.id);
      EXPECT_NEAR(id.lhs, id.rhs, 1e-6 * horizon) << "seed " << seed;
      EXPECT_LE(id.lhs, a.rho * horizon + 1e-9) << "seed " << seed;
      for (std::int64_t t = 1; t <= c.horizon; ++t) {
        EXPECT_GE(trace.bid(t + 1, a.id), 0.0);
        EXPECT_GE(trace.bid(t + 1, a.id),
                  std::min(trace.bid(t, a.id), a.rho) - 1e-12);
      }
    }
  }
}

TEST(SimulateProperty, RoundRecordsFollowPaymentRule) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const MarketConfig c = random_config(seed);
    const Trace trace = simulate(c);
    for (std::int64_t t = 1; t <= c.horizon; ++t) {
      const RoundRecord r = trace.round(t);
      EXPECT_EQ(r.round, t);
      for (int i = 0; i < c.num_agents(); ++i) {
        if (i != r.winner) {
          EXPECT_EQ(r.payments[static_cast<std::size_t>(i)], 0.0);
        }
      }
      EXPECT_EQ(r.payments[static_cast<std::size_t>(r.winner)], r.price);
      if (c.format == AuctionFormat::kFirstPrice) {
        EXPECT_EQ(r.price, r.bids[static_cast<std::size_t>(r.winner)]);
      } else {
        double runner_up = 0.0;
        for (int i = 0; i < c.num_agents(); ++i) {
          if (i != r.winner) runner_up = std::max(runner_up, r.bids[static_cast<std::size_t>(i)]);
        }
        EXPECT_EQ(r.price, std::min(runner_up, r.bids[static_cast<std::size_t>(r.winner)]));
      }
    }
  }
}

TEST(SimulateProperty, Deterministic) {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    const MarketConfig c = random_config(seed);
    const Trace a = simulate(c);
    const Trace b = simulate(c);
    for (std::int64_t t = 1; t <= c.horizon + 1; ++t) {
      for (int i = 0; i < c.num_agents(); ++i) EXPECT_EQ(a.bid(t, i), b.bid(t, i));
    }
    EXPECT_TRUE(std::equal(a.winners().begin(), a.winners().end(), b.winners().begin()));
  }
}

TEST(SimulateStreaming, MatchesInMemoryTrace) {
  const MarketConfig c = random_config(42);
  const Trace trace = simulate(c);
  std::int64_t rounds = 0;
  const std::vector<double> final_bids =
      simulate_streaming(c, [&](const RoundView& v) {
        ++rounds;
        EXPECT_EQ(v.winner, trace.winner(v.round));
        EXPECT_EQ(v.price, trace.price(v.round));
      });
  EXPECT_EQ(rounds, c.horizon);
  for (int i = 0; i < c.num_agents(); ++i) {
    EXPECT_EQ(final_bids[static_cast<std::size_t>(i)], trace.final_bids()[static_cast<std::size_t>(i)]);
  }
}

TEST(TraceBuilder, RejectsWrongRoundCount) {
  TraceBuilder builder(two_agent_config(2));
  const std::vector<double> bids{0.5, 0.4};
  builder.add_round(bids, 0, 0.5);
  EXPECT_THROW(std::move(builder).finish(bids), InvalidInput);
}

}  // namespace
}  // namespace pacing_dyn
