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

// Deterministic mechanics of a repeated single-item auction market whose
// bidders adjust raw bids by primal budget pacing:
//
//   b_{t+1} = b_t + eta * (rho - p_t)
//
// where rho * T is the agent's total budget and p_t its payment in round t.

#ifndef PACING_DYN_AUCTION_ENGINE_HPP_
#define PACING_DYN_AUCTION_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace pacing_dyn {

enum class AuctionFormat { kFirstPrice, kSecondPrice };

// Bids within this absolute distance of the maximum count as tied.
inline constexpr double kTieTolerance = 1e-9;

namespace tie_break {
struct LowestIndex {};
struct HighestIndex {};
struct SeededRandom {
  std::uint64_t seed = 0;
};
// The favored agent wins whenever it is among the tied maximal bidders;
// otherwise the lowest tied index wins.
struct FavorAgent {
  int agent = 0;
};
}  // namespace tie_break

using TieBreak = std::variant<tie_break::LowestIndex, tie_break::HighestIndex,
                              tie_break::SeededRandom, tie_break::FavorAgent>;

namespace policy {
struct PrimalPacing {};
// Fixed bid schedule, one entry per round; capped at remaining budget.
struct Scripted {
  std::vector<double> bids;
};
// Bids exactly the designated agent's bid of the same round.
struct MatchLearner {
  int learner = 0;
};
}  // namespace policy

using AgentPolicy =
    std::variant<policy::PrimalPacing, policy::Scripted, policy::MatchLearner>;

struct AgentSpec {
  int id = 0;
  double rho = 0.0;          // budget share; total budget is rho * T
  double initial_bid = 0.0;  // b^(1)
  AgentPolicy policy = policy::PrimalPacing{};

  bool is_pacing() const {
    return std::holds_alternative<policy::PrimalPacing>(policy);
  }
};

struct MarketConfig {
  std::vector<AgentSpec> agents;
  std::int64_t horizon = 0;
  double eta = 0.1;
  AuctionFormat format = AuctionFormat::kFirstPrice;
  TieBreak tie_break = tie_break::LowestIndex{};
  bool normalize_budgets = true;

  int num_agents() const { return static_cast<int>(agents.size()); }
  double budget(int agent) const;
  std::vector<double> rhos() const;
  std::vector<double> initial_bids() const;

  // Throws InvalidInput naming the violated constraint.
  void validate() const;
};

struct AgentState {
  double bid = 0.0;  // bid for the upcoming round
  double spent = 0.0;
  std::int64_t wins = 0;
};

struct RoundRecord {
  std::int64_t round = 0;
  std::vector<double> bids;
  int winner = 0;
  double price = 0.0;
  std::vector<double> payments;
};

struct Resolution {
  int winner = 0;
  double price = 0.0;
};

// Winner and price only. `rng` is consulted for SeededRandom ties; when null
// a generator seeded from the policy's seed is used for this call alone.
Resolution select_winner(std::span<const double> bids, AuctionFormat format,
                         const TieBreak& tie_break,
                         std::mt19937_64* rng = nullptr);

struct RoundResult {
  int winner = 0;
  double price = 0.0;
  std::vector<double> payments;
};

RoundResult resolve_round(std::span<const double> bids, AuctionFormat format,
                          const TieBreak& tie_break);

// One primal pacing step. Requires bid >= 0, 0 < eta < 1 and
// 0 <= payment <= bid.
double pacing_update(double bid, double rho, double payment, double eta);

// Immutable record of a finished run. Bids are stored column-major by round
// so multi-million round traces stay compact.
class Trace {
 public:
  Trace() = default;

  const MarketConfig& config() const { return config_; }
  int num_agents() const { return num_agents_; }
  std::int64_t num_rounds() const {
    return static_cast<std::int64_t>(winners_.size());
  }

  // Bid vector of round t for t in [1, T + 1]; T + 1 yields the final bids.
  std::span<const double> bids(std::int64_t t) const;
  double bid(std::int64_t t, int agent) const { return bids(t)[agent]; }
  std::span<const double> final_bids() const { return bids(num_rounds() + 1); }

  int winner(std::int64_t t) const { return winners_.at(t - 1); }
  double price(std::int64_t t) const { return prices_.at(t - 1); }
  double payment(std::int64_t t, int agent) const {
    return winner(t) == agent ? price(t) : 0.0;
  }
  std::span<const int> winners() const { return winners_; }

  RoundRecord round(std::int64_t t) const;

 private:
  friend class TraceBuilder;

  MarketConfig config_;
  int num_agents_ = 0;
  std::vector<double> bids_;  // (T + 1) * n, last block holds final bids
  std::vector<int> winners_;
  std::vector<double> prices_;
};

// Assembles a Trace round by round. Performs no policy validation so that
// imported or hand-constructed traces can be analyzed.
class TraceBuilder {
 public:
  explicit TraceBuilder(MarketConfig config);

  void reserve(std::int64_t rounds);
  void add_round(std::span<const double> bids, int winner, double price);
  // Requires exactly config.horizon rounds to have been added.
  Trace finish(std::span<const double> final_bids) &&;

 private:
  Trace trace_;
};

// Stateful market stepping one round at a time.
class Market {
 public:
  explicit Market(MarketConfig config);

  const MarketConfig& config() const { return config_; }
  std::int64_t next_round() const { return round_; }
  bool done() const { return round_ > config_.horizon; }
  std::span<const AgentState> states() const { return states_; }

  // Runs one round using the configured tie-break, or `override_tie_break`.
  Resolution step();
  Resolution step(const TieBreak& override_tie_break);

  // Bids posted in the most recent round.
  std::span<const double> posted_bids() const { return posted_; }
  // Bids the agents would post in the next round (b^(t) for t = next_round()).
  std::vector<double> upcoming_bids() const;

 private:
  void compute_bids(std::int64_t t, std::vector<double>& out) const;

  MarketConfig config_;
  std::vector<AgentState> states_;
  std::vector<double> posted_;
  std::int64_t round_ = 1;
  std::mt19937_64 rng_;
};

Trace simulate(const MarketConfig& config);

struct RoundView {
  std::int64_t round = 0;
  std::span<const double> bids;
  int winner = 0;
  double price = 0.0;
  std::span<const AgentState> states_after;
};

// Runs the market without materializing a trace; returns b^(T+1).
std::vector<double> simulate_streaming(
    const MarketConfig& config,
    const std::function<void(const RoundView&)>& on_round);

struct PaymentIdentity {
  double lhs = 0.0;  // total payment
  double rhs = 0.0;  // rho * T + (b^(1) - b^(T+1)) / eta
};

PaymentIdentity payment_identity(const Trace& trace, int agent);

}  // namespace pacing_dyn

#endif  // PACING_DYN_AUCTION_ENGINE_HPP_
