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

#include "pacing_dyn/auction_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pacing_dyn/errors.hpp"

namespace pacing_dyn {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t seed_of(const TieBreak& tie_break) {
  if (const auto* r = std::get_if<tie_break::SeededRandom>(&tie_break)) {
    return r->seed;
  }
  return 0;
}

}  // namespace

double MarketConfig::budget(int agent) const {
  return agents.at(agent).rho * static_cast<double>(horizon);
}

std::vector<double> MarketConfig::rhos() const {
  std::vector<double> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.rho);
  return out;
}

std::vector<double> MarketConfig::initial_bids() const {
  std::vector<double> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.initial_bid);
  return out;
}

void MarketConfig::validate() const {
  if (agents.empty()) throw InvalidInput("market needs at least one agent");
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput(fmt::format("eta must lie in (0,1), got {}", eta));
  }
  const int n = num_agents();
  double rho_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const AgentSpec& a = agents[i];
    if (a.id != i) {
      throw InvalidInput(fmt::format("agent {} has id {}", i, a.id));
    }
    if (!(a.rho > 0.0)) {
      throw InvalidInput(fmt::format("agent {}: rho must be > 0", i));
    }
    if (!(a.initial_bid >= 0.0)) {
      throw InvalidInput(fmt::format("agent {}: initial bid must be >= 0", i));
    }
    rho_sum += a.rho;
    std::visit(
        Overloaded{
            [&](const policy::PrimalPacing&) {
              if (a.initial_bid > a.rho) {
                throw InvalidInput(fmt::format(
                    "agent {}: pacing initial bid {} exceeds rho {}", i,
                    a.initial_bid, a.rho));
              }
            },
            [&](const policy::Scripted& s) {
              if (static_cast<std::int64_t>(s.bids.size()) < horizon) {
                throw InvalidInput(fmt::format(
                    "agent {}: scripted schedule has {} bids, horizon is {}",
                    i, s.bids.size(), horizon));
              }
              for (double b : s.bids) {
                if (!(b >= 0.0)) {
                  throw InvalidInput(
                      fmt::format("agent {}: scripted bids must be >= 0", i));
                }
              }
            },
            [&](const policy::MatchLearner& m) {
              if (m.learner < 0 || m.learner >= n || m.learner == i) {
                throw InvalidInput(
                    fmt::format("agent {}: bad match target {}", i, m.learner));
              }
              if (std::holds_alternative<policy::MatchLearner>(
                      agents[m.learner].policy)) {
                throw InvalidInput(fmt::format(
                    "agent {}: match target {} is itself a matcher", i,
                    m.learner));
              }
            }},
        a.policy);
  }
  if (normalize_budgets && std::abs(rho_sum - 1.0) > 1e-12) {
    throw InvalidInput(
        fmt::format("budget shares must sum to 1, got {:.17g}", rho_sum));
  }
  if (const auto* f = std::get_if<tie_break::FavorAgent>(&tie_break)) {
    if (f->agent < 0 || f->agent >= n) {
      throw InvalidInput(fmt::format("favored agent {} out of range", f->agent));
    }
  }
}

Resolution select_winner(std::span<const double> bids, AuctionFormat format,
                         const TieBreak& tie_break, std::mt19937_64* rng) {
  if (bids.empty()) throw InvalidInput("empty bid vector");
  const int n = static_cast<int>(bids.size());
  double top = bids[0];
  for (double b : bids) {
    if (!(b >= 0.0)) throw InvalidInput("bids must be non-negative");
    top = std::max(top, b);
  }
  auto tied = [&](int i) { return bids[i] >= top - kTieTolerance; };

  int winner = -1;
  std::visit(
      Overloaded{
          [&](const tie_break::LowestIndex&) {
            for (int i = 0; i < n && winner < 0; ++i) {
              if (tied(i)) winner = i;
            }
          },
          [&](const tie_break::HighestIndex&) {
            for (int i = n - 1; i >= 0 && winner < 0; --i) {
              if (tied(i)) winner = i;
            }
          },
          [&](const tie_break::FavorAgent& f) {
            if (f.agent >= 0 && f.agent < n && tied(f.agent)) {
              winner = f.agent;
              return;
            }
            for (int i = 0; i < n && winner < 0; ++i) {
              if (tied(i)) winner = i;
            }
          },
          [&](const tie_break::SeededRandom& r) {
            int count = 0;
            for (int i = 0; i < n; ++i) count += tied(i) ? 1 : 0;
            std::uint64_t pick = 0;
            if (count > 1) {
              if (rng != nullptr) {
                pick = (*rng)() % static_cast<std::uint64_t>(count);
              } else {
                std::mt19937_64 local(r.seed);
                pick = local() % static_cast<std::uint64_t>(count);
              }
            }
            for (int i = 0; i < n; ++i) {
              if (!tied(i)) continue;
              if (pick == 0) {
                winner = i;
                break;
              }
              --pick;
            }
          }},
      tie_break);

  double price = bids[winner];
  if (format == AuctionFormat::kSecondPrice) {
    double second = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i != winner) second = std::max(second, bids[i]);
    }
    // A tolerance tie can make the runner-up exceed the winner by < 1e-9.
    price = std::min(second, bids[winner]);
  }
  return {winner, price};
}

RoundResult resolve_round(std::span<const double> bids, AuctionFormat format,
                          const TieBreak& tie_break) {
  const Resolution r = select_winner(bids, format, tie_break);
  RoundResult out{r.winner, r.price, std::vector<double>(bids.size(), 0.0)};
  out.payments[r.winner] = r.price;
  return out;
}

double pacing_update(double bid, double rho, double payment, double eta) {
  if (!(bid >= 0.0)) throw InvalidInput("bid must be non-negative");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0,1)");
  if (!(payment >= 0.0)) throw InvalidInput("payment must be non-negative");
  if (payment > bid) {
    throw InvalidInput(
        fmt::format("payment {} exceeds own bid {}", payment, bid));
  }
  return bid + eta * (rho - payment);
}

// ---------------------------------------------------------------- Trace

std::span<const double> Trace::bids(std::int64_t t) const {
  if (t < 1 || t > num_rounds() + 1) {
    throw InvalidInput(fmt::format("round {} outside trace [1, {}]", t,
                                   num_rounds() + 1));
  }
  const auto n = static_cast<std::size_t>(num_agents_);
  return std::span<const double>(bids_).subspan(
      static_cast<std::size_t>(t - 1) * n, n);
}

RoundRecord Trace::round(std::int64_t t) const {
  RoundRecord r;
  r.round = t;
  auto b = bids(t);
  if (t > num_rounds()) throw InvalidInput("no record for final bids");
  r.bids.assign(b.begin(), b.end());
  r.winner = winner(t);
  r.price = price(t);
  r.payments.assign(b.size(), 0.0);
  r.payments[r.winner] = r.price;
  return r;
}

TraceBuilder::TraceBuilder(MarketConfig config) {
  trace_.num_agents_ = config.num_agents();
  trace_.config_ = std::move(config);
}

void TraceBuilder::reserve(std::int64_t rounds) {
  const auto n = static_cast<std::size_t>(trace_.num_agents_);
  trace_.bids_.reserve(static_cast<std::size_t>(rounds + 1) * n);
  trace_.winners_.reserve(static_cast<std::size_t>(rounds));
  trace_.prices_.reserve(static_cast<std::size_t>(rounds));
}

void TraceBuilder::add_round(std::span<const double> bids, int winner,
                             double price) {
  if (static_cast<int>(bids.size()) != trace_.num_agents_) {
    throw InvalidInput("bid vector size does not match agent count");
  }
  if (winner < 0 || winner >= trace_.num_agents_) {
    throw InvalidInput(fmt::format("winner {} out of range", winner));
  }
  trace_.bids_.insert(trace_.bids_.end(), bids.begin(), bids.end());
  trace_.winners_.push_back(winner);
  trace_.prices_.push_back(price);
}

Trace TraceBuilder::finish(std::span<const double> final_bids) && {
  if (static_cast<int>(final_bids.size()) != trace_.num_agents_) {
    throw InvalidInput("final bid vector size does not match agent count");
  }
  if (trace_.num_rounds() != trace_.config_.horizon) {
    throw InvalidInput(fmt::format("trace has {} rounds, horizon is {}",
                                   trace_.num_rounds(),
                                   trace_.config_.horizon));
  }
  trace_.bids_.insert(trace_.bids_.end(), final_bids.begin(),
                      final_bids.end());
  return std::move(trace_);
}

// ---------------------------------------------------------------- Market

Market::Market(MarketConfig config)
    : config_(std::move(config)), rng_(seed_of(config_.tie_break)) {
  config_.validate();
  states_.resize(config_.agents.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    states_[i].bid = config_.agents[i].initial_bid;
  }
  posted_.resize(config_.agents.size(), 0.0);
}

void Market::compute_bids(std::int64_t t, std::vector<double>& out) const {
  const int n = config_.num_agents();
  out.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const AgentSpec& a = config_.agents[i];
    if (a.is_pacing()) {
      out[i] = states_[i].bid;
    } else if (const auto* s = std::get_if<policy::Scripted>(&a.policy)) {
      const double wanted = t - 1 < static_cast<std::int64_t>(s->bids.size())
                                ? s->bids[static_cast<std::size_t>(t - 1)]
                                : 0.0;
      const double remaining =
          std::max(0.0, config_.budget(i) - states_[i].spent);
      out[i] = std::min(wanted, remaining);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (const auto* m =
            std::get_if<policy::MatchLearner>(&config_.agents[i].policy)) {
      out[i] = out[m->learner];
    }
  }
}

std::vector<double> Market::upcoming_bids() const {
  std::vector<double> out;
  compute_bids(round_, out);
  return out;
}

Resolution Market::step() { return step(config_.tie_break); }

Resolution Market::step(const TieBreak& override_tie_break) {
  if (done()) throw InvalidInput("market horizon exhausted");
  compute_bids(round_, posted_);
  const Resolution r =
      select_winner(posted_, config_.format, override_tie_break, &rng_);
  const int n = config_.num_agents();
  for (int i = 0; i < n; ++i) {
    AgentState& s = states_[i];
    const double pay = i == r.winner ? r.price : 0.0;
    s.spent += pay;
    if (i == r.winner) ++s.wins;
    if (config_.agents[i].is_pacing()) {
      s.bid = pacing_update(posted_[i], config_.agents[i].rho, pay,
                            config_.eta);
    } else {
      s.bid = posted_[i];
    }
  }
  ++round_;
  return r;
}

Trace simulate(const MarketConfig& config) {
  Market market(config);
  TraceBuilder builder(config);
  builder.reserve(config.horizon);
  while (!market.done()) {
    const Resolution r = market.step();
    builder.add_round(market.posted_bids(), r.winner, r.price);
  }
  const std::vector<double> final_bids = market.upcoming_bids();
  return std::move(builder).finish(final_bids);
}

std::vector<double> simulate_streaming(
    const MarketConfig& config,
    const std::function<void(const RoundView&)>& on_round) {
  Market market(config);
  while (!market.done()) {
    const std::int64_t t = market.next_round();
    const Resolution r = market.step();
    on_round(RoundView{t, market.posted_bids(), r.winner, r.price,
                       market.states()});
  }
  return market.upcoming_bids();
}

PaymentIdentity payment_identity(const Trace& trace, int agent) {
  const MarketConfig& cfg = trace.config();
  if (agent < 0 || agent >= cfg.num_agents()) {
    throw InvalidInput(fmt::format("agent {} out of range", agent));
  }
  if (!cfg.agents[agent].is_pacing()) {
    throw InvalidInput("payment identity applies to pacing agents only");
  }
  const std::int64_t horizon = trace.num_rounds();
  double total = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) total += trace.payment(t, agent);
  const double rhs =
      cfg.agents[agent].rho * static_cast<double>(horizon) +
      (trace.bid(1, agent) - trace.bid(horizon + 1, agent)) / cfg.eta;
  return {total, rhs};
}

}  // namespace pacing_dyn
