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

#include "pacing_dyn/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "pacing_dyn/errors.hpp"

namespace pacing_dyn {
namespace {

using nlohmann::json;

json tie_break_to_json(const TieBreak& tb) {
  if (std::holds_alternative<tie_break::LowestIndex>(tb)) {
    return {{"kind", "lowest"}};
  }
  if (std::holds_alternative<tie_break::HighestIndex>(tb)) {
    return {{"kind", "highest"}};
  }
  if (const auto* r = std::get_if<tie_break::SeededRandom>(&tb)) {
    return {{"kind", "random"}, {"seed", r->seed}};
  }
  return {{"kind", "favor"},
          {"agent", std::get<tie_break::FavorAgent>(tb).agent}};
}

TieBreak tie_break_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lowest") return tie_break::LowestIndex{};
  if (kind == "highest") return tie_break::HighestIndex{};
  if (kind == "random") {
    return tie_break::SeededRandom{j.at("seed").get<std::uint64_t>()};
  }
  if (kind == "favor") return tie_break::FavorAgent{j.at("agent").get<int>()};
  throw InvalidInput("unknown tie-break kind: " + kind);
}

json policy_to_json(const AgentPolicy& p) {
  if (std::holds_alternative<policy::PrimalPacing>(p)) {
    return {{"kind", "pacing"}};
  }
  if (const auto* s = std::get_if<policy::Scripted>(&p)) {
    return {{"kind", "scripted"}, {"bids", s->bids}};
  }
  return {{"kind", "match"},
          {"learner", std::get<policy::MatchLearner>(p).learner}};
}

AgentPolicy policy_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pacing") return policy::PrimalPacing{};
  if (kind == "scripted") {
    return policy::Scripted{j.at("bids").get<std::vector<double>>()};
  }
  if (kind == "match") return policy::MatchLearner{j.at("learner").get<int>()};
  throw InvalidInput("unknown policy kind: " + kind);
}

std::string_view next_field(std::string_view& line) {
  const auto comma = line.find(',');
  std::string_view field = line.substr(0, comma);
  line = comma == std::string_view::npos ? std::string_view{}
                                         : line.substr(comma + 1);
  return field;
}

template <class T>
T parse_number(std::string_view field, std::int64_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(fmt::format("trace csv line {}: bad number '{}'", line_no,
                              field));
  }
  return value;
}

}  // namespace

json to_json(const MarketConfig& config) {
  json agents = json::array();
  for (const AgentSpec& a : config.agents) {
    agents.push_back({{"id", a.id},
                      {"rho", a.rho},
                      {"initial_bid", a.initial_bid},
                      {"policy", policy_to_json(a.policy)}});
  }
  return {{"agents", agents},
          {"horizon", config.horizon},
          {"eta", config.eta},
          {"format", config.format == AuctionFormat::kFirstPrice ? "first"
                                                                 : "second"},
          {"tie_break", tie_break_to_json(config.tie_break)},
          {"normalize_budgets", config.normalize_budgets}};
}

MarketConfig market_config_from_json(const json& j) {
  MarketConfig c;
  for (const json& a : j.at("agents")) {
    c.agents.push_back(AgentSpec{a.at("id").get<int>(),
                                 a.at("rho").get<double>(),
                                 a.at("initial_bid").get<double>(),
                                 policy_from_json(a.at("policy"))});
  }
  c.horizon = j.at("horizon").get<std::int64_t>();
  c.eta = j.at("eta").get<double>();
  const std::string format = j.at("format").get<std::string>();
  if (format == "first") {
    c.format = AuctionFormat::kFirstPrice;
  } else if (format == "second") {
    c.format = AuctionFormat::kSecondPrice;
  } else {
    throw InvalidInput("unknown auction format: " + format);
  }
  c.tie_break = tie_break_from_json(j.at("tie_break"));
  c.normalize_budgets = j.value("normalize_budgets", true);
  return c;
}

TraceCsvWriter::TraceCsvWriter(std::ostream& out, int num_agents)
    : out_(out), spent_(static_cast<std::size_t>(num_agents), 0.0) {
  out_ << kTraceCsvHeader << '\n';
}

void TraceCsvWriter::write_round(std::int64_t round,
                                 std::span<const double> bids, int winner,
                                 double price) {
  fmt::memory_buffer buf;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const bool won = static_cast<int>(i) == winner;
    const double pay = won ? price : 0.0;
    spent_[i] += pay;
    fmt::format_to(std::back_inserter(buf), "{},{},{:.17g},{},{:.17g},{:.17g}\n",
                   round, i, bids[i], won ? 1 : 0, pay, spent_[i]);
  }
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  TraceCsvWriter writer(out, trace.num_agents());
  for (std::int64_t t = 1; t <= trace.num_rounds(); ++t) {
    writer.write_round(t, trace.bids(t), trace.winner(t), trace.price(t));
  }
}

Trace read_trace_csv(std::istream& in, MarketConfig config,
                     std::optional<std::vector<double>> final_bids) {
  const int n = config.num_agents();
  std::string line;
  if (!std::getline(in, line)) throw IoError("trace csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) {
    throw IoError("trace csv header mismatch: '" + line + "'");
  }

  std::vector<double> bids;
  std::vector<int> winners;
  std::vector<double> prices;
  std::vector<double> row_bids(static_cast<std::size_t>(n));
  std::int64_t line_no = 1;
  std::int64_t expected_round = 1;
  int expected_agent = 0;
  int winner = -1;
  double price = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    const auto round = parse_number<std::int64_t>(next_field(rest), line_no);
    const auto agent = parse_number<int>(next_field(rest), line_no);
    const auto bid = parse_number<double>(next_field(rest), line_no);
    const auto flag = parse_number<int>(next_field(rest), line_no);
    const auto payment = parse_number<double>(next_field(rest), line_no);
    (void)parse_number<double>(next_field(rest), line_no);
    if (round != expected_round || agent != expected_agent) {
      throw IoError(fmt::format(
          "trace csv line {}: expected round {} agent {}, got {} {}", line_no,
          expected_round, expected_agent, round, agent));
    }
    row_bids[static_cast<std::size_t>(agent)] = bid;
    if (flag == 1) {
      if (winner >= 0) {
        throw IoError(fmt::format("trace csv round {}: two winners", round));
      }
      winner = agent;
      price = payment;
    }
    if (++expected_agent == n) {
      if (winner < 0) {
        throw IoError(fmt::format("trace csv round {}: no winner", round));
      }
      bids.insert(bids.end(), row_bids.begin(), row_bids.end());
      winners.push_back(winner);
      prices.push_back(price);
      expected_agent = 0;
      ++expected_round;
      winner = -1;
    }
  }
  if (expected_agent != 0) throw IoError("trace csv ends mid-round");

  const auto rounds = static_cast<std::int64_t>(winners.size());
  config.horizon = rounds;
  if (!final_bids) {
    std::vector<double> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (rounds == 0) {
        next[i] = config.agents[i].initial_bid;
        continue;
      }
      const double last = bids[static_cast<std::size_t>((rounds - 1) * n + i)];
      const double pay = winners.back() == i ? prices.back() : 0.0;
      next[i] = config.agents[i].is_pacing()
                    ? pacing_update(last, config.agents[i].rho, pay, config.eta)
                    : last;
    }
    final_bids = std::move(next);
  }

  TraceBuilder builder(std::move(config));
  builder.reserve(rounds);
  for (std::int64_t t = 0; t < rounds; ++t) {
    builder.add_round(
        std::span<const double>(bids).subspan(static_cast<std::size_t>(t * n),
                                              static_cast<std::size_t>(n)),
        winners[static_cast<std::size_t>(t)],
        prices[static_cast<std::size_t>(t)]);
  }
  return std::move(builder).finish(*final_bids);
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv) {
  std::filesystem::path meta = csv;
  meta += ".meta.json";
  return meta;
}

void save_trace_meta(const std::filesystem::path& csv,
                     const MarketConfig& config,
                     std::span<const double> final_bids) {
  const auto meta = meta_path_for(csv);
  std::ofstream out(meta);
  if (!out) throw IoError("cannot write " + meta.string());
  json j = {{"config", to_json(config)},
            {"final_bids", std::vector<double>(final_bids.begin(),
                                               final_bids.end())}};
  out << j.dump() << '\n';
}

void save_trace(const std::filesystem::path& csv, const Trace& trace) {
  {
    std::ofstream out(csv);
    if (!out) throw IoError("cannot write " + csv.string());
    write_trace_csv(out, trace);
    if (!out) throw IoError("write failed: " + csv.string());
  }
  save_trace_meta(csv, trace.config(), trace.final_bids());
}

Trace load_trace(const std::filesystem::path& csv) {
  const auto meta = meta_path_for(csv);
  std::ifstream meta_in(meta);
  if (!meta_in) throw IoError("missing trace metadata " + meta.string());
  json j;
  try {
    j = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw IoError(meta.string() + ": " + e.what());
  }
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  return read_trace_csv(in, market_config_from_json(j.at("config")),
                        j.at("final_bids").get<std::vector<double>>());
}

}  // namespace pacing_dyn
