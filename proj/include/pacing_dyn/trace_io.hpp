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

// Trace persistence. The CSV layout is one row per (round, agent):
//
//   round,agent,bid,winner_flag,payment,spent_cumulative
//
// Reals are written with 17 significant digits so a write/read cycle
// reproduces every double bit for bit. The CSV carries no market parameters;
// save_trace() writes them to a "<csv>.meta.json" sidecar.

#ifndef PACING_DYN_TRACE_IO_HPP_
#define PACING_DYN_TRACE_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "pacing_dyn/auction_engine.hpp"

namespace pacing_dyn {

inline constexpr const char* kTraceCsvHeader =
    "round,agent,bid,winner_flag,payment,spent_cumulative";

nlohmann::json to_json(const MarketConfig& config);
MarketConfig market_config_from_json(const nlohmann::json& j);

void write_trace_csv(std::ostream& out, const Trace& trace);

// Incremental writer for traces too long to hold in memory.
class TraceCsvWriter {
 public:
  TraceCsvWriter(std::ostream& out, int num_agents);
  void write_round(std::int64_t round, std::span<const double> bids,
                   int winner, double price);

 private:
  std::ostream& out_;
  std::vector<double> spent_;
};

// Rebuilds a trace from CSV. The config supplies agent specs and eta; its
// horizon is replaced by the number of rounds read. Missing final bids are
// reconstructed by one more pacing step (last posted bid for other policies).
Trace read_trace_csv(std::istream& in, MarketConfig config,
                     std::optional<std::vector<double>> final_bids = {});

std::filesystem::path meta_path_for(const std::filesystem::path& csv);

void save_trace(const std::filesystem::path& csv, const Trace& trace);
void save_trace_meta(const std::filesystem::path& csv,
                     const MarketConfig& config,
                     std::span<const double> final_bids);
Trace load_trace(const std::filesystem::path& csv);

}  // namespace pacing_dyn

#endif  // PACING_DYN_TRACE_IO_HPP_
