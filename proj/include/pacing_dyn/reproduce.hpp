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

#ifndef PACING_DYN_REPRODUCE_HPP_
#define PACING_DYN_REPRODUCE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pacing_dyn/auction_engine.hpp"

namespace pacing_dyn::reproduce {

struct Verdict {
  std::string suite;
  int criterion = 0;
  std::string title;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // positive when the measurement is inside the bound
  double runtime_s = 0.0;
  std::optional<double> runtime_limit_s;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const Verdict& v);

// In criterion order.
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);

// Throws InvalidInput for an unknown suite. Failures are verdicts.
Verdict run_suite(std::string_view name);

// Workloads shared between suites and tests.
std::vector<MarketConfig> budget_identity_configs();
std::vector<MarketConfig> self_play_configs();
MarketConfig band_config();
std::vector<MarketConfig> round_robin_configs();

}  // namespace pacing_dyn::reproduce

#endif  // PACING_DYN_REPRODUCE_HPP_
