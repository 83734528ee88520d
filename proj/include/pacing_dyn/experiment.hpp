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

#ifndef PACING_DYN_EXPERIMENT_HPP_
#define PACING_DYN_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pacing_dyn/auction_engine.hpp"

namespace pacing_dyn::experiment {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kDefaultSweepCap = 10000;
inline constexpr std::int64_t kStreamingThreshold = 10'000'000;

struct AnalysisRequest {
  enum class Kind { kMilestones, kDiscrepancy, kRoundRobin, kAdversary };
  Kind kind = Kind::kMilestones;
  std::int64_t window = 0;  // discrepancy only; 0 means ceil(1/eta)
  std::int64_t stride = 1;
  std::int64_t start = 1;
};

struct SweepAxes {
  std::vector<double> etas;
  std::vector<std::vector<double>> rhos;
  std::vector<std::int64_t> horizons;
  std::vector<std::uint64_t> seeds;
  std::size_t cap = kDefaultSweepCap;

  std::size_t size() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  MarketConfig market;
  std::vector<AnalysisRequest> analyses;
  std::optional<SweepAxes> sweep;
  std::filesystem::path output_dir = "runs";
  std::int64_t stream_above = kStreamingThreshold;

  // Whether defaults were taken; sweep points re-derive them.
  bool eta_explicit = false;
  bool initial_bids_explicit = false;
};

// Throws ConfigError naming the field and the violated constraint.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical form: sorted keys, no output location.
nlohmann::json resolved_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
std::string sha256_hex(const std::string& data);

// One config per cross-product point, in row-major order over
// (eta, rho, T, seed).
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

struct RunRecord {
  std::string config_hash;
  std::filesystem::path trace_path;
  nlohmann::json metrics = nlohmann::json::object();
  double wall_time_s = 0.0;
  int schema_version = kSchemaVersion;
  std::string error;  // empty on success
};

nlohmann::json to_json(const RunRecord& record);

// Simulates one point, persists its trace under output_dir and runs the
// requested analyses. Failures land in RunRecord::error.
RunRecord run_point(const ExperimentConfig& point);

// Runs every sweep point on up to `workers` threads (0: environment or
// hardware default) and writes metrics.jsonl after all points finish.
std::vector<RunRecord> run(const ExperimentConfig& config, int workers = 0);

// PACING_DYN_WORKERS if set to a positive integer, else hardware threads.
int workers_from_env();

std::filesystem::path experiment_dir(const ExperimentConfig& config);

}  // namespace pacing_dyn::experiment

#endif  // PACING_DYN_EXPERIMENT_HPP_
