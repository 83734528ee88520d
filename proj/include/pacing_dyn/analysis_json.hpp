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

#ifndef PACING_DYN_ANALYSIS_JSON_HPP_
#define PACING_DYN_ANALYSIS_JSON_HPP_

#include <nlohmann/json.hpp>

#include "pacing_dyn/adversary_lab.hpp"
#include "pacing_dyn/dynamics_analyzer.hpp"

namespace pacing_dyn {

namespace dynamics {
void to_json(nlohmann::json& j, const PotentialState& s);
void to_json(nlohmann::json& j, const ConvergenceMilestones& m);
void to_json(nlohmann::json& j, const WindowStats& w);
void to_json(nlohmann::json& j, const RoundRobinReport& r);
}  // namespace dynamics

namespace adversary {
void to_json(nlohmann::json& j, const AdversaryProblem& p);
void to_json(nlohmann::json& j, const WinSequence& s);
void to_json(nlohmann::json& j, const CertificateCheck& c);
}  // namespace adversary

}  // namespace pacing_dyn

#endif  // PACING_DYN_ANALYSIS_JSON_HPP_
