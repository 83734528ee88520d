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

#include "pacing_dyn/analysis_json.hpp"

#include <cmath>
#include <optional>

namespace pacing_dyn {
namespace {

nlohmann::json opt(const std::optional<std::int64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// JSON has no infinities.
nlohmann::json finite(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

namespace dynamics {

void to_json(nlohmann::json& j, const PotentialState& s) {
  j = {{"b", s.b},           {"rho", s.rho},
       {"f_value", s.f_value}, {"subgrad", s.subgrad},
       {"maximizer", s.maximizer}, {"dist_one", s.dist_one},
       {"dist_avg", s.dist_avg}, {"b_avg", s.b_avg},
       {"b_max", s.b_max},   {"b_min", s.b_min}};
}

void to_json(nlohmann::json& j, const ConvergenceMilestones& m) {
  j = {{"D", m.d},
       {"A", m.a},
       {"t0", m.t0},
       {"t_sqrt_eta", opt(m.t_sqrt_eta)},
       {"t_avg", opt(m.t_avg)},
       {"t_one", opt(m.t_one)},
       {"sched_sqrt_eta", m.sched_sqrt_eta},
       {"sched_avg", m.sched_avg},
       {"sched_one", m.sched_one},
       {"D_refined", m.d_refined},
       {"A_refined", m.a_refined},
       {"t_avg_refined", opt(m.t_avg_refined)},
       {"t_one_refined", opt(m.t_one_refined)},
       {"sched_avg_refined", m.sched_avg_refined},
       {"sched_one_refined", m.sched_one_refined},
       {"band_start", m.band_start},
       {"band_lo", m.band.lo},
       {"band_hi", m.band.hi},
       {"band_min_bid", finite(m.band_min_bid)},
       {"band_max_bid", finite(m.band_max_bid)},
       {"band_holds", m.band_holds},
       {"eta_hypothesis", m.eta_hypothesis},
       {"within_schedule", m.within_schedule()}};
}

void to_json(nlohmann::json& j, const WindowStats& w) {
  j = {{"agent", w.agent},
       {"start", w.start},
       {"length", w.length},
       {"wins", w.wins},
       {"discrepancy", w.discrepancy},
       {"m", w.m},
       {"M", w.big_m},
       {"guaranteed_floor", finite(w.guaranteed_floor)},
       {"floor_holds", w.floor_holds}};
}

void to_json(nlohmann::json& j, const RoundRobinReport& r) {
  j = {{"holds_from", opt(r.holds_from)},
       {"period_start", opt(r.period_start)},
       {"permutation", r.permutation},
       {"max_discrepancy", r.max_discrepancy},
       {"schedule", r.schedule},
       {"hypothesis", r.hypothesis},
       {"absorbing", r.absorbing},
       {"within_schedule", r.within_schedule()}};
}

}  // namespace dynamics

namespace adversary {

void to_json(nlohmann::json& j, const AdversaryProblem& p) {
  j = {{"rho_l", p.rho_l},
       {"rho_o", p.rho_o},
       {"T", p.horizon},
       {"eta", p.eta},
       {"b1", p.initial_bid}};
}

void to_json(nlohmann::json& j, const WinSequence& s) {
  std::string bits;
  for (std::uint8_t v : s.x) bits.push_back(v ? '1' : '0');
  j = {{"x", bits},
       {"wins", s.wins},
       {"cost", s.cost},
       {"feasible", s.feasible}};
}

void to_json(nlohmann::json& j, const CertificateCheck& c) {
  j = {{"sequences", c.sequences},
       {"windows", c.windows},
       {"violations", c.violations},
       {"min_slack", finite(c.min_slack)}};
}

}  // namespace adversary
}  // namespace pacing_dyn
