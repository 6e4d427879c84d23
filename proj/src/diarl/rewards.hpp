/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "diarl/agents.hpp"

namespace diarl {

enum class FeedbackKind { kConfirm, kCorrect, kNewSpeaker, kRating };

std::string_view feedback_kind_name(FeedbackKind kind);
// Throws kProtocol for an unknown name.
FeedbackKind parse_feedback_kind(std::string_view name);

struct FeedbackEvent {
  std::int64_t segment_id = 0;
  FeedbackKind kind = FeedbackKind::kConfirm;
  std::string label;    // correct: target speaker; new_speaker: the new name
  double rating = 0.0;  // rating only, in [-1, 1]
  double arrival_time = 0.0;
};

struct RewardWeights {
  double w_user = 1.0;
  double w_time = 0.1;
  double w_conf = 0.05;

  void validate() const;
};

void to_json(nlohmann::json& j, const RewardWeights& w);
void from_json(const nlohmann::json& j, RewardWeights& w);

struct RewardRecord {
  std::int64_t segment_id = 0;
  std::optional<double> r_user;
  double r_time = 0.0;
  double r_conf = 0.0;
  double r_total = 0.0;

  // Fields in declaration order; an absent r_user is null.
  nlohmann::ordered_json to_json() const;
  static RewardRecord from_json(const nlohmann::json& j);
  bool operator==(const RewardRecord&) const = default;
};

// +1 for confirm, -1 for a correction of the chosen arm, +-1 for
// new_speaker depending on whether NEW was chosen, the rating itself.
double user_reward(const FeedbackEvent& event, const Decision& decision);

// One decided stretch of the trailing window.
struct DecidedSpan {
  double seconds = 0.0;
  bool corrected = false;
};

// (uncorrected seconds - corrected seconds) / horizon, clamped to [-1, 1].
double time_reward(std::span<const DecidedSpan> window, double horizon_s);

// Affine map of the decision confidence onto [-1, 1].
inline double confidence_reward(const Decision& decision) { return 2.0 * decision.confidence - 1.0; }

RewardRecord hybrid_reward(std::int64_t segment_id, std::optional<double> r_user, double r_time,
                           double r_conf, const RewardWeights& w);

}  // namespace diarl
