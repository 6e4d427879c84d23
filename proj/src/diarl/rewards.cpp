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

#include "diarl/rewards.hpp"

#include <algorithm>

#include "diarl/error.hpp"

namespace diarl {

std::string_view feedback_kind_name(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kConfirm: return "confirm";
    case FeedbackKind::kCorrect: return "correct";
    case FeedbackKind::kNewSpeaker: return "new_speaker";
    case FeedbackKind::kRating: return "rating";
  }
  return "confirm";
}

FeedbackKind parse_feedback_kind(std::string_view name) {
  if (name == "confirm") return FeedbackKind::kConfirm;
  if (name == "correct") return FeedbackKind::kCorrect;
  if (name == "new_speaker") return FeedbackKind::kNewSpeaker;
  if (name == "rating") return FeedbackKind::kRating;
  fail(ErrorCode::kProtocol, "unknown feedback kind: " + std::string(name));
}

void RewardWeights::validate() const {
  if (w_user < 0.0 || w_time < 0.0 || w_conf < 0.0) fail(ErrorCode::kConfig, "reward weights must be >= 0");
  if (w_user == 0.0 && w_time == 0.0 && w_conf == 0.0)
    fail(ErrorCode::kConfig, "at least one reward weight must be positive");
}

void to_json(nlohmann::json& j, const RewardWeights& w) {
  j = {{"w_user", w.w_user}, {"w_time", w.w_time}, {"w_conf", w.w_conf}};
}

void from_json(const nlohmann::json& j, RewardWeights& w) {
  w.w_user = j.value("w_user", w.w_user);
  w.w_time = j.value("w_time", w.w_time);
  w.w_conf = j.value("w_conf", w.w_conf);
}

nlohmann::ordered_json RewardRecord::to_json() const {
  nlohmann::ordered_json j;
  j["segment_id"] = segment_id;
  j["r_user"] = r_user ? nlohmann::ordered_json(*r_user) : nlohmann::ordered_json(nullptr);
  j["r_time"] = r_time;
  j["r_conf"] = r_conf;
  j["r_total"] = r_total;
  return j;
}

RewardRecord RewardRecord::from_json(const nlohmann::json& j) {
  RewardRecord r;
  r.segment_id = j.at("segment_id").get<std::int64_t>();
  if (!j.at("r_user").is_null()) r.r_user = j["r_user"].get<double>();
  r.r_time = j.at("r_time").get<double>();
  r.r_conf = j.at("r_conf").get<double>();
  r.r_total = j.at("r_total").get<double>();
  return r;
}

double user_reward(const FeedbackEvent& event, const Decision& decision) {
  if (event.segment_id != decision.segment_id)
    fail(ErrorCode::kInput, "feedback targets a different segment");
  switch (event.kind) {
    case FeedbackKind::kConfirm: return 1.0;
    case FeedbackKind::kCorrect: return -1.0;
    case FeedbackKind::kNewSpeaker: return decision.chosen.is_new() ? 1.0 : -1.0;
    case FeedbackKind::kRating: return std::clamp(event.rating, -1.0, 1.0);
  }
  return 0.0;
}

double time_reward(std::span<const DecidedSpan> window, double horizon_s) {
  if (!(horizon_s > 0.0)) fail(ErrorCode::kConfig, "time reward horizon must be > 0");
  double net = 0.0;
  for (const auto& s : window) net += s.corrected ? -s.seconds : s.seconds;
  return std::clamp(net / horizon_s, -1.0, 1.0);
}

RewardRecord hybrid_reward(std::int64_t segment_id, std::optional<double> r_user, double r_time,
                           double r_conf, const RewardWeights& w) {
  RewardRecord rec;
  rec.segment_id = segment_id;
  rec.r_user = r_user;
  rec.r_time = r_time;
  rec.r_conf = r_conf;
  double total = w.w_time * r_time + w.w_conf * r_conf;
  if (r_user) total += w.w_user * *r_user;
  rec.r_total = std::clamp(total, -1.0, 1.0);
  return rec;
}

}  // namespace diarl
