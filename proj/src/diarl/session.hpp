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
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "diarl/agents.hpp"
#include "diarl/audio.hpp"
#include "diarl/error.hpp"
#include "diarl/features.hpp"
#include "diarl/rewards.hpp"
#include "diarl/rng.hpp"

namespace diarl {

enum class PolicyKind { kQLearning, kLinUcb, kBerlinUcb };

std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct SessionConfig {
  PolicyKind policy = PolicyKind::kLinUcb;
  std::uint64_t seed = 0;
  FeatureConfig features;
  RewardWeights rewards;
  double alpha = 1.0;
  double epsilon = 0.1;
  double gamma = 0.9;
  double eta = 0.1;
  double w_p = 0.3;
  double tau_p = 5.0;
  double tau_s = 2.0;
  std::size_t codebook_size = 64;
  double feedback_window_s = 30.0;
  double time_horizon_s = 5.0;
  // When set, the session takes precomputed contexts of this dimension
  // (benchmarks) instead of audio.
  std::optional<int> context_dim;

  void validate() const;
  int dim() const { return context_dim ? *context_dim : features.output_dim(); }
};

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);

inline constexpr const char* kNewLabel = "NEW?";
inline constexpr const char* kNonSpeechLabel = "NON_SPEECH";

struct TimelineEntry {
  std::int64_t segment_id = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  bool speech = false;
  std::optional<Decision> decision;
  Eigen::VectorXd context;
  std::optional<std::size_t> state;       // quantized state (Q-learning)
  std::optional<std::size_t> next_state;  // bootstrap state once known
  std::string emitted_label;
  std::string label;  // current attribution (corrections applied)
  bool corrected = false;
  bool matured = false;
  std::vector<FeedbackKind> applied;
  std::vector<std::pair<ActionId, double>> pending_q;
  std::optional<RewardRecord> reward;

  nlohmann::ordered_json transcript_json() const;
};

struct LabelEvent {
  std::int64_t segment_id = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::string label;
  double confidence = 0.0;
};

struct RegistryEvent {
  nlohmann::json entries;
};

struct RewardEvent {
  RewardRecord record;
};

struct ErrorEvent {
  std::uint64_t origin = 0;
  ErrorCode code = ErrorCode::kInput;
  std::string message;
};

using SessionEvent = std::variant<LabelEvent, RegistryEvent, RewardEvent, ErrorEvent>;

struct RegisterRequest {
  std::string name;
};

// Requests from producers (service handlers, UI) awaiting the decision loop.
struct QueuedRequest {
  std::variant<FeedbackEvent, RegisterRequest> body;
  std::uint64_t origin = 0;
};

// Many-producer, single-consumer handoff into the session loop.
class RequestQueue {
 public:
  void push(QueuedRequest r);
  std::deque<QueuedRequest> take_all();

 private:
  std::mutex mu_;
  std::deque<QueuedRequest> items_;
};

// Overrides policy selection; used by benchmark baselines.
using ActionChooser = std::function<ActionId(const SpeakerRegistry&, Rng&)>;

// One online diarization session: owns the feature pipeline, the policy,
// the registry, and the timeline. Single-threaded except for `queue()`.
class Session {
 public:
  explicit Session(SessionConfig cfg);
  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  static Session from_snapshot(const nlohmann::json& snapshot);

  // Appends PCM and steps every completed segment.
  void push_pcm(std::span<const std::int16_t> samples);

  // Decides one audio segment (NON_SPEECH entries skip the policy).
  void step(const AudioSegment& segment);

  // Decides one precomputed context; only valid with `context_dim`.
  void step_context(std::int64_t segment_id, double t0, double t1, const Eigen::VectorXd& x,
                    bool speech = true);

  // Applies feedback synchronously. Throws Error on rejection.
  RewardRecord apply_feedback(const FeedbackEvent& event);
  ActionId register_speaker(const std::string& name);

  // Applies everything waiting in the request queue; rejections become
  // ErrorEvents addressed to their origin.
  void drain_requests();

  // End of stream: matures every outstanding decision.
  void finish();

  nlohmann::json snapshot() const;

  std::shared_ptr<RequestQueue> queue() const;
  std::vector<SessionEvent> take_events();

  void set_chooser(ActionChooser chooser);

  const SessionConfig& config() const;
  const SpeakerRegistry& registry() const;
  const std::deque<TimelineEntry>& timeline() const;
  const TimelineEntry* find_entry(std::int64_t segment_id) const;
  std::int64_t segment_count() const;
  std::string timeline_hash() const;
  double now() const;

  // Transcript lines (one JSON object per line) of the entries held.
  std::string transcript() const;

  // Policy internals, for inspection and tests.
  const LinUcb* linucb() const;
  const BerlinUcb* berlinucb() const;
  const QTable* qtable() const;
  const Codebook* codebook() const;
  const FeaturePipeline& features() const;

  // Optional observer of each speech context (feature dumps).
  void set_context_observer(std::function<void(const TimelineEntry&)> fn);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace diarl
