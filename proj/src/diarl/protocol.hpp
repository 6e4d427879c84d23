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
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "diarl/rewards.hpp"
#include "diarl/session.hpp"

namespace diarl::protocol {

// Protocol v1: one JSON object per line, discriminated by "type".
inline constexpr const char* kVersion = "1";

struct RegistryEntry {
  std::size_t id = 0;
  std::string name;
  bool operator==(const RegistryEntry&) const = default;
};

struct Hello {
  std::string version = kVersion;
  std::vector<RegistryEntry> registry;
  bool operator==(const Hello&) const = default;
};

struct SegmentLabel {
  std::int64_t segment_id = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::string label;
  double confidence = 0.0;
  bool operator==(const SegmentLabel&) const = default;
};

struct Feedback {
  std::int64_t segment_id = 0;
  std::string kind;
  std::optional<std::string> label;
  std::optional<double> rating;
  bool operator==(const Feedback&) const = default;
};

struct RegisterSpeaker {
  std::string name;
  bool operator==(const RegisterSpeaker&) const = default;
};

struct RegistryUpdate {
  std::vector<RegistryEntry> entries;
  bool operator==(const RegistryUpdate&) const = default;
};

struct RewardRecordMsg {
  RewardRecord record;
  bool operator==(const RewardRecordMsg&) const = default;
};

struct ErrorMsg {
  std::string code;
  std::string message;
  bool operator==(const ErrorMsg&) const = default;
};

struct SnapshotAck {
  std::string path;
  std::int64_t length = 0;
  std::string hash;
  bool operator==(const SnapshotAck&) const = default;
};

using Message = std::variant<Hello, SegmentLabel, Feedback, RegisterSpeaker, RegistryUpdate, RewardRecordMsg,
                             ErrorMsg, SnapshotAck>;

// Decoding failure carrying its wire error code (BAD_JSON, UNKNOWN_TYPE,
// BAD_REQUEST).
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

std::string_view type_name(const Message& m);

// One line, newline-terminated.
std::string encode(const Message& m);
Message decode(std::string_view line);

std::vector<RegistryEntry> registry_entries(const SpeakerRegistry& reg);
std::vector<RegistryEntry> registry_entries(const nlohmann::json& entries);

// Converts a feedback message into a session event; kind-specific fields
// are required (label for correct/new_speaker, rating for rating).
FeedbackEvent to_event(const Feedback& f, double arrival_time);
Feedback from_event(const FeedbackEvent& ev);

// Wire form of a session event; error events are addressed separately.
Message from_session_event(const SessionEvent& ev);

}  // namespace diarl::protocol
