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
#include <string>
#include <vector>

#include "diarl/protocol.hpp"
#include "diarl/session.hpp"

namespace diarl {

// One scripted client action, applied right after the label for
// `after_segment` is emitted (-1: before any audio).
struct ScriptItem {
  std::int64_t after_segment = -1;
  std::variant<protocol::Feedback, protocol::RegisterSpeaker> message;
};

// Parses a feedback script: one feedback or register_speaker message per
// line, optionally carrying "after_segment". Feedback defaults to its own
// segment id. Blank lines and lines starting with '#' are skipped.
std::vector<ScriptItem> parse_script(const std::string& text);
std::vector<ScriptItem> load_script(const std::string& path);

struct ReplayOptions {
  std::vector<ScriptItem> script;
  bool dump_features = false;
  // Snapshot after this segment, restore from the serialized snapshot and
  // continue in a fresh session.
  std::optional<std::int64_t> pause_after;
};

struct ReplayResult {
  std::string transcript;
  std::vector<RewardRecord> rewards;
  std::vector<protocol::ErrorMsg> errors;
  std::string features_csv;
  std::string hash;
  std::int64_t segments = 0;
  nlohmann::json snapshot;  // final session state
};

ReplayResult replay(const SessionConfig& cfg, std::span<const std::int16_t> samples, const ReplayOptions& opts);

}  // namespace diarl
