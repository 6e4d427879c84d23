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

#include "diarl/protocol.hpp"

#include "diarl/error.hpp"

namespace diarl::protocol {

namespace {

using ojson = nlohmann::ordered_json;

ojson entries_json(const std::vector<RegistryEntry>& entries) {
  auto arr = ojson::array();
  for (const auto& e : entries) {
    ojson o;
    o["id"] = e.id;
    o["name"] = e.name;
    arr.push_back(o);
  }
  return arr;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw DecodeError("BAD_REQUEST", std::string("missing field: ") + key);
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DecodeError("BAD_REQUEST", std::string("wrong type for field: ") + key);
  }
}

std::vector<RegistryEntry> entries_field(const nlohmann::json& j, const char* key) {
  const auto arr = field<nlohmann::json>(j, key);
  if (!arr.is_array()) throw DecodeError("BAD_REQUEST", std::string(key) + " must be an array");
  std::vector<RegistryEntry> out;
  for (const auto& e : arr) out.push_back({field<std::size_t>(e, "id"), field<std::string>(e, "name")});
  return out;
}

}  // namespace

std::string_view type_name(const Message& m) {
  static constexpr const char* kNames[] = {"hello",           "segment_label", "feedback", "register_speaker",
                                           "registry_update", "reward_record", "error",    "snapshot_ack"};
  return kNames[m.index()];
}

std::string encode(const Message& m) {
  ojson j;
  j["type"] = std::string(type_name(m));
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["version"] = msg.version;
          j["registry"] = entries_json(msg.registry);
        } else if constexpr (std::is_same_v<T, SegmentLabel>) {
          j["segment_id"] = msg.segment_id;
          j["t0"] = msg.t0;
          j["t1"] = msg.t1;
          j["label"] = msg.label;
          j["confidence"] = msg.confidence;
        } else if constexpr (std::is_same_v<T, Feedback>) {
          j["segment_id"] = msg.segment_id;
          j["kind"] = msg.kind;
          if (msg.label) j["label"] = *msg.label;
          if (msg.rating) j["rating"] = *msg.rating;
        } else if constexpr (std::is_same_v<T, RegisterSpeaker>) {
          j["name"] = msg.name;
        } else if constexpr (std::is_same_v<T, RegistryUpdate>) {
          j["entries"] = entries_json(msg.entries);
        } else if constexpr (std::is_same_v<T, RewardRecordMsg>) {
          const auto rec = msg.record.to_json();
          for (const auto& [k, v] : rec.items()) j[k] = v;
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          j["code"] = msg.code;
          j["message"] = msg.message;
        } else {
          j["path"] = msg.path;
          j["length"] = msg.length;
          j["hash"] = msg.hash;
        }
      },
      m);
  return j.dump() + "\n";
}

Message decode(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError("BAD_JSON", e.what());
  }
  if (!j.is_object()) throw DecodeError("BAD_JSON", "message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw DecodeError("BAD_REQUEST", "missing type");
  const auto type = j["type"].get<std::string>();

  if (type == "hello") {
    Hello h;
    h.version = j.value("version", std::string(kVersion));
    if (j.contains("registry")) h.registry = entries_field(j, "registry");
    return h;
  }
  if (type == "segment_label")
    return SegmentLabel{field<std::int64_t>(j, "segment_id"), field<double>(j, "t0"), field<double>(j, "t1"),
                        field<std::string>(j, "label"), field<double>(j, "confidence")};
  if (type == "feedback") {
    Feedback f{field<std::int64_t>(j, "segment_id"), field<std::string>(j, "kind"), std::nullopt, std::nullopt};
    if (j.contains("label") && !j["label"].is_null()) f.label = field<std::string>(j, "label");
    if (j.contains("rating") && !j["rating"].is_null()) f.rating = field<double>(j, "rating");
    return f;
  }
  if (type == "register_speaker") return RegisterSpeaker{field<std::string>(j, "name")};
  if (type == "registry_update") return RegistryUpdate{entries_field(j, "entries")};
  if (type == "reward_record") {
    RewardRecordMsg r;
    r.record.segment_id = field<std::int64_t>(j, "segment_id");
    if (j.contains("r_user") && !j["r_user"].is_null()) r.record.r_user = field<double>(j, "r_user");
    r.record.r_time = field<double>(j, "r_time");
    r.record.r_conf = field<double>(j, "r_conf");
    r.record.r_total = field<double>(j, "r_total");
    return r;
  }
  if (type == "error") return ErrorMsg{field<std::string>(j, "code"), field<std::string>(j, "message")};
  if (type == "snapshot_ack")
    return SnapshotAck{field<std::string>(j, "path"), field<std::int64_t>(j, "length"), field<std::string>(j, "hash")};
  throw DecodeError("UNKNOWN_TYPE", "unknown message type: " + type);
}

std::vector<RegistryEntry> registry_entries(const SpeakerRegistry& reg) {
  std::vector<RegistryEntry> out;
  for (std::size_t i = 1; i < reg.action_count(); ++i) out.push_back({i, reg.name(ActionId{i})});
  return out;
}

std::vector<RegistryEntry> registry_entries(const nlohmann::json& entries) {
  std::vector<RegistryEntry> out;
  for (const auto& e : entries) out.push_back({e.at("id").get<std::size_t>(), e.at("name").get<std::string>()});
  return out;
}

FeedbackEvent to_event(const Feedback& f, double arrival_time) {
  FeedbackEvent ev;
  ev.segment_id = f.segment_id;
  ev.arrival_time = arrival_time;
  try {
    ev.kind = parse_feedback_kind(f.kind);
  } catch (const Error& e) {
    throw DecodeError("BAD_REQUEST", e.what());
  }
  switch (ev.kind) {
    case FeedbackKind::kCorrect:
    case FeedbackKind::kNewSpeaker:
      if (!f.label || f.label->empty()) throw DecodeError("BAD_REQUEST", f.kind + " requires a label");
      ev.label = *f.label;
      break;
    case FeedbackKind::kRating:
      if (!f.rating) throw DecodeError("BAD_REQUEST", "rating requires a rating value");
      ev.rating = *f.rating;
      break;
    case FeedbackKind::kConfirm: break;
  }
  return ev;
}

Feedback from_event(const FeedbackEvent& ev) {
  Feedback f{ev.segment_id, std::string(feedback_kind_name(ev.kind)), std::nullopt, std::nullopt};
  if (ev.kind == FeedbackKind::kCorrect || ev.kind == FeedbackKind::kNewSpeaker) f.label = ev.label;
  if (ev.kind == FeedbackKind::kRating) f.rating = ev.rating;
  return f;
}

Message from_session_event(const SessionEvent& ev) {
  return std::visit(
      [](const auto& e) -> Message {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, LabelEvent>)
          return SegmentLabel{e.segment_id, e.t0, e.t1, e.label, e.confidence};
        else if constexpr (std::is_same_v<T, RegistryEvent>)
          return RegistryUpdate{registry_entries(e.entries)};
        else if constexpr (std::is_same_v<T, RewardEvent>)
          return RewardRecordMsg{e.record};
        else
          return ErrorMsg{std::string(error_code_name(e.code)), e.message};
      },
      ev);
}

}  // namespace diarl::protocol
