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

#include "diarl/replay.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "diarl/error.hpp"

namespace diarl {

std::vector<ScriptItem> parse_script(const std::string& text) {
  std::vector<ScriptItem> items;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return "script line " + std::to_string(lineno) + ": "; };
    protocol::Message msg;
    nlohmann::json j;
    try {
      msg = protocol::decode(line);
      j = nlohmann::json::parse(line);
    } catch (const protocol::DecodeError& e) {
      fail(ErrorCode::kInput, where() + e.what());
    }
    ScriptItem item;
    if (const auto* fb = std::get_if<protocol::Feedback>(&msg)) {
      item.after_segment = fb->segment_id;
      item.message = *fb;
    } else if (const auto* reg = std::get_if<protocol::RegisterSpeaker>(&msg)) {
      item.message = *reg;
    } else {
      fail(ErrorCode::kInput, where() + "only feedback and register_speaker may be scripted");
    }
    if (j.contains("after_segment")) {
      if (!j["after_segment"].is_number_integer()) fail(ErrorCode::kInput, where() + "after_segment must be an integer");
      item.after_segment = j["after_segment"].get<std::int64_t>();
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<ScriptItem> load_script(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_script(ss.str());
}

namespace {

struct Runner {
  ReplayResult& out;
  std::multimap<std::int64_t, const ScriptItem*> due;

  void submit(Session& s, const ScriptItem& item) {
    if (const auto* fb = std::get_if<protocol::Feedback>(&item.message)) {
      try {
        s.queue()->push({protocol::to_event(*fb, 0.0), 1});
      } catch (const protocol::DecodeError& e) {
        out.errors.push_back({e.code(), e.what()});
      }
    } else {
      s.queue()->push({RegisterRequest{std::get<protocol::RegisterSpeaker>(item.message).name}, 1});
    }
  }

  void collect(Session& s) {
    for (auto& ev : s.take_events()) {
      if (const auto* r = std::get_if<RewardEvent>(&ev)) out.rewards.push_back(r->record);
      if (const auto* e = std::get_if<ErrorEvent>(&ev))
        out.errors.push_back({std::string(error_code_name(e->code)), e->message});
      if (const auto* l = std::get_if<LabelEvent>(&ev)) apply_due(s, l->segment_id);
    }
  }

  void apply_due(Session& s, std::int64_t after) {
    auto [lo, hi] = due.equal_range(after);
    if (lo == hi) return;
    for (auto it = lo; it != hi; ++it) submit(s, *it->second);
    due.erase(lo, hi);
    s.drain_requests();
    collect(s);
  }
};

void observe(Session& s, ReplayResult& out) {
  s.set_context_observer([&out](const TimelineEntry& e) {
    out.features_csv += feature_csv_row(FeatureVector{e.segment_id, e.context}, e.t0, e.t1) + "\n";
  });
}

}  // namespace

ReplayResult replay(const SessionConfig& cfg, std::span<const std::int16_t> samples, const ReplayOptions& opts) {
  ReplayResult out;
  Runner run{out, {}};
  for (const auto& item : opts.script) run.due.emplace(item.after_segment, &item);

  Session s(cfg);
  if (opts.dump_features) observe(s, out);
  run.apply_due(s, -1);

  std::string head;  // transcript lines of entries dropped by a resume
  const auto chunk = static_cast<std::size_t>(cfg.features.segment_hop_samples());
  for (std::size_t off = 0; off < samples.size(); off += chunk) {
    s.push_pcm(samples.subspan(off, std::min(chunk, samples.size() - off)));
    run.collect(s);
    if (opts.pause_after && s.segment_count() == *opts.pause_after + 1) {
      const auto text = s.snapshot().dump();
      auto resumed = Session::from_snapshot(nlohmann::json::parse(text));
      const auto first_live =
          resumed.timeline().empty() ? s.segment_count() : resumed.timeline().front().segment_id;
      for (const auto& e : s.timeline())
        if (e.segment_id < first_live) head += e.transcript_json().dump() + "\n";
      s = std::move(resumed);
      if (opts.dump_features) observe(s, out);
    }
  }
  // Script items for segments that never came.
  for (auto& [after, item] : run.due) run.submit(s, *item);
  run.due.clear();
  s.drain_requests();
  run.collect(s);
  s.finish();
  run.collect(s);

  out.transcript = head + s.transcript();
  out.hash = s.timeline_hash();
  out.segments = s.segment_count();
  out.snapshot = s.snapshot();
  return out;
}

}  // namespace diarl
