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

#include "diarl/diarl.h"

#include <cstdlib>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>

#include "diarl/bench.hpp"
#include "diarl/error.hpp"
#include "diarl/protocol.hpp"
#include "diarl/replay.hpp"
#include "diarl/server.hpp"
#include "diarl/session.hpp"

struct diarl_session {
  explicit diarl_session(diarl::Session s) : session(std::move(s)) {}
  diarl::Session session;
  std::deque<std::string> pending;  // encoded events not yet polled
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

diarl_status status_of(diarl::ErrorCode c) {
  using diarl::ErrorCode;
  switch (c) {
    case ErrorCode::kConfig: return DIARL_E_CONFIG;
    case ErrorCode::kInput: return DIARL_E_BAD_INPUT;
    case ErrorCode::kState: return DIARL_E_STATE;
    case ErrorCode::kProtocol: return DIARL_E_PROTOCOL;
    case ErrorCode::kStale: return DIARL_E_STALE;
    case ErrorCode::kUnknownSegment: return DIARL_E_UNKNOWN_SEGMENT;
    case ErrorCode::kUnknownLabel: return DIARL_E_UNKNOWN_LABEL;
    case ErrorCode::kDuplicate: return DIARL_E_DUPLICATE;
    case ErrorCode::kIo: return DIARL_E_IO;
  }
  return DIARL_E_INTERNAL;
}

template <typename F>
diarl_status guarded(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return DIARL_OK;
  } catch (const diarl::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const diarl::protocol::DecodeError& e) {
    g_last_error = e.code() + ": " + e.what();
    return DIARL_E_PROTOCOL;
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return DIARL_E_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DIARL_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DIARL_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void require(const void* p, const char* what) {
  if (!p) diarl::fail(diarl::ErrorCode::kInput, std::string(what) + " is NULL");
}

json parse_request(const char* text) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    diarl::fail(diarl::ErrorCode::kConfig, std::string("request is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) diarl::fail(diarl::ErrorCode::kConfig, "request must be a JSON object");
  return j;
}

diarl::SessionConfig config_of(const json& req) {
  diarl::SessionConfig cfg;
  if (req.contains("config")) cfg = req["config"].get<diarl::SessionConfig>();
  cfg.validate();
  return cfg;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) diarl::fail(diarl::ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

diarl::SyntheticSpec stream_spec(const json& req) {
  diarl::SyntheticSpec spec;
  spec.n_speakers = req.value("speakers", spec.n_speakers);
  spec.dim = req.value("dim", spec.dim);
  spec.separation = req.value("separation", spec.separation);
  spec.n_segments = req.value("segments", spec.n_segments);
  if (spec.n_speakers < 1) diarl::fail(diarl::ErrorCode::kConfig, "speakers must be >= 1");
  if (spec.dim < 1) diarl::fail(diarl::ErrorCode::kConfig, "dim must be >= 1");
  if (spec.n_segments < 1) diarl::fail(diarl::ErrorCode::kConfig, "segments must be >= 1");
  if (!(spec.separation >= 0)) diarl::fail(diarl::ErrorCode::kConfig, "separation must be >= 0");
  return spec;
}

std::uint64_t required_seed(const json& req) {
  if (!req.contains("seed")) diarl::fail(diarl::ErrorCode::kConfig, "seed is required");
  return req["seed"].get<std::uint64_t>();
}

double probability(const json& req, const char* key, double dflt) {
  const double p = req.value(key, dflt);
  if (!(p >= 0.0 && p <= 1.0)) diarl::fail(diarl::ErrorCode::kConfig, std::string(key) + " must be in [0, 1]");
  return p;
}

void flush_events(diarl_session* s) {
  for (auto& ev : s->session.take_events())
    s->pending.push_back(diarl::protocol::encode(diarl::protocol::from_session_event(ev)));
}

}  // namespace

extern "C" {

const char* diarl_version(void) { return "0.1.0"; }

const char* diarl_last_error(void) { return g_last_error.c_str(); }

const char* diarl_status_name(diarl_status status) {
  switch (status) {
    case DIARL_OK: return "OK";
    case DIARL_E_CONFIG: return "CONFIG";
    case DIARL_E_BAD_INPUT: return "BAD_INPUT";
    case DIARL_E_STATE: return "STATE";
    case DIARL_E_PROTOCOL: return "PROTOCOL";
    case DIARL_E_STALE: return "STALE";
    case DIARL_E_UNKNOWN_SEGMENT: return "UNKNOWN_SEGMENT";
    case DIARL_E_UNKNOWN_LABEL: return "UNKNOWN_LABEL";
    case DIARL_E_DUPLICATE: return "DUPLICATE";
    case DIARL_E_IO: return "IO";
    case DIARL_E_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

void diarl_string_free(char* s) { std::free(s); }

diarl_status diarl_session_create(const char* config_json, diarl_session** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    diarl::SessionConfig cfg;
    if (config_json && *config_json) {
      json j;
      try {
        j = json::parse(config_json);
      } catch (const json::parse_error& e) {
        diarl::fail(diarl::ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
      }
      cfg = j.get<diarl::SessionConfig>();
    }
    *out = new diarl_session(diarl::Session(cfg));
  });
}

diarl_status diarl_session_load(const char* snapshot_json, diarl_session** out) {
  return guarded([&] {
    require(out, "out");
    require(snapshot_json, "snapshot_json");
    *out = nullptr;
    json j;
    try {
      j = json::parse(snapshot_json);
    } catch (const json::parse_error& e) {
      diarl::fail(diarl::ErrorCode::kInput, std::string("snapshot is not valid JSON: ") + e.what());
    }
    *out = new diarl_session(diarl::Session::from_snapshot(j));
  });
}

void diarl_session_destroy(diarl_session* s) { delete s; }

diarl_status diarl_session_push_pcm(diarl_session* s, const int16_t* samples, size_t count) {
  return guarded([&] {
    require(s, "session");
    if (count) require(samples, "samples");
    s->session.push_pcm({samples, count});
    flush_events(s);
  });
}

diarl_status diarl_session_push_context(diarl_session* s, int64_t segment_id, double t0, double t1,
                                        const double* x, size_t dim, int speech) {
  return guarded([&] {
    require(s, "session");
    require(x, "x");
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x, static_cast<Eigen::Index>(dim));
    s->session.step_context(segment_id, t0, t1, v, speech != 0);
    flush_events(s);
  });
}

diarl_status diarl_session_feedback(diarl_session* s, const char* feedback_json, char** reward_json) {
  return guarded([&] {
    require(s, "session");
    require(feedback_json, "feedback_json");
    if (reward_json) *reward_json = nullptr;
    const auto msg = diarl::protocol::decode(feedback_json);
    const auto* fb = std::get_if<diarl::protocol::Feedback>(&msg);
    if (!fb) diarl::fail(diarl::ErrorCode::kProtocol, "expected a feedback message");
    diarl::RewardRecord rec;
    try {
      rec = s->session.apply_feedback(diarl::protocol::to_event(*fb, s->session.now()));
    } catch (...) {
      flush_events(s);
      throw;
    }
    flush_events(s);
    if (reward_json) *reward_json = dup_string(rec.to_json().dump());
  });
}

diarl_status diarl_session_register(diarl_session* s, const char* name, size_t* arm) {
  return guarded([&] {
    require(s, "session");
    require(name, "name");
    const auto id = s->session.register_speaker(name);
    flush_events(s);
    if (arm) *arm = id.value;
  });
}

diarl_status diarl_session_finish(diarl_session* s) {
  return guarded([&] {
    require(s, "session");
    s->session.finish();
    flush_events(s);
  });
}

diarl_status diarl_session_snapshot(diarl_session* s, char** snapshot_json) {
  return guarded([&] {
    require(s, "session");
    require(snapshot_json, "snapshot_json");
    *snapshot_json = dup_string(s->session.snapshot().dump());
  });
}

diarl_status diarl_session_transcript(diarl_session* s, char** transcript) {
  return guarded([&] {
    require(s, "session");
    require(transcript, "transcript");
    *transcript = dup_string(s->session.transcript());
  });
}

diarl_status diarl_session_hash(diarl_session* s, char** hash) {
  return guarded([&] {
    require(s, "session");
    require(hash, "hash");
    *hash = dup_string(s->session.timeline_hash());
  });
}

diarl_status diarl_session_poll_event(diarl_session* s, char** line) {
  return guarded([&] {
    require(s, "session");
    require(line, "line");
    *line = nullptr;
    flush_events(s);
    if (s->pending.empty()) return;
    *line = dup_string(s->pending.front());
    s->pending.pop_front();
  });
}

diarl_status diarl_bench_run(const char* request_json, char** report_json) {
  return guarded([&] {
    require(report_json, "report_json");
    *report_json = nullptr;
    const auto req = parse_request(request_json);
    const auto seed = required_seed(req);
    const auto base = config_of(req);
    const auto policy_name = req.value("policy", std::string(diarl::policy_name(base.policy)));
    auto policy = diarl::BenchPolicy::named(policy_name, base);
    policy.session.seed = diarl::derive_seed(seed, 2);
    diarl::FeedbackPolicy fp{probability(req, "p", 1.0), req.value("delay_s", 0.0)};
    if (!(fp.delay_s >= 0)) diarl::fail(diarl::ErrorCode::kConfig, "delay_s must be >= 0");

    diarl::LabeledStream stream;
    if (req.contains("corpus")) {
      const auto corpus = diarl::load_corpus(req["corpus"].get<std::string>());
      stream = diarl::corpus_stream(corpus, req.value("segments", 2000), diarl::derive_seed(seed, 1));
    } else {
      auto spec = stream_spec(req);
      spec.seed = diarl::derive_seed(seed, 1);
      stream = diarl::generate_synthetic(spec);
    }
    const auto report = diarl::run_benchmark(stream, policy, fp, diarl::derive_seed(seed, 3));
    *report_json = dup_string(report.to_json().dump(2));
  });
}

diarl_status diarl_bench_compare(const char* request_json, char** result_json) {
  return guarded([&] {
    require(result_json, "result_json");
    *result_json = nullptr;
    const auto req = parse_request(request_json);
    const auto base = config_of(req);
    std::vector<std::string> names = req.value("policies", std::vector<std::string>{"linucb", "berlinucb"});
    std::vector<diarl::BenchPolicy> configs;
    for (const auto& n : names) configs.push_back(diarl::BenchPolicy::named(n, base));

    std::vector<double> p_grid = req.value("p_grid", std::vector<double>{0.1, 1.0});
    for (double p : p_grid)
      if (!(p >= 0.0 && p <= 1.0)) diarl::fail(diarl::ErrorCode::kConfig, "p_grid values must be in [0, 1]");
    std::vector<std::uint64_t> seeds;
    if (req.contains("seeds")) {
      seeds = req["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const auto seed = required_seed(req);
      const int n = req.value("n_seeds", 20);
      if (n < 1) diarl::fail(diarl::ErrorCode::kConfig, "n_seeds must be >= 1");
      for (int i = 0; i < n; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
    }
    if (seeds.empty()) diarl::fail(diarl::ErrorCode::kConfig, "seeds must not be empty");

    const auto cmp = diarl::compare_policies(configs, stream_spec(req), p_grid, seeds);
    nlohmann::ordered_json out;
    out["rows_csv"] = cmp.rows_csv();
    out["summary_text"] = cmp.summary_text();
    auto summary = nlohmann::ordered_json::array();
    for (const auto& s : cmp.summary)
      summary.push_back({{"config", s.config},
                         {"p", s.p},
                         {"mean_accuracy", s.mean_accuracy},
                         {"std_accuracy", s.std_accuracy},
                         {"mean_error_rate", s.mean_error_rate},
                         {"std_error_rate", s.std_error_rate},
                         {"mean_regret", s.mean_regret}});
    out["summary"] = summary;
    auto wins = nlohmann::ordered_json::array();
    for (const auto& w : cmp.wins)
      wins.push_back({{"a", w.a}, {"b", w.b}, {"p", w.p}, {"a_wins", w.a_wins}, {"b_wins", w.b_wins},
                      {"ties", w.ties}});
    out["wins"] = wins;
    *result_json = dup_string(out.dump(2));
  });
}

diarl_status diarl_bench_generate(const char* request_json, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    const auto req = parse_request(request_json);
    auto spec = stream_spec(req);
    spec.seed = diarl::derive_seed(required_seed(req), 1);
    diarl::write_corpus(out_dir, diarl::generate_synthetic(spec));
  });
}

diarl_status diarl_replay(const char* request_json, char** result_json) {
  return guarded([&] {
    require(result_json, "result_json");
    *result_json = nullptr;
    const auto req = parse_request(request_json);
    if (!req.contains("input")) diarl::fail(diarl::ErrorCode::kConfig, "input is required");
    const auto cfg = config_of(req);
    const auto samples = diarl::read_pcm_file(req["input"].get<std::string>());
    diarl::ReplayOptions opts;
    if (req.contains("script")) opts.script = diarl::load_script(req["script"].get<std::string>());
    opts.dump_features = req.value("dump_features", false);
    if (req.contains("pause_after")) opts.pause_after = req["pause_after"].get<std::int64_t>();
    const auto r = diarl::replay(cfg, samples, opts);

    nlohmann::ordered_json out;
    out["transcript"] = r.transcript;
    auto rewards = nlohmann::ordered_json::array();
    for (const auto& rec : r.rewards) rewards.push_back(rec.to_json());
    out["rewards"] = rewards;
    auto errors = nlohmann::ordered_json::array();
    for (const auto& e : r.errors) errors.push_back({{"code", e.code}, {"message", e.message}});
    out["errors"] = errors;
    if (opts.dump_features) out["features_csv"] = r.features_csv;
    out["hash"] = r.hash;
    out["segments"] = r.segments;
    if (req.value("include_snapshot", false)) out["snapshot"] = r.snapshot;
    *result_json = dup_string(out.dump());
  });
}

diarl_status diarl_serve(const char* request_json, int audio_fd, diarl_bound_fn on_bound, void* user) {
  return guarded([&] {
    const auto req = parse_request(request_json);
    diarl::ServeOptions opts;
    opts.listen = req.value("listen", opts.listen);
    opts.transcript_path = req.value("transcript", std::string());
    opts.checkpoint_path = req.value("checkpoint", std::string());
    opts.reward_log_path = req.value("reward_log", std::string());
    const auto pace = req.value("pace", std::string("none"));
    if (pace == "realtime")
      opts.pace = diarl::Pace::kRealtime;
    else if (pace != "none")
      diarl::fail(diarl::ErrorCode::kConfig, "pace must be none or realtime");
    const auto max_queue = req.value("max_client_queue", static_cast<std::int64_t>(opts.max_client_queue));
    if (max_queue < 1) diarl::fail(diarl::ErrorCode::kConfig, "max_client_queue must be >= 1");
    opts.max_client_queue = static_cast<std::size_t>(max_queue);

    auto session = req.contains("resume")
                       ? diarl::Session::from_snapshot(json::parse(read_text(req["resume"].get<std::string>())))
                       : diarl::Session(config_of(req));
    diarl::Server server(std::move(session), opts);
    const int port = server.bind();
    if (on_bound) on_bound(port, user);
    server.run(audio_fd);
  });
}

diarl_status diarl_snapshot_inspect(const char* snapshot_json, char** summary_json) {
  return guarded([&] {
    require(snapshot_json, "snapshot_json");
    require(summary_json, "summary_json");
    *summary_json = nullptr;
    json j;
    try {
      j = json::parse(snapshot_json);
    } catch (const json::parse_error& e) {
      diarl::fail(diarl::ErrorCode::kInput, std::string("snapshot is not valid JSON: ") + e.what());
    }
    // Restoring validates the whole checkpoint.
    const auto s = diarl::Session::from_snapshot(j);
    nlohmann::ordered_json out;
    out["format"] = j["format"];
    out["version"] = j["version"];
    out["policy"] = std::string(diarl::policy_name(s.config().policy));
    out["segments"] = s.segment_count();
    out["hash"] = s.timeline_hash();
    out["now"] = s.now();
    out["speakers"] = s.registry().to_json();
    out["live_entries"] = s.timeline().size();
    out["config"] = j["config"];
    *summary_json = dup_string(out.dump(2));
  });
}

}  // extern "C"
