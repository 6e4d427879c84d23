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

#include <unistd.h>
#include <fcntl.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diarl/diarl.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError("cannot write " + path);
  f << text;
}

// Owns a string handed out by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { diarl_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

void check(diarl_status st) {
  if (st != DIARL_OK) throw RuntimeError(std::string(diarl_status_name(st)) + ": " + diarl_last_error());
}

// Session flags; unset ones leave the config file (or defaults) alone.
struct SessionFlags {
  std::string config_path;
  std::optional<std::string> policy;
  std::optional<double> alpha, epsilon, gamma, eta, w_p, tau_p, tau_s, window, horizon, vad_db;
  std::optional<int> codebook_size, pca_dim;

  void add(CLI::App* app, bool with_policy) {
    app->add_option("--config", config_path, "SessionConfig JSON file; flags override it")->check(CLI::ExistingFile);
    if (with_policy)
      app->add_option("--policy", policy, "qlearning | linucb | berlinucb")
          ->check(CLI::IsMember({"qlearning", "linucb", "berlinucb"}));
    app->add_option("--alpha", alpha, "UCB exploration weight");
    app->add_option("--epsilon", epsilon, "Q-learning exploration rate");
    app->add_option("--gamma", gamma, "Q-learning discount");
    app->add_option("--eta", eta, "Q-learning step size");
    app->add_option("--w-p", w_p, "BerlinUCB pseudo-reward weight");
    app->add_option("--tau-p", tau_p, "BerlinUCB centroid distance threshold");
    app->add_option("--tau-s", tau_s, "codebook distance threshold");
    app->add_option("--codebook-size", codebook_size, "codebook capacity");
    app->add_option("--feedback-window", window, "seconds a decision accepts feedback");
    app->add_option("--time-horizon", horizon, "time-reward horizon in seconds");
    app->add_option("--pca-dim", pca_dim, "project contexts to this many PCA components");
    app->add_option("--vad-threshold", vad_db, "speech energy threshold in dB");
  }

  json build() const {
    json c = config_path.empty() ? json::object() : json::parse(read_file(config_path));
    if (!c.is_object()) throw RuntimeError("config file must hold a JSON object");
    auto set = [&](const char* key, const auto& v) {
      if (v) c[key] = *v;
    };
    set("policy", policy);
    set("alpha", alpha);
    set("epsilon", epsilon);
    set("gamma", gamma);
    set("eta", eta);
    set("w_p", w_p);
    set("tau_p", tau_p);
    set("tau_s", tau_s);
    set("codebook_size", codebook_size);
    set("feedback_window_s", window);
    set("time_horizon_s", horizon);
    if (pca_dim) c["features"]["pca_dim"] = *pca_dim;
    if (vad_db) c["features"]["vad_energy_threshold_db"] = *vad_db;
    return c;
  }
};

struct StreamFlags {
  int speakers = 2;
  int dim = 8;
  double separation = 5.0;
  int segments = 2000;

  void add(CLI::App* app) {
    app->add_option("--speakers", speakers, "number of synthetic speakers")->check(CLI::PositiveNumber);
    app->add_option("--dim", dim, "context dimension")->check(CLI::PositiveNumber);
    app->add_option("--separation", separation, "centroid radius")->check(CLI::NonNegativeNumber);
    app->add_option("--segments", segments, "stream length")->check(CLI::PositiveNumber);
  }
  void into(json& req) const {
    req["speakers"] = speakers;
    req["dim"] = dim;
    req["separation"] = separation;
    req["segments"] = segments;
  }
};

void on_bound(int port, void*) {
  std::fprintf(stderr, "listening on port %d\n", port);
  std::fflush(stderr);
}

int run(int argc, char** argv) {
  CLI::App app{"diarl: online speaker diarization with reinforcement-learning policies", "diarl"};
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(diarl_version()));
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "benchmarks on synthetic or CSV corpora");
  bench->require_subcommand(1);

  auto* brun = bench->add_subcommand("run", "run one policy and print a MetricsReport");
  SessionFlags brun_cfg;
  StreamFlags brun_stream;
  std::string brun_policy = "linucb", corpus;
  std::uint64_t brun_seed = 0;
  double p = 1.0, delay = 0.0;
  brun_cfg.add(brun, false);
  brun_stream.add(brun);
  brun->add_option("--policy", brun_policy, "qlearning | linucb | berlinucb | random | oracle")
      ->check(CLI::IsMember({"qlearning", "linucb", "berlinucb", "random", "oracle"}));
  brun->add_option("--seed", brun_seed, "base seed")->required();
  brun->add_option("--p", p, "feedback probability")->check(CLI::Range(0.0, 1.0));
  brun->add_option("--delay", delay, "feedback delay in seconds")->check(CLI::NonNegativeNumber);
  brun->add_option("--corpus", corpus, "corpus directory instead of a synthetic stream")
      ->check(CLI::ExistingDirectory);

  auto* bcmp = bench->add_subcommand("compare", "compare policies across seeds and feedback rates");
  SessionFlags bcmp_cfg;
  StreamFlags bcmp_stream;
  std::vector<std::string> policies{"linucb", "berlinucb"};
  std::vector<double> p_grid{0.1, 1.0};
  std::uint64_t bcmp_seed = 0;
  int n_seeds = 20;
  std::string csv_path;
  bool cmp_json = false;
  bcmp_cfg.add(bcmp, false);
  bcmp_stream.add(bcmp);
  bcmp->add_option("--policies", policies, "policies to compare")->delimiter(',');
  bcmp->add_option("--p-grid", p_grid, "feedback probabilities")->delimiter(',');
  bcmp->add_option("--seed", bcmp_seed, "first seed")->required();
  bcmp->add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  bcmp->add_option("--csv", csv_path, "write per-run rows here");
  bcmp->add_flag("--json", cmp_json, "print the full result as JSON");

  auto* bgen = bench->add_subcommand("gen", "write a synthetic corpus (speakers.tsv + features_<id>.csv)");
  StreamFlags bgen_stream;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  bgen_stream.add(bgen);
  bgen->add_option("--out", gen_out, "output directory")->required();
  bgen->add_option("--seed", gen_seed, "seed")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "session service over line-delimited JSON on a TCP socket");
  SessionFlags serve_cfg;
  std::string serve_in = "-", listen = "127.0.0.1:7878", transcript, checkpoint, reward_log, pace = "none", resume;
  std::optional<std::uint64_t> serve_seed;
  int max_queue = 1000;
  serve_cfg.add(serve, true);
  serve->add_option("--seed", serve_seed, "session seed");
  serve->add_option("--in", serve_in, "PCM or WAV input; - for stdin");
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--transcript", transcript, "write the transcript here on shutdown");
  serve->add_option("--checkpoint", checkpoint, "write a checkpoint here on shutdown");
  serve->add_option("--reward-log", reward_log, "append reward records here");
  serve->add_option("--pace", pace, "none | realtime")->check(CLI::IsMember({"none", "realtime"}));
  serve->add_option("--max-client-queue", max_queue, "outbound lines per client before disconnect")
      ->check(CLI::PositiveNumber);
  serve->add_option("--resume", resume, "start from a checkpoint")->check(CLI::ExistingFile);

  // replay
  auto* rep = app.add_subcommand("replay", "offline transcript of a PCM/WAV file");
  SessionFlags rep_cfg;
  std::string rep_in, script, rep_out, rewards_out, features_out;
  std::optional<std::uint64_t> rep_seed;
  std::optional<std::int64_t> pause_after;
  rep_cfg.add(rep, true);
  rep->add_option("--seed", rep_seed, "session seed");
  rep->add_option("--in", rep_in, "PCM or WAV input")->required()->check(CLI::ExistingFile);
  rep->add_option("--script", script, "feedback script (JSON lines)")->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "transcript file (default stdout)");
  rep->add_option("--rewards", rewards_out, "reward records (JSON lines)");
  rep->add_option("--features", features_out, "per-segment feature CSV");
  rep->add_option("--pause-after", pause_after, "checkpoint and resume after this segment");

  // snapshot
  auto* snap = app.add_subcommand("snapshot", "checkpoint tools");
  snap->require_subcommand(1);
  auto* inspect = snap->add_subcommand("inspect", "summarize a checkpoint");
  std::string snap_path;
  inspect->add_option("path", snap_path, "checkpoint file")->required()->check(CLI::ExistingFile);

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (brun->parsed()) {
      json req;
      req["config"] = brun_cfg.build();
      brun_stream.into(req);
      req["policy"] = brun_policy;
      req["seed"] = brun_seed;
      req["p"] = p;
      req["delay_s"] = delay;
      if (!corpus.empty()) req["corpus"] = corpus;
      Owned out;
      check(diarl_bench_run(req.dump().c_str(), &out.p));
      std::cout << out.str() << "\n";
    } else if (bcmp->parsed()) {
      json req;
      req["config"] = bcmp_cfg.build();
      bcmp_stream.into(req);
      req["policies"] = policies;
      req["p_grid"] = p_grid;
      req["seed"] = bcmp_seed;
      req["n_seeds"] = n_seeds;
      Owned out;
      check(diarl_bench_compare(req.dump().c_str(), &out.p));
      const auto result = json::parse(out.str());
      if (!csv_path.empty()) write_file(csv_path, result["rows_csv"].get<std::string>());
      if (cmp_json)
        std::cout << out.str() << "\n";
      else
        std::cout << result["summary_text"].get<std::string>();
    } else if (bgen->parsed()) {
      json req;
      bgen_stream.into(req);
      req["seed"] = gen_seed;
      check(diarl_bench_generate(req.dump().c_str(), gen_out.c_str()));
    } else if (serve->parsed()) {
      json req;
      req["config"] = serve_cfg.build();
      if (serve_seed) req["config"]["seed"] = *serve_seed;
      req["listen"] = listen;
      req["transcript"] = transcript;
      req["checkpoint"] = checkpoint;
      req["reward_log"] = reward_log;
      req["pace"] = pace;
      req["max_client_queue"] = max_queue;
      if (!resume.empty()) req["resume"] = resume;
      int fd = 0;
      if (serve_in != "-") {
        fd = ::open(serve_in.c_str(), O_RDONLY);
        if (fd < 0) throw RuntimeError("cannot open " + serve_in);
      }
      const auto st = diarl_serve(req.dump().c_str(), fd, on_bound, nullptr);
      if (fd != 0) ::close(fd);
      check(st);
    } else if (rep->parsed()) {
      json req;
      req["config"] = rep_cfg.build();
      if (rep_seed) req["config"]["seed"] = *rep_seed;
      req["input"] = rep_in;
      if (!script.empty()) req["script"] = script;
      if (pause_after) req["pause_after"] = *pause_after;
      req["dump_features"] = !features_out.empty();
      Owned out;
      check(diarl_replay(req.dump().c_str(), &out.p));
      const auto result = json::parse(out.str());
      const auto text = result["transcript"].get<std::string>();
      if (rep_out.empty())
        std::cout << text;
      else
        write_file(rep_out, text);
      if (!rewards_out.empty()) {
        std::string lines;
        for (const auto& r : result["rewards"]) lines += r.dump() + "\n";
        write_file(rewards_out, lines);
      }
      if (!features_out.empty()) write_file(features_out, result["features_csv"].get<std::string>());
      for (const auto& e : result["errors"])
        std::cerr << "feedback rejected: " << e["code"].get<std::string>() << ": "
                  << e["message"].get<std::string>() << "\n";
    } else if (inspect->parsed()) {
      Owned out;
      check(diarl_snapshot_inspect(read_file(snap_path).c_str(), &out.p));
      std::cout << out.str() << "\n";
    }
  } catch (const RuntimeError& e) {
    std::cerr << "diarl: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const json::exception& e) {
    std::cerr << "diarl: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
