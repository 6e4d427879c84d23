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

// Acceptance run: one PASS/FAIL line per criterion, each with its runtime
// budget. Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "diarl/agents.hpp"
#include "diarl/audio.hpp"
#include "diarl/bench.hpp"
#include "diarl/error.hpp"
#include "diarl/features.hpp"
#include "diarl/replay.hpp"
#include "diarl/session.hpp"
#include "oracle/mfcc_reference.hpp"
#include "support/serve_harness.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace diarl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. MFCC against the long-double straight-line oracle.
Outcome mfcc_oracle() {
  Rng rng(1);
  const Mfcc m(FeatureConfig{});
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> frame(400);
    for (auto& v : frame) v = 2.0 * rng.uniform() - 1.0;
    const auto got = m.frame(frame);
    const auto want = oracle::ref_mfcc(frame);
    for (int i = 0; i < 13; ++i) {
      const double w = want[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::abs(got(i) - w) / std::max(std::abs(w), 1e-300));
    }
  }
  const auto silent = m.frame(std::vector<double>(400, 0.0));
  const double c0 = std::sqrt(26.0) * std::log(1e-10);
  double c0_err = std::abs(silent(0) - c0), rest = 0.0;
  for (int i = 1; i < 13; ++i) rest = std::max(rest, std::abs(silent(i)));
  return {worst <= 1e-6 && c0_err <= 1e-9 && rest <= 1e-9,
          fmt("max rel err %.2e over 100 frames; silence c0 err %.1e, others max %.1e", worst, c0_err, rest)};
}

// 2. Two-state MDP, action 1 pays 1 and action 0 pays 0, states alternate.
Outcome toy_mdp() {
  QTable t(QParams{0.1, 0.9, 0.2});
  Rng rng(2);
  std::size_t s = 0;
  for (int step = 0; step < 10000; ++step) {
    const auto d = select_q(step, s, 2, t, rng);
    t.update(s, d.chosen, d.chosen.value == 1 ? 1.0 : 0.0, 1 - s, 2);
    s = 1 - s;
  }
  bool ok = true;
  double worst = 0.0;
  for (std::size_t st = 0; st < 2; ++st) {
    ok &= t.get(st, ActionId{1}) > t.get(st, ActionId{0});
    worst = std::max(worst, std::abs(t.get(st, ActionId{1}) - 10.0));
  }
  return {ok && worst <= 0.05, fmt("greedy optimal in both states: %s; max |Q - 10| = %.4f", ok ? "yes" : "no", worst)};
}

std::vector<std::uint64_t> seeds20() {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= 20; ++i) s.push_back(i);
  return s;
}

SyntheticSpec easy_stream() {
  SyntheticSpec sp;
  sp.n_speakers = 2;
  sp.dim = 8;
  sp.separation = 5.0;
  sp.n_segments = 2000;
  return sp;
}

// 3. LinUCB on separable clusters with full feedback.
Outcome linucb_separable() {
  const auto c = compare_policies({BenchPolicy::named("linucb"), BenchPolicy::named("random")}, easy_stream(), {1.0},
                                  seeds20());
  int good = 0;
  double lo = 1.0;
  for (const auto& r : c.rows)
    if (r.config == "linucb") {
      good += r.metrics.final_window_accuracy >= 0.9;
      lo = std::min(lo, r.metrics.final_window_accuracy);
    }
  return {good >= 18, fmt("%d/20 seeds with final-window accuracy >= 0.9 (lowest %.3f)", good, lo)};
}

// 4. BerlinUCB vs LinUCB with sparse feedback, paired by seed.
Outcome berlin_direction() {
  const auto c = compare_policies({BenchPolicy::named("linucb"), BenchPolicy::named("berlinucb")}, easy_stream(),
                                  {0.1}, seeds20());
  std::map<std::uint64_t, double> lin, ber;
  for (const auto& r : c.rows) (r.config == "linucb" ? lin : ber)[r.seed] = r.metrics.final_window_accuracy;
  double worst_gap = 1.0, mean_l = 0, mean_b = 0;
  for (const auto& [seed, a] : lin) {
    worst_gap = std::min(worst_gap, ber[seed] - a);
    mean_l += a / 20;
    mean_b += ber[seed] / 20;
  }
  return {worst_gap >= -0.02 && mean_b > mean_l,
          fmt("mean berlinucb %.4f vs linucb %.4f; worst paired gap %+.4f", mean_b, mean_l, worst_gap)};
}

// 5. Randomized registry/feedback/decision sequences against the arm invariants.
Outcome arm_expansion() {
  const std::vector<PolicyKind> kinds{PolicyKind::kLinUcb, PolicyKind::kBerlinUcb, PolicyKind::kQLearning};
  std::int64_t checks = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed * 7919 + 1);
    SessionConfig cfg;
    cfg.policy = kinds[seed % kinds.size()];
    cfg.seed = seed;
    cfg.context_dim = 3;
    Session s(cfg);
    std::int64_t next = 0;
    std::size_t confirmed = 0, last_index = 0;
    auto name = [&] { return "spk" + std::to_string(rng.below(40)); };
    for (int op = 0; op < 1000; ++op) {
      const std::size_t before = s.registry().action_count();
      try {
        switch (rng.below(4)) {
          case 0: {
            const auto id = s.register_speaker(name());
            if (id.value != before || id.value <= last_index) return {false, fmt("seed %llu: index %zu not monotone", (unsigned long long)seed, id.value)};
            last_index = id.value;
            ++confirmed;
            break;
          }
          case 1: {
            const auto target = next ? static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(next))) : 0;
            FeedbackEvent ev{target, FeedbackKind::kNewSpeaker, name(), 0.0, 0.0};
            s.apply_feedback(ev);
            const auto id = *s.registry().find(ev.label);
            if (id.value != before || id.value <= last_index) return {false, "new_speaker index not monotone"};
            last_index = id.value;
            ++confirmed;
            break;
          }
          case 2: {
            const auto target = next ? static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(next))) : 0;
            s.apply_feedback({target, FeedbackKind::kCorrect, name(), 0.0, 0.0});
            break;
          }
          default: {
            Eigen::VectorXd x(3);
            for (int j = 0; j < 3; ++j) x(j) = rng.normal() * 3;
            s.step_context(next, next * 0.5, next * 0.5 + 1.0, x, rng.uniform() < 0.9);
            ++next;
          }
        }
      } catch (const Error&) {
        // Rejected operations must leave the action set untouched.
        if (s.registry().action_count() != before) return {false, "rejected op changed the action set"};
      }
      const auto& reg = s.registry();
      if (reg.action_count() != confirmed + 1) return {false, fmt("seed %llu op %d: |actions| != confirmed + 1", (unsigned long long)seed, op)};
      if (const auto* lin = s.linucb(); lin && lin->arm_count() != reg.action_count())
        return {false, "policy arm count differs from the registry"};
      if (!reg.name(kNewArm).empty()) return {false, "NEW arm bound to a name"};
      for (std::size_t i = 1; i < reg.action_count(); ++i)
        if (reg.find(reg.name(ActionId{i}))->value != i) return {false, "name/index binding changed"};
      for (const auto& e : s.timeline())
        if (e.decision && e.decision->chosen.value >= reg.action_count()) return {false, "decision on unbound arm"};
      ++checks;
    }
  }
  return {true, fmt("50 seeds x 1000 ops, %lld post-op checks held", static_cast<long long>(checks))};
}

// Script: confirm or name every fifth decision, as a UI user might.
std::vector<ScriptItem> stream_script(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScriptItem> items;
  for (std::int64_t id = 4; id < 119; id += 5) {
    protocol::Feedback fb{id, "confirm", std::nullopt, std::nullopt};
    if (rng.uniform() < 0.2) fb = {id, "rating", std::nullopt, 0.5};
    items.push_back({id, fb});
  }
  return items;
}

// 6. Determinism and checkpoint equivalence on a 60 s stream.
Outcome determinism() {
  const auto pcm = testsupport::two_voice_stream(60, 60.0);
  std::string detail;
  bool ok = true;
  for (auto k : {PolicyKind::kQLearning, PolicyKind::kLinUcb, PolicyKind::kBerlinUcb}) {
    SessionConfig cfg;
    cfg.policy = k;
    cfg.seed = 6;
    ReplayOptions o;
    o.script = stream_script(6);
    const auto a = replay(cfg, pcm, o);
    const auto b = replay(cfg, pcm, o);
    o.pause_after = 57;
    const auto c = replay(cfg, pcm, o);
    const bool same = a.transcript == b.transcript;
    const bool resumed = a.transcript == c.transcript && a.hash == c.hash;
    ok &= same && resumed && a.segments == 119;
    detail += fmt("%s: rerun %s, resume %s; ", std::string(policy_name(k)).c_str(), same ? "identical" : "DIFFERS",
                  resumed ? "identical" : "DIFFERS");
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 7. Indistinguishable speakers: every policy at chance, oracle without regret.
Outcome chance_level() {
  SyntheticSpec sp;
  sp.n_speakers = 4;
  sp.dim = 8;
  sp.separation = 0.0;
  sp.n_segments = 5000;
  const auto c = compare_policies({BenchPolicy::named("qlearning"), BenchPolicy::named("linucb"),
                                   BenchPolicy::named("berlinucb"), BenchPolicy::named("random"),
                                   BenchPolicy::named("oracle")},
                                  sp, {1.0}, seeds20());
  bool ok = true;
  std::string detail;
  for (const auto& s : c.summary) {
    if (s.config == "oracle") continue;
    const bool in = std::abs(s.mean_accuracy - 0.25) <= 0.1;
    ok &= in;
    detail += fmt("%s %.3f, ", s.config.c_str(), s.mean_accuracy);
  }
  double oracle_regret = 0.0;
  for (const auto& r : c.rows)
    if (r.config == "oracle") oracle_regret += r.metrics.regret;
  ok &= oracle_regret == 0.0;
  return {ok, "mean final-window accuracy " + detail + fmt("oracle regret %.1f", oracle_regret)};
}

// 8. Scripted client against `diarl serve` versus the golden transcript.
Outcome serve_golden() {
  testsupport::TempDir dir;
  const std::string fixtures = DIARL_FIXTURES_DIR;
  const std::string golden = std::string(DIARL_GOLDEN_DIR) + "/serve_transcript.jsonl";
  testsupport::ServeScenario sc{DIARL_CLI_PATH,
                                fixtures + "/two_speakers.wav",
                                load_script(fixtures + "/feedback_script.jsonl"),
                                {"--seed", "8", "--policy", "berlinucb"},
                                dir.str(),
                                {"{\"type\":\"feedback\",", "{\"type\":\"shout\"}", "{\"type\":\"feedback\",\"kind\":\"confirm\"}",
                                 "[]", "{\"type\":\"reward_record\",\"segment_id\":0,\"r_user\":null,\"r_time\":0,\"r_conf\":0,\"r_total\":0}"}};
  const auto run = testsupport::run_serve(sc);
  if (std::getenv("DIARL_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(DIARL_GOLDEN_DIR);
    std::ofstream(golden, std::ios::binary) << run.transcript;
  }
  const auto want = testsupport::slurp(golden);
  const std::vector<std::pair<std::string, std::string>> codes{
      {sc.malformed[0], "BAD_JSON"}, {sc.malformed[1], "UNKNOWN_TYPE"}, {sc.malformed[2], "BAD_REQUEST"},
      {sc.malformed[3], "BAD_JSON"}, {sc.malformed[4], "BAD_REQUEST"}};
  const bool codes_ok = run.malformed == codes;
  bool unknown_segment = false;
  for (const auto& c : run.error_codes) unknown_segment |= c == "UNKNOWN_SEGMENT";
  const bool transcript_ok = !want.empty() && run.transcript == want;
  const bool alive = run.labels == 39 && run.ack && run.ack->length == 39 && run.exit_code == 0;
  return {transcript_ok && codes_ok && unknown_segment && alive,
          fmt("transcript %s golden (%zu bytes); malformed codes %s; session %s", transcript_ok ? "matches" : "DIFFERS from",
              run.transcript.size(), codes_ok && unknown_segment ? "as specified" : "WRONG",
              alive ? "completed all 39 segments" : "DID NOT COMPLETE")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "MFCC oracle equivalence", 5, mfcc_oracle},
      {2, "Toy-MDP Q-learning convergence", 5, toy_mdp},
      {3, "LinUCB separable-cluster accuracy", 60, linucb_separable},
      {4, "Semi-supervision direction", 120, berlin_direction},
      {5, "Arm-expansion invariant", 10, arm_expansion},
      {6, "Determinism and checkpointing", 30, determinism},
      {7, "Chance-level sanity", 60, chance_level},
      {8, "Protocol golden test", 30, serve_golden},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d: %s  %s: %s [%.2f s, budget %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  return failed;
}
