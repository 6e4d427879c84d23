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

#include "diarl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diarl/error.hpp"

namespace diarl {

namespace {

constexpr double kTurnEndProbability = 0.25;  // geometric turns, mean 4

std::vector<std::size_t> turn_schedule(std::size_t n_speakers, int n_segments, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n_segments));
  std::size_t current = rng.below(n_speakers);
  for (int i = 0; i < n_segments; ++i) {
    out.push_back(current);
    if (n_speakers > 1 && rng.bernoulli(kTurnEndProbability)) {
      // Uniform over the other speakers.
      std::size_t next = rng.below(n_speakers - 1);
      if (next >= current) ++next;
      current = next;
    }
  }
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t state = base ^ (salt * 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

LabeledStream generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_speakers < 1) fail(ErrorCode::kConfig, "need at least one speaker");
  if (spec.dim < 1) fail(ErrorCode::kConfig, "dimension must be >= 1");
  if (spec.separation < 0.0) fail(ErrorCode::kConfig, "separation must be >= 0");
  if (spec.n_segments < 0) fail(ErrorCode::kConfig, "segment count must be >= 0");

  Rng rng(spec.seed);
  LabeledStream stream;
  stream.dim = spec.dim;
  std::vector<Eigen::VectorXd> centroids;
  for (int s = 0; s < spec.n_speakers; ++s) {
    Eigen::VectorXd g(spec.dim);
    for (int i = 0; i < spec.dim; ++i) g(i) = rng.normal();
    centroids.push_back(spec.separation * g / g.norm());
    stream.speaker_names.push_back("spk" + std::to_string(s));
  }
  const auto schedule = turn_schedule(static_cast<std::size_t>(spec.n_speakers), spec.n_segments, rng);
  for (const auto speaker : schedule) {
    Eigen::VectorXd x = centroids[speaker];
    for (int i = 0; i < spec.dim; ++i) x(i) += rng.normal();
    stream.segments.push_back({std::move(x), speaker, true});
  }
  return stream;
}

Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  Corpus corpus;
  std::ifstream tsv(fs::path(dir) / "speakers.tsv");
  if (!tsv) fail(ErrorCode::kIo, "cannot open " + (fs::path(dir) / "speakers.tsv").string());
  std::string line;
  while (std::getline(tsv, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(ErrorCode::kInput, "speakers.tsv: expected id<TAB>name");
    corpus.ids.push_back(trim(line.substr(0, tab)));
    corpus.names.push_back(trim(line.substr(tab + 1)));
  }
  if (corpus.ids.empty()) fail(ErrorCode::kInput, "corpus has no speakers");
  for (const auto& id : corpus.ids) {
    const auto path = fs::path(dir) / ("features_" + id + ".csv");
    std::ifstream csv(path);
    if (!csv) fail(ErrorCode::kIo, "cannot open " + path.string());
    std::vector<Eigen::VectorXd> rows;
    while (std::getline(csv, line)) {
      line = trim(line);
      if (line.empty()) continue;
      std::vector<double> vals;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
      if (corpus.dim == 0) corpus.dim = static_cast<int>(vals.size());
      if (static_cast<int>(vals.size()) != corpus.dim)
        fail(ErrorCode::kInput, path.string() + ": inconsistent row width");
      rows.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    if (rows.empty()) fail(ErrorCode::kInput, path.string() + ": no rows");
    corpus.rows.push_back(std::move(rows));
  }
  return corpus;
}

void write_corpus(const std::string& dir, const LabeledStream& stream) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream tsv(fs::path(dir) / "speakers.tsv");
  std::vector<std::ofstream> files;
  for (std::size_t s = 0; s < stream.speaker_names.size(); ++s) {
    tsv << s << '\t' << stream.speaker_names[s] << '\n';
    files.emplace_back(fs::path(dir) / ("features_" + std::to_string(s) + ".csv"));
  }
  char buf[32];
  for (const auto& seg : stream.segments) {
    auto& f = files[seg.speaker];
    for (Eigen::Index i = 0; i < seg.features.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", seg.features(i));
      f << (i ? "," : "") << buf;
    }
    f << '\n';
  }
  if (!tsv) fail(ErrorCode::kIo, "cannot write corpus to " + dir);
}

LabeledStream corpus_stream(const Corpus& corpus, int n_segments, std::uint64_t seed) {
  Rng rng(seed);
  LabeledStream stream;
  stream.dim = corpus.dim;
  stream.speaker_names = corpus.names;
  std::vector<std::size_t> cursor(corpus.rows.size(), 0);
  for (const auto speaker : turn_schedule(corpus.rows.size(), n_segments, rng)) {
    const auto& rows = corpus.rows[speaker];
    stream.segments.push_back({rows[cursor[speaker]++ % rows.size()], speaker, true});
  }
  return stream;
}

BenchPolicy BenchPolicy::named(const std::string& name, SessionConfig base) {
  BenchPolicy p;
  p.name = name;
  p.session = std::move(base);
  if (name == "random") {
    p.baseline = Baseline::kRandom;
  } else if (name == "oracle") {
    p.baseline = Baseline::kOracle;
  } else {
    p.session.policy = parse_policy(name);
  }
  return p;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["policy"] = policy;
  j["n_segments"] = n_segments;
  j["speech_decisions"] = speech_decisions;
  j["non_speech_skips"] = non_speech_skips;
  j["correct"] = correct;
  j["errors"] = errors;
  j["error_rate"] = error_rate;
  j["final_window_accuracy"] = final_window_accuracy;
  j["cumulative_reward"] = cumulative_reward;
  j["regret"] = regret;
  j["reveals"] = reveals;
  j["feedback_rejected"] = feedback_rejected;
  j["speakers_registered"] = speakers_registered;
  j["confusion"] = confusion;
  return j;
}

MetricsReport run_benchmark(const LabeledStream& stream, const BenchPolicy& policy, const FeedbackPolicy& fp,
                            std::uint64_t seed) {
  if (!(fp.p >= 0.0 && fp.p <= 1.0)) fail(ErrorCode::kConfig, "reveal probability must be in [0, 1]");
  if (fp.delay_s < 0.0) fail(ErrorCode::kConfig, "feedback delay must be >= 0");

  SessionConfig cfg = policy.session;
  cfg.context_dim = stream.dim;
  Session session(cfg);
  Rng reveal_rng(seed);

  std::size_t current_truth = 0;
  if (policy.baseline == Baseline::kRandom) {
    // Uniform over confirmed speakers; NEW only while nobody is registered.
    session.set_chooser([](const SpeakerRegistry& reg, Rng& rng) {
      return reg.speaker_count() == 0 ? kNewArm : ActionId{1 + rng.below(reg.speaker_count())};
    });
  } else if (policy.baseline == Baseline::kOracle) {
    session.set_chooser([&](const SpeakerRegistry& reg, Rng&) {
      return reg.find(stream.speaker_names[current_truth]).value_or(kNewArm);
    });
  }

  MetricsReport report;
  report.policy = policy.name;
  std::vector<bool> seen(stream.speaker_names.size(), false);
  std::vector<bool> outcomes;
  struct Pending {
    double due = 0.0;
    FeedbackEvent event;
  };
  std::deque<Pending> pending;

  auto collect = [&] {
    for (const auto& ev : session.take_events())
      if (const auto* r = std::get_if<RewardEvent>(&ev)) report.cumulative_reward += r->record.r_total;
  };
  auto deliver_due = [&] {
    while (!pending.empty() && pending.front().due <= session.now()) {
      try {
        session.apply_feedback(pending.front().event);
      } catch (const Error&) {
        ++report.feedback_rejected;
      }
      pending.pop_front();
    }
    collect();
  };

  const double hop = cfg.features.segment_hop_s;
  const double len = cfg.features.segment_len_s;
  for (std::size_t i = 0; i < stream.segments.size(); ++i) {
    const auto& seg = stream.segments[i];
    const auto id = static_cast<std::int64_t>(i);
    const double t0 = static_cast<double>(i) * hop;
    current_truth = seg.speaker;
    session.step_context(id, t0, t0 + len, seg.features, seg.speech);
    collect();
    ++report.n_segments;
    if (!seg.speech) {
      ++report.non_speech_skips;
      deliver_due();
      continue;
    }

    const auto& truth = stream.speaker_names[seg.speaker];
    const auto registered = session.registry().find(truth);
    const bool first = !seen[seg.speaker];
    seen[seg.speaker] = true;
    const ActionId chosen = session.find_entry(id)->decision->chosen;
    const bool ok = registered ? chosen == *registered : (first && chosen.is_new());
    ++report.speech_decisions;
    ok ? ++report.correct : ++report.errors;
    report.regret += ok ? 0.0 : 2.0;
    outcomes.push_back(ok);
    report.confusion[truth][chosen.is_new() ? kNewLabel : session.registry().name(chosen)] += 1;

    const bool revealed = reveal_rng.bernoulli(fp.p);
    report.reveals += revealed ? 1 : 0;
    FeedbackEvent ev;
    ev.segment_id = id;
    if (!registered) {
      if (revealed || policy.baseline == Baseline::kOracle) {
        ev.kind = FeedbackKind::kNewSpeaker;
        ev.label = truth;
        pending.push_back({session.now() + fp.delay_s, ev});
      }
    } else if (revealed) {
      ev.kind = ok ? FeedbackKind::kConfirm : FeedbackKind::kCorrect;
      if (!ok) ev.label = truth;
      pending.push_back({session.now() + fp.delay_s, ev});
    }
    deliver_due();
  }
  session.finish();
  collect();

  report.error_rate = report.speech_decisions ? static_cast<double>(report.errors) / report.speech_decisions : 0.0;
  const std::size_t n = outcomes.size();
  const std::size_t window = n - static_cast<std::size_t>(std::floor(n * (1.0 - kFinalWindowFraction)));
  std::size_t hits = 0;
  for (std::size_t i = n - window; i < n; ++i) hits += outcomes[i] ? 1 : 0;
  report.final_window_accuracy = window ? static_cast<double>(hits) / static_cast<double>(window) : 0.0;
  report.speakers_registered = static_cast<std::int64_t>(session.registry().speaker_count());
  return report;
}

std::string Comparison::rows_csv() const {
  std::string out = "config,p,seed,error_rate,final_window_accuracy,cumulative_reward,regret,reveals\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%llu,%.9g,%.9g,%.9g,%.9g,%lld\n", r.config.c_str(), r.p,
                  static_cast<unsigned long long>(r.seed), r.metrics.error_rate, r.metrics.final_window_accuracy,
                  r.metrics.cumulative_reward, r.metrics.regret, static_cast<long long>(r.metrics.reveals));
    out += buf;
  }
  return out;
}

std::string Comparison::summary_text() const {
  std::string out;
  char buf[256];
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%-12s p=%-5g accuracy %.4f +- %.4f  error %.4f +- %.4f  regret %.1f\n",
                  s.config.c_str(), s.p, s.mean_accuracy, s.std_accuracy, s.mean_error_rate, s.std_error_rate,
                  s.mean_regret);
    out += buf;
  }
  for (const auto& w : wins) {
    std::snprintf(buf, sizeof buf, "p=%-5g %s vs %s: %d-%d (%d ties)\n", w.p, w.a.c_str(), w.b.c_str(), w.a_wins,
                  w.b_wins, w.ties);
    out += buf;
  }
  return out;
}

Comparison compare_policies(const std::vector<BenchPolicy>& configs, const SyntheticSpec& stream_spec,
                            const std::vector<double>& p_grid, const std::vector<std::uint64_t>& seeds) {
  if (configs.size() < 2) fail(ErrorCode::kConfig, "compare needs at least two configs");
  Comparison out;
  // acc[p][config][seed]
  std::vector<std::vector<std::vector<double>>> acc(p_grid.size(), std::vector<std::vector<double>>(configs.size()));
  std::vector<std::vector<std::vector<double>>> err = acc;
  std::vector<std::vector<std::vector<double>>> reg = acc;
  for (const auto seed : seeds) {
    SyntheticSpec spec = stream_spec;
    spec.seed = derive_seed(seed, 1);
    const auto stream = generate_synthetic(spec);
    for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
      for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        BenchPolicy policy = configs[ci];
        policy.session.seed = derive_seed(seed, 2);
        auto m = run_benchmark(stream, policy, FeedbackPolicy{p_grid[pi], 0.0}, derive_seed(seed, 3));
        acc[pi][ci].push_back(m.final_window_accuracy);
        err[pi][ci].push_back(m.error_rate);
        reg[pi][ci].push_back(m.regret);
        out.rows.push_back({configs[ci].name, p_grid[pi], seed, std::move(m)});
      }
    }
  }
  for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
    for (std::size_t ci = 0; ci < configs.size(); ++ci)
      out.summary.push_back({configs[ci].name, p_grid[pi], mean_of(acc[pi][ci]), std_of(acc[pi][ci]),
                             mean_of(err[pi][ci]), std_of(err[pi][ci]), mean_of(reg[pi][ci])});
    for (std::size_t a = 0; a < configs.size(); ++a)
      for (std::size_t b = a + 1; b < configs.size(); ++b) {
        PairWins w{configs[a].name, configs[b].name, p_grid[pi]};
        for (std::size_t s = 0; s < seeds.size(); ++s) {
          const double da = acc[pi][a][s];
          const double db = acc[pi][b][s];
          da > db ? ++w.a_wins : db > da ? ++w.b_wins : ++w.ties;
        }
        out.wins.push_back(w);
      }
  }
  return out;
}

}  // namespace diarl
