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
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "diarl/session.hpp"

namespace diarl {

struct LabeledSegment {
  Eigen::VectorXd features;
  std::size_t speaker = 0;
  bool speech = true;
};

struct LabeledStream {
  int dim = 0;
  std::vector<std::string> speaker_names;
  std::vector<LabeledSegment> segments;
};

struct SyntheticSpec {
  int n_speakers = 2;
  int dim = 8;
  double separation = 5.0;
  int n_segments = 2000;
  std::uint64_t seed = 0;
};

// Speaker centroids on a sphere of radius `separation`, unit Gaussian noise
// per segment, geometric speaker turns with mean length 4.
LabeledStream generate_synthetic(const SyntheticSpec& spec);

// speakers.tsv (id<TAB>name) plus features_<id>.csv per speaker.
struct Corpus {
  int dim = 0;
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::vector<Eigen::VectorXd>> rows;  // per speaker
};

Corpus load_corpus(const std::string& dir);
void write_corpus(const std::string& dir, const LabeledStream& stream);
// Concatenates per-speaker rows following the seeded turn schedule; each
// speaker's rows are consumed in order and wrap around.
LabeledStream corpus_stream(const Corpus& corpus, int n_segments, std::uint64_t seed);

enum class Baseline { kNone, kRandom, kOracle };

struct BenchPolicy {
  std::string name;
  SessionConfig session;
  Baseline baseline = Baseline::kNone;

  // "qlearning", "linucb", "berlinucb", "random" or "oracle" over `base`.
  static BenchPolicy named(const std::string& name, SessionConfig base = {});
};

struct FeedbackPolicy {
  double p = 1.0;
  double delay_s = 0.0;
};

struct MetricsReport {
  std::string policy;
  std::int64_t n_segments = 0;
  std::int64_t speech_decisions = 0;
  std::int64_t non_speech_skips = 0;
  std::int64_t correct = 0;
  std::int64_t errors = 0;
  double error_rate = 0.0;
  double final_window_accuracy = 0.0;
  double cumulative_reward = 0.0;
  double regret = 0.0;
  std::int64_t reveals = 0;
  std::int64_t feedback_rejected = 0;
  std::int64_t speakers_registered = 0;
  std::map<std::string, std::map<std::string, std::int64_t>> confusion;

  nlohmann::ordered_json to_json() const;
};

// Fraction of a run scored as the final window.
inline constexpr double kFinalWindowFraction = 0.2;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

// Drives one session over `stream`, revealing oracle feedback with
// probability fp.p per decision (reveal coins seeded from `seed`).
MetricsReport run_benchmark(const LabeledStream& stream, const BenchPolicy& policy, const FeedbackPolicy& fp,
                            std::uint64_t seed);

struct ComparisonRow {
  std::string config;
  double p = 0.0;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

struct ComparisonSummary {
  std::string config;
  double p = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_error_rate = 0.0;
  double std_error_rate = 0.0;
  double mean_regret = 0.0;
};

struct PairWins {
  std::string a;
  std::string b;
  double p = 0.0;
  int a_wins = 0;
  int b_wins = 0;
  int ties = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<ComparisonSummary> summary;
  std::vector<PairWins> wins;

  std::string rows_csv() const;
  std::string summary_text() const;
};

// Every config on the same seeded streams for each p. Stream, policy and
// reveal seeds all derive from each entry of `seeds`.
Comparison compare_policies(const std::vector<BenchPolicy>& configs, const SyntheticSpec& stream_spec,
                            const std::vector<double>& p_grid, const std::vector<std::uint64_t>& seeds);

}  // namespace diarl
