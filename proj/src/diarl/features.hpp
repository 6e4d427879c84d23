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

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <json.hpp>

namespace diarl {

inline constexpr int kSampleRate = 16000;

struct AudioSegment {
  std::int64_t segment_id = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<std::int16_t> samples;
};

struct FeatureVector {
  std::int64_t segment_id = 0;
  Eigen::VectorXd values;
};

struct FeatureConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  double preemphasis = 0.97;
  int fft_size = 512;
  int n_mels = 26;
  int n_ceps = 13;
  double mel_fmin_hz = 0.0;
  double mel_fmax_hz = 8000.0;
  double log_floor = 1e-10;
  double segment_len_s = 1.0;
  double segment_hop_s = 0.5;
  double vad_energy_threshold_db = -55.0;
  std::optional<int> pca_dim;
  // Speech segments collected before the PCA projection is fitted.
  int pca_warmup = 20;
  bool cmvn_enabled = true;

  int frame_samples() const;
  int hop_samples() const;
  int segment_samples() const;
  int segment_hop_samples() const;
  // Dimension of the vectors handed to policies.
  int output_dim() const { return pca_dim ? *pca_dim : 2 * n_ceps; }

  // Throws Error(kConfig) when a parameter is out of range.
  void validate() const;
};

void to_json(nlohmann::json& j, const FeatureConfig& cfg);
void from_json(const nlohmann::json& j, FeatureConfig& cfg);

// Precomputed MFCC front-end for one configuration: Hamming window,
// triangular mel filterbank over FFT bins, orthonormal DCT-II.
class Mfcc {
 public:
  explicit Mfcc(const FeatureConfig& cfg);

  // Cepstra of one raw analysis frame (pre-emphasis and windowing applied
  // here). Frame values are full-scale normalized samples.
  Eigen::VectorXd frame(std::span<const double> raw) const;

  // Log mel energies (floored) of one raw frame, before the DCT.
  Eigen::VectorXd log_mel(std::span<const double> raw) const;

  // Full n_mels x n_mels orthonormal DCT-II matrix.
  const Eigen::MatrixXd& dct() const { return dct_; }
  // n_mels x (fft_size/2 + 1) filter weights.
  const Eigen::MatrixXd& filterbank() const { return filters_; }
  const FeatureConfig& config() const { return cfg_; }

 private:
  FeatureConfig cfg_;
  std::vector<double> window_;
  Eigen::MatrixXd filters_;
  Eigen::MatrixXd dct_;
  mutable Eigen::FFT<double> fft_;
};

Eigen::VectorXd mfcc_frame(std::span<const double> frame, const FeatureConfig& cfg);

// Per-coefficient mean then per-coefficient (population) standard deviation
// of the frame cepstra across the segment: 2 * n_ceps values.
Eigen::VectorXd segment_statistics(const AudioSegment& segment, const Mfcc& mfcc);

// Energy gate: mean frame log-energy (dBFS) above the configured threshold.
bool is_speech(const AudioSegment& segment, const FeatureConfig& cfg);

// Mean frame energy in dB relative to full scale; frame power floored at
// log_floor.
double mean_frame_energy_db(const AudioSegment& segment, const FeatureConfig& cfg);

struct PcaProjection {
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  Eigen::VectorXd mean;        // d
  Eigen::VectorXd explained;   // k eigenvalues, descending
  double total_variance = 0.0;

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& z) const;
  double explained_fraction() const;
};

PcaProjection fit_pca(std::span<const Eigen::VectorXd> history, int k);

// Session-lifetime running standardization (Welford).
class Cmvn {
 public:
  explicit Cmvn(int dim = 0);

  // Folds x into the running statistics, then standardizes it.
  Eigen::VectorXd update_and_standardize(const Eigen::VectorXd& x);

  std::int64_t count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& m2() const { return m2_; }
  void restore(std::int64_t count, Eigen::VectorXd mean, Eigen::VectorXd m2);

  static constexpr std::int64_t kWarmupSegments = 10;

 private:
  std::int64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// Stateful per-session feature extraction: statistics, CMVN, optional PCA.
class FeaturePipeline {
 public:
  explicit FeaturePipeline(const FeatureConfig& cfg);

  FeatureVector extract(const AudioSegment& segment);
  // Same transform for precomputed raw statistics.
  FeatureVector transform(std::int64_t segment_id, const Eigen::VectorXd& raw);

  const FeatureConfig& config() const { return cfg_; }
  const Mfcc& mfcc() const { return mfcc_; }
  int dim() const { return cfg_.output_dim(); }

  nlohmann::json save() const;
  void load(const nlohmann::json& j);

 private:
  FeatureConfig cfg_;
  Mfcc mfcc_;
  Cmvn cmvn_;
  std::optional<PcaProjection> pca_;
  std::vector<Eigen::VectorXd> pca_history_;
};

// CSV row for the feature dump: segment_id,t0,t1,v0..v{d-1}, %.9g.
std::string feature_csv_row(const FeatureVector& fv, double t0, double t1);

}  // namespace diarl
