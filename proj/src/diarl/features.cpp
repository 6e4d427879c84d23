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

#include "diarl/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "diarl/error.hpp"
#include "diarl/json_util.hpp"

namespace diarl {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

int ms_to_samples(double ms) { return static_cast<int>(std::lround(ms * kSampleRate / 1000.0)); }

template <typename F>
void for_each_frame(const AudioSegment& segment, const FeatureConfig& cfg, F&& fn) {
  const int frame_len = cfg.frame_samples();
  const int hop = cfg.hop_samples();
  const auto n = static_cast<int>(segment.samples.size());
  if (n < frame_len) fail(ErrorCode::kInput, "segment shorter than one analysis frame");
  std::vector<double> frame(static_cast<std::size_t>(frame_len));
  for (int start = 0; start + frame_len <= n; start += hop) {
    for (int i = 0; i < frame_len; ++i)
      frame[static_cast<std::size_t>(i)] = segment.samples[static_cast<std::size_t>(start + i)] / 32768.0;
    fn(std::span<const double>(frame));
  }
}

}  // namespace

int FeatureConfig::frame_samples() const { return ms_to_samples(frame_len_ms); }
int FeatureConfig::hop_samples() const { return ms_to_samples(hop_ms); }
int FeatureConfig::segment_samples() const {
  return static_cast<int>(std::lround(segment_len_s * kSampleRate));
}
int FeatureConfig::segment_hop_samples() const {
  return static_cast<int>(std::lround(segment_hop_s * kSampleRate));
}

void FeatureConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kConfig, std::string("feature config: ") + what);
  };
  require(frame_len_ms > 0 && hop_ms > 0, "frame_len_ms and hop_ms must be positive");
  require(frame_samples() >= 2, "frame too short");
  require(preemphasis >= 0.0 && preemphasis < 1.0, "preemphasis must be in [0, 1)");
  require(fft_size >= frame_samples(), "fft_size must be >= frame samples");
  require(n_mels >= 1 && n_ceps >= 1, "n_mels and n_ceps must be positive");
  require(n_ceps <= n_mels, "n_ceps must be <= n_mels");
  require(mel_fmin_hz >= 0.0 && mel_fmin_hz < mel_fmax_hz, "need 0 <= mel_fmin_hz < mel_fmax_hz");
  require(mel_fmax_hz <= kSampleRate / 2.0, "mel_fmax_hz must be <= sample_rate / 2");
  require(log_floor > 0.0, "log_floor must be positive");
  require(segment_samples() >= frame_samples(), "segment shorter than one frame");
  require(segment_hop_s > 0.0, "segment_hop_s must be positive");
  if (pca_dim) {
    require(*pca_dim >= 1 && *pca_dim <= 2 * n_ceps, "pca_dim must be in [1, 2*n_ceps]");
    require(pca_warmup >= *pca_dim, "pca_warmup must be >= pca_dim");
  }
}

void to_json(nlohmann::json& j, const FeatureConfig& c) {
  j = nlohmann::json{{"frame_len_ms", c.frame_len_ms},
                     {"hop_ms", c.hop_ms},
                     {"preemphasis", c.preemphasis},
                     {"fft_size", c.fft_size},
                     {"n_mels", c.n_mels},
                     {"n_ceps", c.n_ceps},
                     {"mel_fmin_hz", c.mel_fmin_hz},
                     {"mel_fmax_hz", c.mel_fmax_hz},
                     {"log_floor", c.log_floor},
                     {"segment_len_s", c.segment_len_s},
                     {"segment_hop_s", c.segment_hop_s},
                     {"vad_energy_threshold_db", c.vad_energy_threshold_db},
                     {"pca_dim", c.pca_dim ? nlohmann::json(*c.pca_dim) : nlohmann::json(nullptr)},
                     {"pca_warmup", c.pca_warmup},
                     {"cmvn_enabled", c.cmvn_enabled}};
}

void from_json(const nlohmann::json& j, FeatureConfig& c) {
  c.frame_len_ms = j.value("frame_len_ms", c.frame_len_ms);
  c.hop_ms = j.value("hop_ms", c.hop_ms);
  c.preemphasis = j.value("preemphasis", c.preemphasis);
  c.fft_size = j.value("fft_size", c.fft_size);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.n_ceps = j.value("n_ceps", c.n_ceps);
  c.mel_fmin_hz = j.value("mel_fmin_hz", c.mel_fmin_hz);
  c.mel_fmax_hz = j.value("mel_fmax_hz", c.mel_fmax_hz);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.segment_len_s = j.value("segment_len_s", c.segment_len_s);
  c.segment_hop_s = j.value("segment_hop_s", c.segment_hop_s);
  c.vad_energy_threshold_db = j.value("vad_energy_threshold_db", c.vad_energy_threshold_db);
  if (j.contains("pca_dim")) {
    if (j["pca_dim"].is_null())
      c.pca_dim.reset();
    else
      c.pca_dim = j["pca_dim"].get<int>();
  }
  c.pca_warmup = j.value("pca_warmup", c.pca_warmup);
  c.cmvn_enabled = j.value("cmvn_enabled", c.cmvn_enabled);
}

// ---------------------------------------------------------------------------

Mfcc::Mfcc(const FeatureConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int n = cfg_.frame_samples();
  window_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    window_[static_cast<std::size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));

  // Triangles on the continuous frequency axis, so adjacent filters sum to one
  // between the first and last centre frequencies.
  const int n_bins = cfg_.fft_size / 2 + 1;
  const int m = cfg_.n_mels;
  std::vector<double> edges(static_cast<std::size_t>(m + 2));
  const double mel_lo = hz_to_mel(cfg_.mel_fmin_hz);
  const double mel_hi = hz_to_mel(cfg_.mel_fmax_hz);
  for (int i = 0; i < m + 2; ++i)
    edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (m + 1));
  filters_ = Eigen::MatrixXd::Zero(m, n_bins);
  for (int f = 0; f < m; ++f) {
    const double lo = edges[static_cast<std::size_t>(f)];
    const double mid = edges[static_cast<std::size_t>(f + 1)];
    const double hi = edges[static_cast<std::size_t>(f + 2)];
    for (int k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * kSampleRate / cfg_.fft_size;
      const double w = std::min((hz - lo) / (mid - lo), (hi - hz) / (hi - mid));
      if (w > 0.0) filters_(f, k) = w;
    }
  }

  dct_.resize(m, m);
  for (int k = 0; k < m; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / m);
    for (int i = 0; i < m; ++i)
      dct_(k, i) = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * m));
  }
}

Eigen::VectorXd Mfcc::log_mel(std::span<const double> raw) const {
  const int n = cfg_.frame_samples();
  if (static_cast<int>(raw.size()) != n)
    fail(ErrorCode::kConfig, "frame length " + std::to_string(raw.size()) + " != " + std::to_string(n));
  for (double v : raw)
    if (!std::isfinite(v)) fail(ErrorCode::kInput, "non-finite sample in frame");

  std::vector<double> buf(static_cast<std::size_t>(cfg_.fft_size), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double emphasized = i == 0 ? raw[0] : raw[ui] - cfg_.preemphasis * raw[ui - 1];
    buf[ui] = emphasized * window_[ui];
  }
  std::vector<std::complex<double>> spectrum;
  fft_.fwd(spectrum, buf);

  const int n_bins = cfg_.fft_size / 2 + 1;
  Eigen::VectorXd power(n_bins);
  for (int k = 0; k < n_bins; ++k) power(k) = std::norm(spectrum[static_cast<std::size_t>(k)]);
  Eigen::VectorXd energies = filters_ * power;
  for (Eigen::Index i = 0; i < energies.size(); ++i)
    energies(i) = std::log(std::max(energies(i), cfg_.log_floor));
  return energies;
}

Eigen::VectorXd Mfcc::frame(std::span<const double> raw) const {
  return dct_.topRows(cfg_.n_ceps) * log_mel(raw);
}

Eigen::VectorXd mfcc_frame(std::span<const double> frame, const FeatureConfig& cfg) {
  return Mfcc(cfg).frame(frame);
}

Eigen::VectorXd segment_statistics(const AudioSegment& segment, const Mfcc& mfcc) {
  const int c = mfcc.config().n_ceps;
  std::vector<Eigen::VectorXd> frames;
  for_each_frame(segment, mfcc.config(), [&](std::span<const double> f) { frames.push_back(mfcc.frame(f)); });
  // Sums are shifted by the first frame so that identical frames give an
  // exact mean and an exactly zero spread.
  const auto count = static_cast<double>(frames.size());
  Eigen::VectorXd shifted = Eigen::VectorXd::Zero(c);
  for (const auto& f : frames) shifted += f - frames.front();
  const Eigen::VectorXd mean = frames.front() + shifted / count;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(c);
  for (const auto& f : frames) var += (f - mean).cwiseAbs2();
  Eigen::VectorXd out(2 * c);
  out << mean, (var / count).cwiseSqrt();
  return out;
}

double mean_frame_energy_db(const AudioSegment& segment, const FeatureConfig& cfg) {
  double total = 0.0;
  int frames = 0;
  for_each_frame(segment, cfg, [&](std::span<const double> f) {
    double power = 0.0;
    for (double v : f) power += v * v;
    power /= static_cast<double>(f.size());
    total += 10.0 * std::log10(std::max(power, cfg.log_floor));
    ++frames;
  });
  return total / frames;
}

bool is_speech(const AudioSegment& segment, const FeatureConfig& cfg) {
  return mean_frame_energy_db(segment, cfg) > cfg.vad_energy_threshold_db;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd PcaProjection::project(const Eigen::VectorXd& x) const {
  return components * (x - mean);
}

Eigen::VectorXd PcaProjection::reconstruct(const Eigen::VectorXd& z) const {
  return mean + components.transpose() * z;
}

double PcaProjection::explained_fraction() const {
  return total_variance > 0.0 ? explained.sum() / total_variance : 1.0;
}

PcaProjection fit_pca(std::span<const Eigen::VectorXd> history, int k) {
  if (k < 1) fail(ErrorCode::kState, "fit_pca: k must be >= 1");
  if (static_cast<int>(history.size()) < k)
    fail(ErrorCode::kState, "fit_pca: need at least k observations");
  const Eigen::Index d = history.front().size();
  if (d < k) fail(ErrorCode::kState, "fit_pca: k exceeds dimension");

  PcaProjection out;
  out.mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : history) out.mean += x;
  out.mean /= static_cast<double>(history.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : history) {
    const Eigen::VectorXd c = x - out.mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(history.size());

  // Eigenvalues come back ascending.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  out.total_variance = cov.trace();
  out.components.resize(k, d);
  out.explained.resize(k);
  for (int r = 0; r < k; ++r) {
    const Eigen::Index col = d - 1 - r;
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.components.row(r) = v.transpose();
    out.explained(r) = std::max(0.0, solver.eigenvalues()(col));
  }
  return out;
}

// ---------------------------------------------------------------------------

Cmvn::Cmvn(int dim) : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

Eigen::VectorXd Cmvn::update_and_standardize(const Eigen::VectorXd& x) {
  if (mean_.size() != x.size()) fail(ErrorCode::kInput, "cmvn dimension mismatch");
  ++count_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);

  const double floor = count_ < kWarmupSegments ? 1.0 : 1e-8;
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double var = std::max(m2_(i) / static_cast<double>(count_), floor);
    out(i) = (x(i) - mean_(i)) / std::sqrt(var);
  }
  return out;
}

void Cmvn::restore(std::int64_t count, Eigen::VectorXd mean, Eigen::VectorXd m2) {
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

// ---------------------------------------------------------------------------

FeaturePipeline::FeaturePipeline(const FeatureConfig& cfg)
    : cfg_(cfg), mfcc_(cfg), cmvn_(2 * cfg.n_ceps) {}

FeatureVector FeaturePipeline::extract(const AudioSegment& segment) {
  return transform(segment.segment_id, segment_statistics(segment, mfcc_));
}

FeatureVector FeaturePipeline::transform(std::int64_t segment_id, const Eigen::VectorXd& raw) {
  if (raw.size() != 2 * cfg_.n_ceps) fail(ErrorCode::kInput, "raw feature dimension mismatch");
  Eigen::VectorXd x = cfg_.cmvn_enabled ? cmvn_.update_and_standardize(raw) : raw;
  if (cfg_.pca_dim) {
    const int k = *cfg_.pca_dim;
    if (!pca_) {
      pca_history_.push_back(x);
      if (static_cast<int>(pca_history_.size()) >= cfg_.pca_warmup) {
        pca_ = fit_pca(pca_history_, k);
        pca_history_.clear();
      }
    }
    // Before the projection exists the leading coordinates stand in for it.
    x = pca_ ? pca_->project(x) : Eigen::VectorXd(x.head(k));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x(i))) fail(ErrorCode::kInput, "non-finite feature value");
  return FeatureVector{segment_id, std::move(x)};
}

nlohmann::json FeaturePipeline::save() const {
  nlohmann::json j;
  j["cmvn"] = {{"count", cmvn_.count()},
               {"mean", vector_to_json(cmvn_.mean())},
               {"m2", vector_to_json(cmvn_.m2())}};
  if (pca_) {
    j["pca"] = {{"components", matrix_to_json(pca_->components)},
                {"mean", vector_to_json(pca_->mean)},
                {"explained", vector_to_json(pca_->explained)},
                {"total_variance", pca_->total_variance}};
  } else {
    j["pca"] = nullptr;
  }
  auto hist = nlohmann::json::array();
  for (const auto& h : pca_history_) hist.push_back(vector_to_json(h));
  j["pca_history"] = hist;
  return j;
}

void FeaturePipeline::load(const nlohmann::json& j) {
  const auto& c = j.at("cmvn");
  cmvn_.restore(c.at("count").get<std::int64_t>(), vector_from_json(c.at("mean")),
                vector_from_json(c.at("m2")));
  if (j.at("pca").is_null()) {
    pca_.reset();
  } else {
    const auto& p = j["pca"];
    PcaProjection proj;
    proj.components = matrix_from_json(p.at("components"));
    proj.mean = vector_from_json(p.at("mean"));
    proj.explained = vector_from_json(p.at("explained"));
    proj.total_variance = p.at("total_variance").get<double>();
    pca_ = std::move(proj);
  }
  pca_history_.clear();
  for (const auto& h : j.at("pca_history")) pca_history_.push_back(vector_from_json(h));
}

std::string feature_csv_row(const FeatureVector& fv, double t0, double t1) {
  char buf[64];
  std::string row = std::to_string(fv.segment_id);
  std::snprintf(buf, sizeof buf, ",%.9g,%.9g", t0, t1);
  row += buf;
  for (Eigen::Index i = 0; i < fv.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.9g", fv.values(i));
    row += buf;
  }
  return row;
}

}  // namespace diarl
