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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "diarl/error.hpp"
#include "diarl/features.hpp"
#include "diarl/rng.hpp"
#include "oracle/jacobi.hpp"
#include "oracle/mfcc_reference.hpp"

using namespace diarl;

namespace {

std::vector<double> random_frame(Rng& rng) {
  std::vector<double> f(400);
  for (auto& v : f) v = 2.0 * rng.uniform() - 1.0;
  return f;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

AudioSegment segment_of(std::vector<std::int16_t> s) {
  AudioSegment seg;
  seg.t1 = static_cast<double>(s.size()) / kSampleRate;
  seg.samples = std::move(s);
  return seg;
}

template <typename F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

}  // namespace

TEST(FeatureConfig, DefaultsAndValidation) {
  FeatureConfig c;
  EXPECT_EQ(c.frame_samples(), 400);
  EXPECT_EQ(c.hop_samples(), 160);
  EXPECT_EQ(c.segment_samples(), 16000);
  EXPECT_EQ(c.segment_hop_samples(), 8000);
  EXPECT_EQ(c.output_dim(), 26);
  EXPECT_NO_THROW(c.validate());

  auto bad = c;
  bad.n_ceps = 27;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kConfig);
  bad = c;
  bad.fft_size = 256;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kConfig);
  bad = c;
  bad.mel_fmax_hz = 8001;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kConfig);
}

TEST(Mfcc, SilentFrameIsFloorConstant) {
  const std::vector<double> zero(400, 0.0);
  const auto c = mfcc_frame(zero, FeatureConfig{});
  ASSERT_EQ(c.size(), 13);
  EXPECT_NEAR(c(0), std::sqrt(26.0) * std::log(1e-10), 1e-9);
  EXPECT_NEAR(c(0), -117.41, 0.01);
  for (int i = 1; i < 13; ++i) EXPECT_NEAR(c(i), 0.0, 1e-9) << i;
}

TEST(Mfcc, MatchesStraightLineOracle) {
  Rng rng(2024);
  const Mfcc m(FeatureConfig{});
  for (int t = 0; t < 25; ++t) {
    const auto f = random_frame(rng);
    const auto got = m.frame(f);
    const auto want = oracle::ref_mfcc(f);
    for (int i = 0; i < 13; ++i) EXPECT_LT(rel_err(got(i), want[static_cast<std::size_t>(i)]), 1e-6);
  }
}

TEST(Mfcc, RejectsBadFrames) {
  EXPECT_EQ(code_of([] { mfcc_frame(std::vector<double>(399, 0.0), FeatureConfig{}); }), ErrorCode::kConfig);
  std::vector<double> f(400, 0.0);
  f[17] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { mfcc_frame(f, FeatureConfig{}); }), ErrorCode::kInput);
  f[17] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { mfcc_frame(f, FeatureConfig{}); }), ErrorCode::kInput);
}

TEST(Mfcc, DctPreservesNorm) {
  const Mfcc m(FeatureConfig{});
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto lm = m.log_mel(random_frame(rng));
    EXPECT_NEAR((m.dct() * lm).norm(), lm.norm(), 1e-9);
  }
  EXPECT_TRUE((m.dct() * m.dct().transpose()).isIdentity(1e-12));
}

TEST(Mfcc, FilterbankPartition) {
  const Mfcc m(FeatureConfig{});
  const auto& fb = m.filterbank();
  EXPECT_GE(fb.minCoeff(), 0.0);
  for (Eigen::Index k = 0; k < fb.cols(); ++k) {
    const double hz = static_cast<double>(k) * kSampleRate / 512;
    if (hz <= 0.0 || hz >= 8000.0) continue;
    const double total = fb.col(k).sum();
    EXPECT_GT(total, 0.0) << k;
    EXPECT_LE(total, 1.0 + 1e-12) << k;
  }
}

TEST(SegmentFeatures, IdenticalFramesHaveZeroSpread) {
  // Period 80 samples divides the 160-sample hop: every frame is identical.
  std::vector<std::int16_t> s(16000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::int16_t>(i % 80 < 40 ? 9000 : -9000);
  const auto stats = segment_statistics(segment_of(s), Mfcc(FeatureConfig{}));
  ASSERT_EQ(stats.size(), 26);
  for (int i = 13; i < 26; ++i) EXPECT_EQ(stats(i), 0.0);
}

TEST(SegmentFeatures, FirstCmvnVectorIsZero) {
  Rng rng(8);
  std::vector<std::int16_t> s(16000);
  for (auto& v : s) v = static_cast<std::int16_t>(rng.normal() * 3000);
  FeaturePipeline p{FeatureConfig{}};
  const auto fv = p.extract(segment_of(s));
  ASSERT_EQ(fv.values.size(), 26);
  EXPECT_TRUE(fv.values.isZero(0.0));
}

TEST(SegmentFeatures, WhiteNoiseMatchesOracle) {
  Rng rng(77);
  std::vector<std::int16_t> s(16000);
  for (auto& v : s) v = static_cast<std::int16_t>(std::lround((2 * rng.uniform() - 1) * 8000));
  const auto got = segment_statistics(segment_of(s), Mfcc(FeatureConfig{}));
  const auto want = oracle::ref_segment_stats(std::vector<short>(s.begin(), s.end()));
  for (int i = 0; i < 26; ++i) EXPECT_LT(rel_err(got(i), want[static_cast<std::size_t>(i)]), 1e-6) << i;
}

TEST(SegmentFeatures, ShortSegmentRejected) {
  EXPECT_EQ(code_of([] { segment_statistics(segment_of(std::vector<std::int16_t>(399, 0)), Mfcc(FeatureConfig{})); }),
            ErrorCode::kInput);
}

TEST(SegmentFeatures, DeterministicGivenState) {
  Rng rng(1);
  std::vector<std::int16_t> s(16000);
  for (auto& v : s) v = static_cast<std::int16_t>(rng.normal() * 2000);
  FeaturePipeline a{FeatureConfig{}}, b{FeatureConfig{}};
  for (int i = 0; i < 3; ++i) {
    const auto x = a.extract(segment_of(s));
    const auto y = b.extract(segment_of(s));
    EXPECT_EQ(x.values, y.values);
  }
}

TEST(Vad, SilenceSquareAndQuietNoise) {
  const FeatureConfig cfg;
  EXPECT_FALSE(is_speech(segment_of(std::vector<std::int16_t>(16000, 0)), cfg));

  std::vector<std::int16_t> square(16000);
  for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 40) % 2 ? 32767 : -32768;
  EXPECT_TRUE(is_speech(segment_of(square), cfg));
  EXPECT_NEAR(mean_frame_energy_db(segment_of(square), cfg), 0.0, 0.01);

  // Uniform noise scaled so that its RMS sits at -60 dBFS.
  Rng rng(60);
  const double amp = std::pow(10.0, -60.0 / 20.0) * std::sqrt(3.0) * 32768.0;
  std::vector<std::int16_t> quiet(16000);
  for (auto& v : quiet) v = static_cast<std::int16_t>(std::lround((2 * rng.uniform() - 1) * amp));
  // Analytic reference from the samples themselves: frame powers in dB.
  double total = 0;
  int frames = 0;
  for (int start = 0; start + 400 <= 16000; start += 160, ++frames) {
    double p = 0;
    for (int i = 0; i < 400; ++i) p += std::pow(quiet[static_cast<std::size_t>(start + i)] / 32768.0, 2);
    total += 10 * std::log10(p / 400);
  }
  EXPECT_NEAR(mean_frame_energy_db(segment_of(quiet), cfg), total / frames, 1e-9);
  EXPECT_NEAR(total / frames, -60.0, 0.5);
  EXPECT_FALSE(is_speech(segment_of(quiet), cfg));
}

TEST(Pca, RankOneLine) {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Eigen::Vector2d(1.0 + 2.0 * i, -3.0 + 0.5 * i));
  const auto p = fit_pca(pts, 1);
  EXPECT_NEAR(p.explained_fraction(), 1.0, 1e-12);
  for (const auto& x : pts) EXPECT_LT((p.reconstruct(p.project(x)) - x).norm(), 1e-9);
}

TEST(Pca, CompleteBasisReconstructs) {
  Rng rng(4);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = rng.normal() * (j + 1);
    pts.push_back(x);
  }
  const auto p = fit_pca(pts, 5);
  for (const auto& x : pts) EXPECT_LT((p.reconstruct(p.project(x)) - x).norm(), 1e-9);
  EXPECT_TRUE((p.components * p.components.transpose()).isIdentity(1e-9));
}

TEST(Pca, AnisotropicGaussianAgainstJacobi) {
  Rng rng(9);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 2000; ++i) pts.push_back(Eigen::Vector3d(3 * rng.normal(), rng.normal(), 0.1 * rng.normal()));
  const auto p = fit_pca(pts, 2);
  EXPECT_NEAR(p.explained_fraction(), 0.999, 1e-2);
  EXPECT_GT(std::abs(p.components(0, 0)), 0.99);
  EXPECT_TRUE((p.components * p.components.transpose()).isIdentity(1e-9));

  // Brute-force eigendecomposition of the same sample covariance.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& x : pts) mean += x;
  mean /= pts.size();
  std::vector<std::vector<double>> cov(3, std::vector<double>(3, 0.0));
  for (const auto& x : pts)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cov[a][b] += (x(a) - mean(a)) * (x(b) - mean(b)) / pts.size();
  const auto ref = oracle::jacobi_eigen(cov);
  for (int r = 0; r < 2; ++r) {
    EXPECT_NEAR(p.explained(r), ref.values[r], 1e-6 * ref.values[0]);
    double dot = 0;
    for (int j = 0; j < 3; ++j) dot += p.components(r, j) * ref.vectors[r][j];
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-6);
  }
}

TEST(Pca, SignConventionAndErrors) {
  Rng rng(12);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(Eigen::Vector3d(rng.normal(), 2 * rng.normal(), -3 * rng.normal()));
  const auto p = fit_pca(pts, 3);
  for (Eigen::Index r = 0; r < 3; ++r) {
    Eigen::Index at;
    p.components.row(r).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(p.components(r, at), 0.0);
  }
  EXPECT_EQ(code_of([&] { fit_pca(std::span(pts).first(2), 3); }), ErrorCode::kState);
  EXPECT_EQ(code_of([&] { fit_pca(pts, 4); }), ErrorCode::kState);
  EXPECT_EQ(code_of([&] { fit_pca(pts, 0); }), ErrorCode::kState);
}

TEST(Cmvn, WarmupFloorAndConvergence) {
  Cmvn c(2);
  const auto z = c.update_and_standardize(Eigen::Vector2d(5.0, -2.0));
  EXPECT_TRUE(z.isZero(0.0));
  // Second observation: variance 0.25 is floored at 1 during warmup.
  const auto z2 = c.update_and_standardize(Eigen::Vector2d(6.0, -2.0));
  EXPECT_DOUBLE_EQ(z2(0), 0.5);

  Cmvn d(4);
  Rng rng(200);
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector4d x;
    for (int j = 0; j < 4; ++j) x(j) = 10 + 3 * rng.normal();
    acc += d.update_and_standardize(x);
  }
  EXPECT_LT((acc / 200).cwiseAbs().maxCoeff(), 0.5);
}

TEST(FeaturePipeline, PcaProjectionAfterWarmupAndSaveLoad) {
  FeatureConfig cfg;
  cfg.pca_dim = 4;
  cfg.pca_warmup = 5;
  FeaturePipeline p(cfg);
  Rng rng(31);
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd raw(26);
    for (int j = 0; j < 26; ++j) raw(j) = rng.normal();
    const auto fv = p.transform(i, raw);
    ASSERT_EQ(fv.values.size(), 4);
    for (int j = 0; j < 4; ++j) ASSERT_TRUE(std::isfinite(fv.values(j)));
  }
  FeaturePipeline q(cfg);
  q.load(nlohmann::json::parse(p.save().dump()));
  Eigen::VectorXd raw = Eigen::VectorXd::Constant(26, 0.3);
  EXPECT_EQ(p.transform(9, raw).values, q.transform(9, raw).values);
}

TEST(FeatureDump, NineSignificantDigits) {
  FeatureVector fv{3, Eigen::Vector2d(1.0 / 3.0, -12345.678901234)};
  EXPECT_EQ(feature_csv_row(fv, 1.0, 2.0), "3,1,2,0.333333333,-12345.6789");
}
