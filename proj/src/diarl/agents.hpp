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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "diarl/features.hpp"
#include "diarl/rng.hpp"

namespace diarl {

// Index into the action set. Index 0 is the NEW-speaker arm.
struct ActionId {
  std::size_t value = 0;

  auto operator<=>(const ActionId&) const = default;
  bool is_new() const { return value == 0; }
};

inline constexpr ActionId kNewArm{0};

// Extendable action set. Starts with the NEW arm alone; every confirmed
// speaker gets the next index, bound once and never recycled.
class SpeakerRegistry {
 public:
  // Binds `name` to a fresh index. Throws kDuplicate for a known name and
  // kInput for an empty one.
  ActionId confirm(const std::string& name);

  std::optional<ActionId> find(const std::string& name) const;
  const std::string& name(ActionId id) const;
  bool contains(ActionId id) const { return id.value < names_.size(); }

  // Available actions, NEW included.
  std::size_t action_count() const { return names_.size(); }
  std::size_t speaker_count() const { return names_.size() - 1; }
  std::size_t next_index() const { return names_.size(); }

  nlohmann::json to_json() const;
  static SpeakerRegistry from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> names_{std::string()};
};

struct Decision {
  std::int64_t segment_id = 0;
  ActionId chosen;
  double confidence = 0.0;
  std::vector<double> scores;
};

// 1 - exp(-margin) between the top two scores (the top score itself when
// there is a single arm); margin is clamped at zero.
double confidence_of(std::span<const double> scores);

// Sum of gamma^t * r_t.
double discounted_return(std::span<const double> rewards, double gamma);

// ---------------------------------------------------------------------------
// Disjoint linear UCB

struct LinearArmState {
  Eigen::MatrixXd a;  // lambda * I + sum of weighted x x^T
  Eigen::VectorXd b;  // sum of weighted r x
  std::int64_t n_updates = 0;

  static LinearArmState fresh(int dim, double ridge = 1.0);
};

class LinUcb {
 public:
  LinUcb(int dim, double alpha, std::size_t arms = 1);

  // Scores every arm with theta^T x + alpha * sqrt(x^T A^-1 x); ties go to
  // the lowest index.
  Decision select(const FeatureVector& x) const;

  // A += weight * x x^T, b += weight * r * x. r is clamped to [-1, 1].
  void update(ActionId arm, const Eigen::VectorXd& x, double r, double weight = 1.0);

  ActionId add_arm();
  std::size_t arm_count() const { return arms_.size(); }
  const LinearArmState& arm(ActionId id) const;
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }

  nlohmann::json save() const;
  void load(const nlohmann::json& j);

 private:
  int dim_;
  double alpha_;
  std::vector<LinearArmState> arms_;
};

// ---------------------------------------------------------------------------
// Semi-supervised linear UCB

// Running means of contexts that received a confirmed positive reward,
// per speaker arm. The NEW arm never gets a centroid.
struct SelfSupervisionState {
  std::vector<std::optional<Eigen::VectorXd>> centroids;
  std::vector<std::int64_t> confirmed;
  double pseudo_weight = 0.3;
  double distance_threshold = 5.0;

  void ensure_arms(std::size_t n);
  void fold(ActionId arm, const Eigen::VectorXd& x);
  bool empty() const;
  // Nearest confirmed centroid and its Euclidean distance.
  std::optional<std::pair<ActionId, double>> nearest(const Eigen::VectorXd& x) const;
};

class BerlinUcb {
 public:
  BerlinUcb(int dim, double alpha, double pseudo_weight, double distance_threshold);

  // Same scores as the linear backbone.
  Decision select(const FeatureVector& x) const { return backbone_.select(x); }

  // Rewarded round: linear update, and a positive reward folds x into the
  // arm's confirmed centroid.
  void reward(ActionId arm, const Eigen::VectorXd& x, double r);

  // Unrewarded round: pseudo-update from the nearest confirmed centroid.
  void unrewarded(const Decision& decision, const Eigen::VectorXd& x);

  ActionId add_arm();
  const LinUcb& backbone() const { return backbone_; }
  const SelfSupervisionState& self_supervision() const { return ss_; }

  nlohmann::json save() const;
  void load(const nlohmann::json& j);

 private:
  LinUcb backbone_;
  SelfSupervisionState ss_;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning over a quantized context

// Online k-means codebook used as the discrete state space.
class Codebook {
 public:
  Codebook(double distance_threshold, std::size_t max_centroids = 64);

  // Nearest centroid when within threshold (or when full), moved toward x
  // by 1/count; otherwise x becomes a new centroid.
  std::size_t quantize(const Eigen::VectorXd& x);

  std::size_t size() const { return centroids_.size(); }
  const std::vector<Eigen::VectorXd>& centroids() const { return centroids_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  nlohmann::json save() const;
  void load(const nlohmann::json& j);

 private:
  double threshold_;
  std::size_t max_;
  std::vector<Eigen::VectorXd> centroids_;
  std::vector<std::int64_t> counts_;
};

struct QParams {
  double learning_rate = 0.1;
  double discount = 0.9;
  double epsilon = 0.1;

  void validate() const;
};

// Sparse Q-table; absent entries read as zero.
class QTable {
 public:
  explicit QTable(QParams params);

  double get(std::size_t state, ActionId a) const;
  std::vector<double> row(std::size_t state, std::size_t arms) const;
  double max_value(std::size_t state, std::size_t arms) const;

  // q(s,a) += eta * (r + gamma * max_a' q(s',a') - q(s,a)); r clamped to
  // [-1, 1]. A missing s' bootstraps from zero.
  void update(std::size_t state, ActionId a, double r, std::optional<std::size_t> next_state,
              std::size_t arms);
  void set(std::size_t state, ActionId a, double value) { q_[{state, a.value}] = value; }

  const QParams& params() const { return params_; }
  std::size_t entries() const { return q_.size(); }

  nlohmann::json save() const;
  void load(const nlohmann::json& j);

 private:
  QParams params_;
  std::map<std::pair<std::size_t, std::size_t>, double> q_;
};

// Epsilon-greedy over the Q-row. One uniform draw decides exploration; an
// exploring step then draws the arm uniformly.
Decision select_q(std::int64_t segment_id, std::size_t state, std::size_t arms, const QTable& table,
                  Rng& rng);

}  // namespace diarl
