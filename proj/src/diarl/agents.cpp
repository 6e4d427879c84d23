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

#include "diarl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diarl/error.hpp"
#include "diarl/json_util.hpp"

namespace diarl {

namespace {

Decision argmax_decision(std::int64_t segment_id, std::vector<double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  Decision d;
  d.segment_id = segment_id;
  d.chosen = ActionId{best};
  d.confidence = confidence_of(scores);
  d.scores = std::move(scores);
  return d;
}

double clamp_reward(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

// ---------------------------------------------------------------------------

ActionId SpeakerRegistry::confirm(const std::string& name) {
  if (name.empty()) fail(ErrorCode::kInput, "speaker name must be nonempty");
  if (find(name)) fail(ErrorCode::kDuplicate, "speaker already registered: " + name);
  names_.push_back(name);
  return ActionId{names_.size() - 1};
}

std::optional<ActionId> SpeakerRegistry::find(const std::string& name) const {
  for (std::size_t i = 1; i < names_.size(); ++i)
    if (names_[i] == name) return ActionId{i};
  return std::nullopt;
}

const std::string& SpeakerRegistry::name(ActionId id) const {
  if (!contains(id)) fail(ErrorCode::kState, "unknown action " + std::to_string(id.value));
  return names_[id.value];
}

nlohmann::json SpeakerRegistry::to_json() const {
  auto entries = nlohmann::json::array();
  for (std::size_t i = 1; i < names_.size(); ++i)
    entries.push_back({{"id", i}, {"name", names_[i]}});
  return entries;
}

SpeakerRegistry SpeakerRegistry::from_json(const nlohmann::json& j) {
  SpeakerRegistry reg;
  for (const auto& e : j) {
    const auto id = reg.confirm(e.at("name").get<std::string>());
    if (id.value != e.at("id").get<std::size_t>()) fail(ErrorCode::kState, "registry ids not contiguous");
  }
  return reg;
}

// ---------------------------------------------------------------------------

double confidence_of(std::span<const double> scores) {
  if (scores.empty()) return 0.0;
  double top = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (s > top) {
      second = top;
      top = s;
    } else if (s > second) {
      second = s;
    }
  }
  const double margin = scores.size() == 1 ? top : top - second;
  return 1.0 - std::exp(-std::max(0.0, margin));
}

double discounted_return(std::span<const double> rewards, double gamma) {
  // Horner form, last reward first.
  double acc = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) acc = *it + gamma * acc;
  return acc;
}

// ---------------------------------------------------------------------------

LinearArmState LinearArmState::fresh(int dim, double ridge) {
  return {ridge * Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim), 0};
}

LinUcb::LinUcb(int dim, double alpha, std::size_t arms) : dim_(dim), alpha_(alpha) {
  if (dim < 1) fail(ErrorCode::kConfig, "linucb: dimension must be >= 1");
  if (!(alpha > 0.0)) fail(ErrorCode::kConfig, "linucb: alpha must be > 0");
  arms_.assign(arms, LinearArmState::fresh(dim));
}

Decision LinUcb::select(const FeatureVector& x) const {
  if (x.values.size() != dim_) fail(ErrorCode::kInput, "context dimension mismatch");
  std::vector<double> scores;
  scores.reserve(arms_.size());
  for (const auto& arm : arms_) {
    const Eigen::LLT<Eigen::MatrixXd> llt(arm.a);
    if (llt.info() != Eigen::Success) fail(ErrorCode::kState, "arm Gram matrix is not positive definite");
    const Eigen::VectorXd theta = llt.solve(arm.b);
    const double width = llt.matrixL().solve(x.values).norm();
    scores.push_back(theta.dot(x.values) + alpha_ * width);
  }
  return argmax_decision(x.segment_id, std::move(scores));
}

void LinUcb::update(ActionId arm, const Eigen::VectorXd& x, double r, double weight) {
  if (arm.value >= arms_.size()) fail(ErrorCode::kState, "update on unknown arm");
  if (x.size() != dim_) fail(ErrorCode::kInput, "context dimension mismatch");
  auto& s = arms_[arm.value];
  s.a.noalias() += weight * x * x.transpose();
  s.b += (weight * clamp_reward(r)) * x;
  ++s.n_updates;
}

ActionId LinUcb::add_arm() {
  arms_.push_back(LinearArmState::fresh(dim_));
  return ActionId{arms_.size() - 1};
}

const LinearArmState& LinUcb::arm(ActionId id) const {
  if (id.value >= arms_.size()) fail(ErrorCode::kState, "unknown arm");
  return arms_[id.value];
}

nlohmann::json LinUcb::save() const {
  auto arms = nlohmann::json::array();
  for (const auto& a : arms_)
    arms.push_back({{"A", matrix_to_json(a.a)}, {"b", vector_to_json(a.b)}, {"n_updates", a.n_updates}});
  return {{"dim", dim_}, {"alpha", alpha_}, {"arms", arms}};
}

void LinUcb::load(const nlohmann::json& j) {
  dim_ = j.at("dim").get<int>();
  alpha_ = j.at("alpha").get<double>();
  arms_.clear();
  for (const auto& a : j.at("arms"))
    arms_.push_back({matrix_from_json(a.at("A")), vector_from_json(a.at("b")),
                     a.at("n_updates").get<std::int64_t>()});
}

// ---------------------------------------------------------------------------

void SelfSupervisionState::ensure_arms(std::size_t n) {
  if (centroids.size() < n) {
    centroids.resize(n);
    confirmed.resize(n, 0);
  }
}

void SelfSupervisionState::fold(ActionId arm, const Eigen::VectorXd& x) {
  if (arm.is_new()) return;
  ensure_arms(arm.value + 1);
  auto& c = centroids[arm.value];
  auto& n = confirmed[arm.value];
  ++n;
  if (!c)
    c = x;
  else
    *c += (x - *c) / static_cast<double>(n);
}

bool SelfSupervisionState::empty() const {
  return std::none_of(centroids.begin(), centroids.end(), [](const auto& c) { return c.has_value(); });
}

std::optional<std::pair<ActionId, double>> SelfSupervisionState::nearest(const Eigen::VectorXd& x) const {
  std::optional<std::pair<ActionId, double>> best;
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    if (!centroids[i]) continue;
    const double dist = (x - *centroids[i]).norm();
    if (!best || dist < best->second) best = {ActionId{i}, dist};
  }
  return best;
}

BerlinUcb::BerlinUcb(int dim, double alpha, double pseudo_weight, double distance_threshold)
    : backbone_(dim, alpha) {
  if (pseudo_weight < 0.0) fail(ErrorCode::kConfig, "w_p must be >= 0");
  if (distance_threshold < 0.0) fail(ErrorCode::kConfig, "tau_p must be >= 0");
  ss_.pseudo_weight = pseudo_weight;
  ss_.distance_threshold = distance_threshold;
  ss_.ensure_arms(1);
}

void BerlinUcb::reward(ActionId arm, const Eigen::VectorXd& x, double r) {
  backbone_.update(arm, x, r);
  if (r > 0.0) ss_.fold(arm, x);
}

void BerlinUcb::unrewarded(const Decision& decision, const Eigen::VectorXd& x) {
  const double w = ss_.pseudo_weight;
  if (w == 0.0) return;
  const auto nearest = ss_.nearest(x);
  if (!nearest) return;
  const auto [label, dist] = *nearest;
  if (label == decision.chosen) {
    if (dist <= ss_.distance_threshold) backbone_.update(decision.chosen, x, 1.0, w);
  } else {
    backbone_.update(decision.chosen, x, 0.0, w);
  }
}

ActionId BerlinUcb::add_arm() {
  const auto id = backbone_.add_arm();
  ss_.ensure_arms(id.value + 1);
  return id;
}

nlohmann::json BerlinUcb::save() const {
  auto cents = nlohmann::json::array();
  for (std::size_t i = 0; i < ss_.centroids.size(); ++i) {
    cents.push_back({{"centroid", ss_.centroids[i] ? vector_to_json(*ss_.centroids[i]) : nlohmann::json(nullptr)},
                     {"confirmed", ss_.confirmed[i]}});
  }
  return {{"linucb", backbone_.save()},
          {"w_p", ss_.pseudo_weight},
          {"tau_p", ss_.distance_threshold},
          {"self_supervision", cents}};
}

void BerlinUcb::load(const nlohmann::json& j) {
  backbone_.load(j.at("linucb"));
  ss_ = SelfSupervisionState{};
  ss_.pseudo_weight = j.at("w_p").get<double>();
  ss_.distance_threshold = j.at("tau_p").get<double>();
  for (const auto& c : j.at("self_supervision")) {
    ss_.centroids.push_back(c.at("centroid").is_null()
                                ? std::nullopt
                                : std::optional<Eigen::VectorXd>(vector_from_json(c["centroid"])));
    ss_.confirmed.push_back(c.at("confirmed").get<std::int64_t>());
  }
}

// ---------------------------------------------------------------------------

Codebook::Codebook(double distance_threshold, std::size_t max_centroids)
    : threshold_(distance_threshold), max_(max_centroids) {
  if (max_centroids == 0) fail(ErrorCode::kConfig, "codebook capacity must be >= 1");
}

std::size_t Codebook::quantize(const Eigen::VectorXd& x) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids_.size(); ++i) {
    const double dist = (x - centroids_[i]).norm();
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  if (centroids_.empty() || (best_dist > threshold_ && centroids_.size() < max_)) {
    centroids_.push_back(x);
    counts_.push_back(1);
    return centroids_.size() - 1;
  }
  ++counts_[best];
  centroids_[best] += (x - centroids_[best]) / static_cast<double>(counts_[best]);
  return best;
}

nlohmann::json Codebook::save() const {
  auto cents = nlohmann::json::array();
  for (const auto& c : centroids_) cents.push_back(vector_to_json(c));
  return {{"tau_s", threshold_}, {"k_max", max_}, {"centroids", cents}, {"counts", counts_}};
}

void Codebook::load(const nlohmann::json& j) {
  threshold_ = j.at("tau_s").get<double>();
  max_ = j.at("k_max").get<std::size_t>();
  centroids_.clear();
  for (const auto& c : j.at("centroids")) centroids_.push_back(vector_from_json(c));
  counts_ = j.at("counts").get<std::vector<std::int64_t>>();
}

void QParams::validate() const {
  if (!(discount >= 0.0 && discount < 1.0)) fail(ErrorCode::kConfig, "gamma must be in [0, 1)");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail(ErrorCode::kConfig, "eta must be in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(ErrorCode::kConfig, "epsilon must be in [0, 1]");
}

QTable::QTable(QParams params) : params_(params) { params_.validate(); }

double QTable::get(std::size_t state, ActionId a) const {
  const auto it = q_.find({state, a.value});
  return it == q_.end() ? 0.0 : it->second;
}

std::vector<double> QTable::row(std::size_t state, std::size_t arms) const {
  std::vector<double> out(arms);
  for (std::size_t a = 0; a < arms; ++a) out[a] = get(state, ActionId{a});
  return out;
}

double QTable::max_value(std::size_t state, std::size_t arms) const {
  const auto r = row(state, arms);
  return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
}

void QTable::update(std::size_t state, ActionId a, double r, std::optional<std::size_t> next_state,
                    std::size_t arms) {
  const double bootstrap = next_state ? max_value(*next_state, arms) : 0.0;
  const double current = get(state, a);
  q_[{state, a.value}] =
      current + params_.learning_rate * (clamp_reward(r) + params_.discount * bootstrap - current);
}

nlohmann::json QTable::save() const {
  auto entries = nlohmann::json::array();
  for (const auto& [key, v] : q_) entries.push_back({key.first, key.second, v});
  return {{"eta", params_.learning_rate},
          {"gamma", params_.discount},
          {"epsilon", params_.epsilon},
          {"q", entries}};
}

void QTable::load(const nlohmann::json& j) {
  params_.learning_rate = j.at("eta").get<double>();
  params_.discount = j.at("gamma").get<double>();
  params_.epsilon = j.at("epsilon").get<double>();
  params_.validate();
  q_.clear();
  for (const auto& e : j.at("q"))
    q_[{e[0].get<std::size_t>(), e[1].get<std::size_t>()}] = e[2].get<double>();
}

Decision select_q(std::int64_t segment_id, std::size_t state, std::size_t arms, const QTable& table,
                  Rng& rng) {
  auto d = argmax_decision(segment_id, table.row(state, arms));
  if (rng.uniform() < table.params().epsilon) d.chosen = ActionId{rng.below(arms)};
  return d;
}

}  // namespace diarl
