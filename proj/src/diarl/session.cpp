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

#include "diarl/session.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <set>
#include <cstdio>

#include "diarl/json_util.hpp"

namespace diarl {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kQLearning: return "qlearning";
    case PolicyKind::kLinUcb: return "linucb";
    case PolicyKind::kBerlinUcb: return "berlinucb";
  }
  return "linucb";
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "qlearning") return PolicyKind::kQLearning;
  if (name == "linucb") return PolicyKind::kLinUcb;
  if (name == "berlinucb") return PolicyKind::kBerlinUcb;
  fail(ErrorCode::kConfig, "unknown policy: " + std::string(name));
}

void SessionConfig::validate() const {
  features.validate();
  rewards.validate();
  QParams{eta, gamma, epsilon}.validate();
  if (!(alpha > 0.0)) fail(ErrorCode::kConfig, "alpha must be > 0");
  if (w_p < 0.0) fail(ErrorCode::kConfig, "w_p must be >= 0");
  if (tau_p < 0.0 || tau_s < 0.0) fail(ErrorCode::kConfig, "distance thresholds must be >= 0");
  if (codebook_size < 1) fail(ErrorCode::kConfig, "codebook_size must be >= 1");
  if (!(feedback_window_s > 0.0)) fail(ErrorCode::kConfig, "feedback_window_s must be > 0");
  if (!(time_horizon_s > 0.0)) fail(ErrorCode::kConfig, "time_horizon_s must be > 0");
  if (context_dim && *context_dim < 1) fail(ErrorCode::kConfig, "context_dim must be >= 1");
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = nlohmann::json{{"policy", std::string(policy_name(c.policy))},
                     {"seed", c.seed},
                     {"features", c.features},
                     {"rewards", c.rewards},
                     {"alpha", c.alpha},
                     {"epsilon", c.epsilon},
                     {"gamma", c.gamma},
                     {"eta", c.eta},
                     {"w_p", c.w_p},
                     {"tau_p", c.tau_p},
                     {"tau_s", c.tau_s},
                     {"codebook_size", c.codebook_size},
                     {"feedback_window_s", c.feedback_window_s},
                     {"time_horizon_s", c.time_horizon_s},
                     {"context_dim", c.context_dim ? nlohmann::json(*c.context_dim) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
  if (!j.is_object()) fail(ErrorCode::kConfig, "session config must be a JSON object");
  static const std::set<std::string> kKeys = {"policy", "seed", "features", "rewards", "alpha",
                                              "epsilon", "gamma", "eta", "w_p", "tau_p",
                                              "tau_s", "codebook_size", "feedback_window_s",
                                              "time_horizon_s", "context_dim"};
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) fail(ErrorCode::kConfig, "unknown config field: " + key);
  if (j.contains("policy")) c.policy = parse_policy(j["policy"].get<std::string>());
  c.seed = j.value("seed", c.seed);
  if (j.contains("features")) from_json(j["features"], c.features);
  if (j.contains("rewards")) from_json(j["rewards"], c.rewards);
  c.alpha = j.value("alpha", c.alpha);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.gamma = j.value("gamma", c.gamma);
  c.eta = j.value("eta", c.eta);
  c.w_p = j.value("w_p", c.w_p);
  c.tau_p = j.value("tau_p", c.tau_p);
  c.tau_s = j.value("tau_s", c.tau_s);
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.feedback_window_s = j.value("feedback_window_s", c.feedback_window_s);
  c.time_horizon_s = j.value("time_horizon_s", c.time_horizon_s);
  if (j.contains("context_dim")) {
    if (j["context_dim"].is_null())
      c.context_dim.reset();
    else
      c.context_dim = j["context_dim"].get<int>();
  }
}

nlohmann::ordered_json TimelineEntry::transcript_json() const {
  nlohmann::ordered_json j;
  j["segment_id"] = segment_id;
  j["t0"] = t0;
  j["t1"] = t1;
  j["label"] = label;
  j["confidence"] = decision ? decision->confidence : 0.0;
  return j;
}

void RequestQueue::push(QueuedRequest r) {
  std::lock_guard lock(mu_);
  items_.push_back(std::move(r));
}

std::deque<QueuedRequest> RequestQueue::take_all() {
  std::lock_guard lock(mu_);
  std::deque<QueuedRequest> out;
  out.swap(items_);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

nlohmann::json decision_to_json(const Decision& d) {
  return {{"segment_id", d.segment_id}, {"chosen", d.chosen.value}, {"confidence", d.confidence},
          {"scores", d.scores}};
}

Decision decision_from_json(const nlohmann::json& j) {
  Decision d;
  d.segment_id = j.at("segment_id").get<std::int64_t>();
  d.chosen = ActionId{j.at("chosen").get<std::size_t>()};
  d.confidence = j.at("confidence").get<double>();
  d.scores = j.at("scores").get<std::vector<double>>();
  return d;
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

nlohmann::json entry_to_json(const TimelineEntry& e) {
  nlohmann::json j;
  j["segment_id"] = e.segment_id;
  j["t0"] = e.t0;
  j["t1"] = e.t1;
  j["speech"] = e.speech;
  j["decision"] = e.decision ? decision_to_json(*e.decision) : nlohmann::json(nullptr);
  j["context"] = vector_to_json(e.context);
  j["state"] = optional_json(e.state);
  j["next_state"] = optional_json(e.next_state);
  j["emitted_label"] = e.emitted_label;
  j["label"] = e.label;
  j["corrected"] = e.corrected;
  j["matured"] = e.matured;
  auto kinds = nlohmann::json::array();
  for (auto k : e.applied) kinds.push_back(std::string(feedback_kind_name(k)));
  j["applied"] = kinds;
  auto pending = nlohmann::json::array();
  for (const auto& [arm, r] : e.pending_q) pending.push_back({arm.value, r});
  j["pending_q"] = pending;
  j["reward"] = e.reward ? nlohmann::json(e.reward->to_json()) : nlohmann::json(nullptr);
  return j;
}

TimelineEntry entry_from_json(const nlohmann::json& j) {
  TimelineEntry e;
  e.segment_id = j.at("segment_id").get<std::int64_t>();
  e.t0 = j.at("t0").get<double>();
  e.t1 = j.at("t1").get<double>();
  e.speech = j.at("speech").get<bool>();
  if (!j.at("decision").is_null()) e.decision = decision_from_json(j["decision"]);
  e.context = vector_from_json(j.at("context"));
  e.state = optional_from<std::size_t>(j.at("state"));
  e.next_state = optional_from<std::size_t>(j.at("next_state"));
  e.emitted_label = j.at("emitted_label").get<std::string>();
  e.label = j.at("label").get<std::string>();
  e.corrected = j.at("corrected").get<bool>();
  e.matured = j.at("matured").get<bool>();
  for (const auto& k : j.at("applied")) e.applied.push_back(parse_feedback_kind(k.get<std::string>()));
  for (const auto& p : j.at("pending_q"))
    e.pending_q.emplace_back(ActionId{p[0].get<std::size_t>()}, p[1].get<double>());
  if (!j.at("reward").is_null()) e.reward = RewardRecord::from_json(j["reward"]);
  return e;
}

}  // namespace

struct Session::Impl {
  SessionConfig cfg;
  FeaturePipeline pipeline;
  Segmenter segmenter;
  SpeakerRegistry registry;
  Rng rng;
  std::variant<LinUcb, BerlinUcb, std::pair<Codebook, QTable>> policy;
  std::deque<TimelineEntry> timeline;
  std::int64_t next_segment_id = 0;
  double now = 0.0;
  std::optional<std::int64_t> last_speech;
  std::uint64_t hash = kFnvOffset;
  std::shared_ptr<RequestQueue> queue = std::make_shared<RequestQueue>();
  std::vector<SessionEvent> events;
  ActionChooser chooser;
  std::function<void(const TimelineEntry&)> observer;

  static decltype(policy) make_policy(const SessionConfig& c) {
    switch (c.policy) {
      case PolicyKind::kLinUcb: return LinUcb(c.dim(), c.alpha);
      case PolicyKind::kBerlinUcb: return BerlinUcb(c.dim(), c.alpha, c.w_p, c.tau_p);
      case PolicyKind::kQLearning:
        return std::pair<Codebook, QTable>(Codebook(c.tau_s, c.codebook_size),
                                           QTable(QParams{c.eta, c.gamma, c.epsilon}));
    }
    fail(ErrorCode::kConfig, "unknown policy");
  }

  explicit Impl(SessionConfig c)
      : cfg((c.validate(), c)),
        pipeline(cfg.features),
        segmenter(cfg.features),
        rng(cfg.seed),
        policy(make_policy(cfg)) {}

  TimelineEntry* find(std::int64_t id) {
    if (timeline.empty()) return nullptr;
    const std::int64_t base = timeline.front().segment_id;
    if (id < base || id >= base + static_cast<std::int64_t>(timeline.size())) return nullptr;
    return &timeline[static_cast<std::size_t>(id - base)];
  }

  void append(TimelineEntry e) {
    hash = fnv1a(hash, e.transcript_json().dump());
    hash = fnv1a(hash, "\n");
    timeline.push_back(std::move(e));
    ++next_segment_id;
  }

  void check_order(std::int64_t id) {
    if (id != next_segment_id)
      fail(ErrorCode::kProtocol, "segment " + std::to_string(id) + " out of order; expected " +
                                     std::to_string(next_segment_id));
  }

  // Entries before this index are matured or never need to be.
  std::size_t mature_cursor = 0;

  void advance_clock(double t1) {
    now = std::max(now, t1);
    while (mature_cursor < timeline.size()) {
      auto& e = timeline[mature_cursor];
      if (e.speech && !e.matured) {
        if (now - e.t1 <= cfg.feedback_window_s) break;
        mature(e);
      }
      ++mature_cursor;
    }
  }

  std::vector<DecidedSpan> time_window(const TimelineEntry& target) {
    const double hop = cfg.features.segment_hop_s;
    const auto span = static_cast<std::int64_t>(std::lround(cfg.time_horizon_s / hop));
    std::vector<DecidedSpan> out;
    for (std::int64_t id = target.segment_id - span + 1; id <= target.segment_id; ++id) {
      const auto* e = find(id);
      if (e && e->speech) out.push_back({hop, e->corrected});
    }
    return out;
  }

  RewardRecord record_for(TimelineEntry& e, std::optional<double> r_user) {
    const auto window = time_window(e);
    return hybrid_reward(e.segment_id, r_user, time_reward(window, cfg.time_horizon_s),
                         confidence_reward(*e.decision), cfg.rewards);
  }

  void mature(TimelineEntry& e) {
    e.matured = true;
    if (e.reward) return;
    e.reward = record_for(e, std::nullopt);
    events.emplace_back(RewardEvent{*e.reward});
    if (auto* berlin = std::get_if<BerlinUcb>(&policy)) berlin->unrewarded(*e.decision, e.context);
  }

  // Positive or negative credit to `arm` on the context of entry `e`.
  void credit(TimelineEntry& e, ActionId arm, double r) {
    std::visit(
        [&](auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, LinUcb>) {
            p.update(arm, e.context, r);
          } else if constexpr (std::is_same_v<P, BerlinUcb>) {
            p.reward(arm, e.context, r);
          } else {
            if (e.next_state)
              p.second.update(*e.state, arm, r, e.next_state, registry.action_count());
            else
              e.pending_q.emplace_back(arm, r);
          }
        },
        policy);
  }

  ActionId add_speaker(const std::string& name) {
    const auto id = registry.confirm(name);
    std::visit(
        [&](auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (!std::is_same_v<P, std::pair<Codebook, QTable>>) p.add_arm();
        },
        policy);
    events.emplace_back(RegistryEvent{registry.to_json()});
    return id;
  }

  void decide(std::int64_t id, double t0, double t1, Eigen::VectorXd x) {
    TimelineEntry e;
    e.segment_id = id;
    e.t0 = t0;
    e.t1 = t1;
    e.speech = true;

    if (auto* q = std::get_if<std::pair<Codebook, QTable>>(&policy)) {
      const std::size_t s = q->first.quantize(x);
      e.state = s;
      if (last_speech) {
        if (auto* prev = find(*last_speech)) {
          prev->next_state = s;
          for (const auto& [arm, r] : prev->pending_q)
            q->second.update(*prev->state, arm, r, s, registry.action_count());
          prev->pending_q.clear();
        }
      }
    }

    const FeatureVector fv{id, x};
    Decision d;
    if (chooser) {
      d.segment_id = id;
      d.chosen = chooser(registry, rng);
      d.confidence = 0.0;
    } else {
      d = std::visit(
          [&](auto& p) -> Decision {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, std::pair<Codebook, QTable>>)
              return select_q(id, *e.state, registry.action_count(), p.second, rng);
            else
              return p.select(fv);
          },
          policy);
    }
    e.context = std::move(x);
    e.decision = d;
    e.emitted_label = d.chosen.is_new() ? kNewLabel : registry.name(d.chosen);
    e.label = e.emitted_label;
    last_speech = id;
    if (observer) observer(e);
    events.emplace_back(LabelEvent{id, t0, t1, e.label, d.confidence});
    append(std::move(e));
  }

  void non_speech(std::int64_t id, double t0, double t1) {
    TimelineEntry e;
    e.segment_id = id;
    e.t0 = t0;
    e.t1 = t1;
    e.emitted_label = kNonSpeechLabel;
    e.label = e.emitted_label;
    events.emplace_back(LabelEvent{id, t0, t1, e.label, 0.0});
    append(std::move(e));
  }

  RewardRecord apply(FeedbackEvent ev) {
    if (ev.segment_id < 0 || ev.segment_id >= next_segment_id)
      fail(ErrorCode::kUnknownSegment, "no decision for segment " + std::to_string(ev.segment_id));
    TimelineEntry* e = find(ev.segment_id);
    if (!e) fail(ErrorCode::kStale, "segment " + std::to_string(ev.segment_id) + " is outside the feedback window");
    if (!e->speech || !e->decision)
      fail(ErrorCode::kUnknownSegment, "segment " + std::to_string(ev.segment_id) + " has no decision");
    if (e->matured || now - e->t1 > cfg.feedback_window_s)
      fail(ErrorCode::kStale, "segment " + std::to_string(ev.segment_id) + " is outside the feedback window");

    std::optional<ActionId> named;
    switch (ev.kind) {
      case FeedbackKind::kCorrect:
        named = registry.find(ev.label);
        if (!named) fail(ErrorCode::kUnknownLabel, "unknown speaker: " + ev.label);
        // Correcting to the label already chosen is a confirmation.
        if (*named == e->decision->chosen) ev.kind = FeedbackKind::kConfirm;
        break;
      case FeedbackKind::kNewSpeaker:
        if (ev.label.empty()) fail(ErrorCode::kInput, "new_speaker needs a name");
        if (registry.find(ev.label)) fail(ErrorCode::kDuplicate, "speaker already registered: " + ev.label);
        break;
      case FeedbackKind::kRating:
        if (!(ev.rating >= -1.0 && ev.rating <= 1.0)) fail(ErrorCode::kInput, "rating must be in [-1, 1]");
        break;
      case FeedbackKind::kConfirm: break;
    }
    if (std::find(e->applied.begin(), e->applied.end(), ev.kind) != e->applied.end())
      fail(ErrorCode::kDuplicate, "feedback already applied to segment " + std::to_string(ev.segment_id));

    e->applied.push_back(ev.kind);
    if (ev.kind == FeedbackKind::kCorrect || ev.kind == FeedbackKind::kNewSpeaker) {
      e->corrected = true;
      e->label = ev.label;
    }
    const double r_user = user_reward(ev, *e->decision);
    const RewardRecord rec = record_for(*e, r_user);
    e->reward = rec;

    credit(*e, e->decision->chosen, rec.r_total);
    if (ev.kind == FeedbackKind::kCorrect) {
      credit(*e, *named, 1.0);
    } else if (ev.kind == FeedbackKind::kNewSpeaker) {
      const auto fresh = add_speaker(ev.label);
      credit(*e, fresh, 1.0);
    }
    events.emplace_back(RewardEvent{rec});
    return rec;
  }
};

Session::Session(SessionConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

void Session::push_pcm(std::span<const std::int16_t> samples) {
  if (impl_->cfg.context_dim) fail(ErrorCode::kState, "session takes precomputed contexts, not audio");
  impl_->segmenter.push(samples);
  while (auto seg = impl_->segmenter.next()) step(*seg);
}

void Session::step(const AudioSegment& segment) {
  auto& m = *impl_;
  if (m.cfg.context_dim) fail(ErrorCode::kState, "session takes precomputed contexts, not audio");
  m.check_order(segment.segment_id);
  drain_requests();
  m.advance_clock(segment.t1);
  if (!is_speech(segment, m.cfg.features)) {
    m.non_speech(segment.segment_id, segment.t0, segment.t1);
    return;
  }
  auto fv = m.pipeline.extract(segment);
  m.decide(segment.segment_id, segment.t0, segment.t1, std::move(fv.values));
}

void Session::step_context(std::int64_t segment_id, double t0, double t1, const Eigen::VectorXd& x,
                           bool speech) {
  auto& m = *impl_;
  if (!m.cfg.context_dim) fail(ErrorCode::kState, "session takes audio, not precomputed contexts");
  if (x.size() != *m.cfg.context_dim) fail(ErrorCode::kInput, "context dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x(i))) fail(ErrorCode::kInput, "non-finite context value");
  m.check_order(segment_id);
  drain_requests();
  m.advance_clock(t1);
  if (!speech) {
    m.non_speech(segment_id, t0, t1);
    return;
  }
  m.decide(segment_id, t0, t1, x);
}

RewardRecord Session::apply_feedback(const FeedbackEvent& event) { return impl_->apply(event); }

ActionId Session::register_speaker(const std::string& name) { return impl_->add_speaker(name); }

void Session::drain_requests() {
  auto& m = *impl_;
  for (auto& req : m.queue->take_all()) {
    try {
      if (const auto* fb = std::get_if<FeedbackEvent>(&req.body))
        m.apply(*fb);
      else
        m.add_speaker(std::get<RegisterRequest>(req.body).name);
    } catch (const Error& err) {
      m.events.emplace_back(ErrorEvent{req.origin, err.code(), err.what()});
    }
  }
}

void Session::finish() {
  auto& m = *impl_;
  drain_requests();
  for (auto& e : m.timeline) {
    if (!e.speech || e.matured) continue;
    // The final speech decision never sees a successor state.
    if (auto* q = std::get_if<std::pair<Codebook, QTable>>(&m.policy)) {
      for (const auto& [arm, r] : e.pending_q)
        q->second.update(*e.state, arm, r, std::nullopt, m.registry.action_count());
      e.pending_q.clear();
    }
    m.mature(e);
  }
}

nlohmann::json Session::snapshot() const {
  const auto& m = *impl_;
  nlohmann::json j;
  j["format"] = "diarl-checkpoint";
  j["version"] = 1;
  j["config"] = m.cfg;
  j["registry"] = m.registry.to_json();
  auto rng_state = nlohmann::json::array();
  for (auto w : m.rng.state()) rng_state.push_back(hex64(w));
  j["rng"] = {{"state", rng_state}, {"has_spare", m.rng.has_spare()}, {"spare", m.rng.spare()}};
  j["features"] = m.pipeline.save();
  j["segmenter"] = {{"next_id", m.segmenter.next_id()}, {"buffered", m.segmenter.buffered()}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, std::pair<Codebook, QTable>>)
          j["policy"] = {{"codebook", p.first.save()}, {"qtable", p.second.save()}};
        else
          j["policy"] = p.save();
      },
      m.policy);
  j["clock"] = {{"now", m.now}, {"next_segment_id", m.next_segment_id}};
  j["last_speech"] = optional_json(m.last_speech);
  j["timeline"] = {{"length", m.next_segment_id}, {"hash", hex64(m.hash)}};

  // Entries that can still receive feedback or feed a time-reward window,
  // plus the last speech decision awaiting its bootstrap state.
  const double keep_after = m.now - m.cfg.feedback_window_s - m.cfg.time_horizon_s - m.cfg.features.segment_hop_s;
  std::int64_t first = m.next_segment_id;
  for (const auto& e : m.timeline)
    if (e.t1 >= keep_after) {
      first = e.segment_id;
      break;
    }
  if (m.last_speech) first = std::min(first, *m.last_speech);
  auto live = nlohmann::json::array();
  for (const auto& e : m.timeline)
    if (e.segment_id >= first) live.push_back(entry_to_json(e));
  j["live_entries"] = live;
  return j;
}

Session Session::from_snapshot(const nlohmann::json& j) {
  if (j.value("format", "") != "diarl-checkpoint") fail(ErrorCode::kInput, "not a diarl checkpoint");
  if (j.value("version", 0) != 1) fail(ErrorCode::kInput, "unsupported checkpoint version");
  Session s(j.at("config").get<SessionConfig>());
  auto& m = *s.impl_;
  m.registry = SpeakerRegistry::from_json(j.at("registry"));
  Rng::State st{};
  const auto& words = j.at("rng").at("state");
  for (std::size_t i = 0; i < st.size(); ++i) st[i] = parse_hex64(words.at(i).get<std::string>());
  m.rng = Rng::from_state(st);
  m.rng.set_spare(j["rng"].at("has_spare").get<bool>(), j["rng"].at("spare").get<double>());
  m.pipeline.load(j.at("features"));
  m.segmenter.restore(j.at("segmenter").at("next_id").get<std::int64_t>(),
                      j["segmenter"].at("buffered").get<std::vector<std::int16_t>>());
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, std::pair<Codebook, QTable>>) {
          p.first.load(j.at("policy").at("codebook"));
          p.second.load(j["policy"].at("qtable"));
        } else {
          p.load(j.at("policy"));
        }
      },
      m.policy);
  m.now = j.at("clock").at("now").get<double>();
  m.next_segment_id = j["clock"].at("next_segment_id").get<std::int64_t>();
  m.last_speech = optional_from<std::int64_t>(j.at("last_speech"));
  m.hash = parse_hex64(j.at("timeline").at("hash").get<std::string>());
  for (const auto& e : j.at("live_entries")) m.timeline.push_back(entry_from_json(e));
  return s;
}

std::shared_ptr<RequestQueue> Session::queue() const { return impl_->queue; }

std::vector<SessionEvent> Session::take_events() {
  std::vector<SessionEvent> out;
  out.swap(impl_->events);
  return out;
}

void Session::set_chooser(ActionChooser chooser) { impl_->chooser = std::move(chooser); }
void Session::set_context_observer(std::function<void(const TimelineEntry&)> fn) {
  impl_->observer = std::move(fn);
}

const SessionConfig& Session::config() const { return impl_->cfg; }
const SpeakerRegistry& Session::registry() const { return impl_->registry; }
const std::deque<TimelineEntry>& Session::timeline() const { return impl_->timeline; }
const TimelineEntry* Session::find_entry(std::int64_t id) const { return impl_->find(id); }
std::int64_t Session::segment_count() const { return impl_->next_segment_id; }
std::string Session::timeline_hash() const { return hex64(impl_->hash); }
double Session::now() const { return impl_->now; }

std::string Session::transcript() const {
  std::string out;
  for (const auto& e : impl_->timeline) {
    out += e.transcript_json().dump();
    out += '\n';
  }
  return out;
}

const LinUcb* Session::linucb() const {
  if (const auto* p = std::get_if<LinUcb>(&impl_->policy)) return p;
  if (const auto* b = std::get_if<BerlinUcb>(&impl_->policy)) return &b->backbone();
  return nullptr;
}
const BerlinUcb* Session::berlinucb() const { return std::get_if<BerlinUcb>(&impl_->policy); }
const QTable* Session::qtable() const {
  const auto* q = std::get_if<std::pair<Codebook, QTable>>(&impl_->policy);
  return q ? &q->second : nullptr;
}
const Codebook* Session::codebook() const {
  const auto* q = std::get_if<std::pair<Codebook, QTable>>(&impl_->policy);
  return q ? &q->first : nullptr;
}
const FeaturePipeline& Session::features() const { return impl_->pipeline; }

}  // namespace diarl
