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
#include <fstream>
#include <limits>
#include <set>

#include "diarl/protocol.hpp"
#include "diarl/rng.hpp"

using namespace diarl;
using namespace diarl::protocol;

namespace {

std::string decode_code(std::string_view line) {
  try {
    decode(line);
  } catch (const DecodeError& e) {
    return e.code();
  }
  return "OK";
}

// Random message generator for the round-trip property.
struct Gen {
  Rng rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::string str() {
    static const std::vector<std::string> alphabet{"a", "Z", "0", " ", "\"", "\\", "\n", "\t", "/", "é", "日", "\x7f", "{", "?"};
    std::string s;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
    return s;
  }
  double real() {
    switch (rng.below(4)) {
      case 0: return 0.0;
      case 1: return rng.uniform();
      case 2: return rng.normal() * 1e6;
      default: return std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.below(200)) - 100);
    }
  }
  std::int64_t id() { return static_cast<std::int64_t>(rng.below(1u << 20)) - 5; }
  std::vector<RegistryEntry> entries() {
    std::vector<RegistryEntry> out;
    const auto n = rng.below(5);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back({static_cast<std::size_t>(i + 1), str()});
    return out;
  }

  Message any() {
    switch (rng.below(8)) {
      case 0: return Hello{str(), entries()};
      case 1: return SegmentLabel{id(), real(), real(), str(), real()};
      case 2: {
        Feedback f{id(), str(), std::nullopt, std::nullopt};
        if (rng.bernoulli(0.5)) f.label = str();
        if (rng.bernoulli(0.5)) f.rating = real();
        return f;
      }
      case 3: return RegisterSpeaker{str()};
      case 4: return RegistryUpdate{entries()};
      case 5: {
        RewardRecord r{id(), std::nullopt, real(), real(), real()};
        if (rng.bernoulli(0.5)) r.r_user = real();
        return RewardRecordMsg{r};
      }
      case 6: return ErrorMsg{str(), str()};
      default: return SnapshotAck{str(), id(), str()};
    }
  }
};

}  // namespace

TEST(Protocol, GeneratedMessagesRoundTrip) {
  Gen gen(2024);
  for (int i = 0; i < 5000; ++i) {
    const Message m = gen.any();
    const std::string line = encode(m);
    ASSERT_EQ(line.back(), '\n');
    ASSERT_EQ(line.find('\n'), line.size() - 1) << "embedded newline in " << line;
    const Message back = decode(line);
    EXPECT_EQ(back, m) << line;
    EXPECT_EQ(encode(back), line);
  }
}

TEST(Protocol, SchemaFixtureReencodesByteExact) {
  std::ifstream in(std::string(DIARL_FIXTURES_DIR) + "/protocol_messages.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  std::set<std::string> types;
  int n = 0;
  while (std::getline(in, line)) {
    const auto m = decode(line);
    EXPECT_EQ(encode(m), line + "\n");
    types.insert(std::string(type_name(m)));
    ++n;
  }
  EXPECT_EQ(n, 15);
  EXPECT_EQ(types.size(), 8u);
}

TEST(Protocol, ExactWireForms) {
  EXPECT_EQ(encode(Feedback{12, "confirm", std::nullopt, std::nullopt}),
            "{\"type\":\"feedback\",\"segment_id\":12,\"kind\":\"confirm\"}\n");
  EXPECT_EQ(encode(Hello{}), "{\"type\":\"hello\",\"version\":\"1\",\"registry\":[]}\n");
  EXPECT_EQ(encode(ErrorMsg{"STALE", "late"}), "{\"type\":\"error\",\"code\":\"STALE\",\"message\":\"late\"}\n");
}

TEST(Protocol, DecodeErrorCodes) {
  EXPECT_EQ(decode_code("{not json"), "BAD_JSON");
  EXPECT_EQ(decode_code(""), "BAD_JSON");
  EXPECT_EQ(decode_code("[1,2]"), "BAD_JSON");
  EXPECT_EQ(decode_code("\"hello\""), "BAD_JSON");
  EXPECT_EQ(decode_code("{\"type\":\"dance\"}"), "UNKNOWN_TYPE");
  EXPECT_EQ(decode_code("{\"kind\":\"confirm\"}"), "BAD_REQUEST");
  EXPECT_EQ(decode_code("{\"type\":7}"), "BAD_REQUEST");
  EXPECT_EQ(decode_code("{\"type\":\"feedback\",\"kind\":\"confirm\"}"), "BAD_REQUEST");
  EXPECT_EQ(decode_code("{\"type\":\"feedback\",\"segment_id\":\"4\",\"kind\":\"confirm\"}"), "BAD_REQUEST");
  EXPECT_EQ(decode_code("{\"type\":\"register_speaker\"}"), "BAD_REQUEST");
  EXPECT_EQ(decode_code("{\"type\":\"hello\"}"), "OK");
  EXPECT_EQ(decode_code("{\"type\":\"feedback\",\"segment_id\":-1,\"kind\":\"confirm\",\"extra\":true}"), "OK");
}

TEST(Protocol, FeedbackToEvent) {
  const auto ev = to_event(Feedback{4, "correct", "Bob", std::nullopt}, 12.5);
  EXPECT_EQ(ev.segment_id, 4);
  EXPECT_EQ(ev.kind, FeedbackKind::kCorrect);
  EXPECT_EQ(ev.label, "Bob");
  EXPECT_EQ(ev.arrival_time, 12.5);
  EXPECT_EQ(from_event(ev), (Feedback{4, "correct", "Bob", std::nullopt}));
  EXPECT_EQ(to_event(Feedback{1, "rating", std::nullopt, 0.25}, 0).rating, 0.25);

  auto code = [](const Feedback& f) {
    try {
      to_event(f, 0);
    } catch (const DecodeError& e) {
      return e.code();
    }
    return std::string("OK");
  };
  EXPECT_EQ(code({1, "praise", std::nullopt, std::nullopt}), "BAD_REQUEST");
  EXPECT_EQ(code({1, "correct", std::nullopt, std::nullopt}), "BAD_REQUEST");
  EXPECT_EQ(code({1, "new_speaker", std::string(), std::nullopt}), "BAD_REQUEST");
  EXPECT_EQ(code({1, "rating", std::nullopt, std::nullopt}), "BAD_REQUEST");
  EXPECT_EQ(code({1, "confirm", "ignored", std::nullopt}), "OK");
}

TEST(Protocol, SessionEventsMapToWireMessages) {
  EXPECT_EQ(from_session_event(LabelEvent{3, 1.5, 2.5, "NEW?", 0.0}), Message(SegmentLabel{3, 1.5, 2.5, "NEW?", 0.0}));
  SpeakerRegistry reg;
  reg.confirm("Alice");
  reg.confirm("Bob");
  const auto upd = from_session_event(RegistryEvent{reg.to_json()});
  EXPECT_EQ(upd, Message(RegistryUpdate{{{1, "Alice"}, {2, "Bob"}}}));
  EXPECT_EQ(registry_entries(reg), std::get<RegistryUpdate>(upd).entries);
  EXPECT_EQ(from_session_event(ErrorEvent{3, ErrorCode::kStale, "late"}), Message(ErrorMsg{"STALE", "late"}));
  const RewardRecord rec{5, 1.0, 0.1, 0.2, 1.0};
  EXPECT_EQ(from_session_event(RewardEvent{rec}), Message(RewardRecordMsg{rec}));
}
