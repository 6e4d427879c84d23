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

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "support/serve_harness.hpp"
#include "support/tempdir.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  testsupport::TempDir dir;
  const auto out_path = dir.file("out"), err_path = dir.file("err");
  const pid_t pid = ::fork();
  if (pid == 0) {
    const int o = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int e = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int null_in = ::open("/dev/null", O_RDONLY);
    ::dup2(o, 1);
    ::dup2(e, 2);
    ::dup2(null_in, 0);
    std::vector<char*> argv{const_cast<char*>(DIARL_CLI_PATH)};
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    ::execv(DIARL_CLI_PATH, argv.data());
    ::_exit(127);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : 128, testsupport::slurp(out_path), testsupport::slurp(err_path)};
}

std::string fixture(const std::string& name) { return std::string(DIARL_FIXTURES_DIR) + "/" + name; }

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  const auto r = run_cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  auto r = run_cli({"bench", "run", "--bogus", "--seed", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run_cli({"bench", "run", "--policy", "linucb"});  // no seed
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
  EXPECT_EQ(run_cli({"bench", "run", "--seed", "1", "--p", "2"}).code, 2);
  EXPECT_EQ(run_cli({"teleport"}).code, 2);
}

TEST(Cli, BenchRunPrintsMetricsReport) {
  const auto r = run_cli({"bench", "run", "--policy", "linucb", "--speakers", "2", "--segments", "2000", "--p", "1.0",
                          "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["policy"], "linucb");
  EXPECT_EQ(j["n_segments"], 2000);
  EXPECT_GE(j["final_window_accuracy"].get<double>(), 0.9);
  for (const auto* key : {"error_rate", "cumulative_reward", "regret", "confusion"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(run_cli({"bench", "run", "--policy", "linucb", "--speakers", "2", "--segments", "2000", "--p", "1.0",
                     "--seed", "7"})
                .out,
            r.out);
}

TEST(Cli, BenchGenThenRunOnCorpus) {
  testsupport::TempDir dir;
  ASSERT_EQ(run_cli({"bench", "gen", "--out", dir.str(), "--speakers", "3", "--segments", "300", "--seed", "4"}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir.file("speakers.tsv")));
  const auto r = run_cli({"bench", "run", "--corpus", dir.str(), "--segments", "500", "--policy", "oracle", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n_segments"], 500);
  EXPECT_EQ(j["regret"], 0.0);
  EXPECT_EQ(run_cli({"bench", "run", "--corpus", dir.file("missing"), "--seed", "4"}).code, 2);
}

TEST(Cli, BenchCompareWritesCsv) {
  testsupport::TempDir dir;
  const auto r = run_cli({"bench", "compare", "--policies", "linucb,random", "--p-grid", "0.5", "--seed", "1", "--seeds",
                          "2", "--segments", "300", "--csv", dir.file("rows.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = testsupport::slurp(dir.file("rows.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 2 policies x 2 seeds
  EXPECT_NE(r.out.find("linucb"), std::string::npos);
}

TEST(Cli, ReplaySilence) {
  const auto r = run_cli({"replay", "--in", fixture("silence.wav")});
  ASSERT_EQ(r.code, 0) << r.err;
  int lines = 0;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line); ++lines) EXPECT_EQ(nlohmann::json::parse(line)["label"], "NON_SPEECH");
  EXPECT_EQ(lines, 5);
}

TEST(Cli, ReplayReportsRejectedFeedbackAndWritesFiles) {
  testsupport::TempDir dir;
  const auto r = run_cli({"replay", "--in", fixture("two_speakers.wav"), "--script", fixture("feedback_script.jsonl"),
                          "--out", dir.file("t.jsonl"), "--rewards", dir.file("r.jsonl"), "--features",
                          dir.file("f.csv"), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("UNKNOWN_LABEL"), std::string::npos);
  const auto t = testsupport::slurp(dir.file("t.jsonl"));
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 39);
  EXPECT_FALSE(testsupport::slurp(dir.file("r.jsonl")).empty());
  EXPECT_FALSE(testsupport::slurp(dir.file("f.csv")).empty());
  EXPECT_EQ(run_cli({"replay", "--in", dir.file("nothing.wav")}).code, 2);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  testsupport::TempDir dir;
  std::ofstream(dir.file("cfg.json")) << R"({"policy":"qlearning","epsilon":0.0,"features":{"pca_dim":4}})";
  // Flag beats file.
  auto r = run_cli({"replay", "--in", fixture("two_speakers.wav"), "--config", dir.file("cfg.json"), "--policy",
                    "berlinucb", "--features", dir.file("f.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = testsupport::slurp(dir.file("f.csv"));
  const auto first = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 3 + 4 - 1);

  std::ofstream(dir.file("bad.json")) << R"({"polcy":"linucb"})";
  r = run_cli({"replay", "--in", fixture("silence.wav"), "--config", dir.file("bad.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("polcy"), std::string::npos);
}

TEST(Cli, SnapshotInspect) {
  testsupport::TempDir dir;
  // A served session writes the checkpoint we inspect.
  testsupport::ServeScenario sc{DIARL_CLI_PATH, fixture("two_speakers.wav"),
                                diarl::load_script(fixture("feedback_script.jsonl")), {"--seed", "1"}, dir.str(), {}};
  const auto run = testsupport::run_serve(sc);
  ASSERT_EQ(run.exit_code, 0);
  const auto r = run_cli({"snapshot", "inspect", dir.file("checkpoint.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["segments"], 39);
  EXPECT_EQ(j["policy"], "linucb");
  EXPECT_EQ(j["hash"], run.ack->hash);
  EXPECT_EQ(j["speakers"].size(), 3u);

  std::ofstream(dir.file("junk.json")) << "{\"format\":\"other\"}";
  EXPECT_EQ(run_cli({"snapshot", "inspect", dir.file("junk.json")}).code, 1);
}

TEST(Cli, ServeResumesFromCheckpoint) {
  testsupport::TempDir a, b;
  testsupport::ServeScenario first{DIARL_CLI_PATH, fixture("silence.wav"), {}, {"--seed", "2"}, a.str(), {}};
  ASSERT_EQ(testsupport::run_serve(first).exit_code, 0);
  testsupport::ServeScenario second{DIARL_CLI_PATH, fixture("silence.wav"), {},
                                    {"--resume", a.file("checkpoint.json")}, b.str(), {}};
  const auto run = testsupport::run_serve(second);
  ASSERT_EQ(run.exit_code, 0);
  // 5 segments, then the 0.5 s carried in the segmenter plus 3 s more: 6.
  EXPECT_EQ(run.ack->length, 11);
}
