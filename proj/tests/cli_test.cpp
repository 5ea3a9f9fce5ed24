// Copyright 2026 The leace-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "leace/cli.hpp"
#include "leace/io.hpp"

namespace leace {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "leace");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("leace_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, FitThenApplyOnTwoPointFixtureGivesZeros) {
  write_file(path("x.csv"), "1\n-1\n");
  write_file(path("c.txt"), "A\nB\n");
  const Outcome fitted = run_cli({"fit", "--embeddings", path("x.csv"), "--labels",
                                  path("c.txt"), "--out", path("eraser.json")});
  ASSERT_EQ(fitted.code, 0) << fitted.err;
  const Outcome applied = run_cli({"apply", "--embeddings", path("x.csv"), "--eraser",
                                   path("eraser.json"), "--out", path("adjusted.csv")});
  ASSERT_EQ(applied.code, 0) << applied.err;
  const Matrix adjusted = read_embeddings(path("adjusted.csv"));
  ASSERT_EQ(adjusted.rows(), 2);
  EXPECT_NEAR(adjusted(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(adjusted(1, 0), 0.0, 1e-12);
}

TEST_F(CliTest, EvalClusterPerfectCaseReportsBeforeAndAfter) {
  write_file(path("x.csv"), "0,0\n0.1,0\n10,10\n10.1,10\n");
  write_file(path("gold.txt"), "a\na\nb\nb\n");
  write_file(path("src.txt"), "s\nt\ns\nt\n");
  ASSERT_EQ(run_cli({"fit", "--embeddings", path("x.csv"), "--labels", path("src.txt"),
                     "--out", path("e.json")})
                .code,
            0);
  const Outcome r = run_cli({"eval-cluster", "--embeddings", path("x.csv"), "--gold",
                             path("gold.txt"), "--eraser", path("e.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("command"), "eval-cluster");
  const auto& before = doc.at("metrics").at("before").at(0);
  EXPECT_EQ(before.at("k"), 2);
  EXPECT_DOUBLE_EQ(before.at("purity").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(before.at("ari").get<double>(), 1.0);
  EXPECT_TRUE(doc.at("metrics").contains("after"));
  EXPECT_EQ(doc.at("run").at("inputs").at("gold").at("sha256").get<std::string>(),
            sha256_file(path("gold.txt")));
}

TEST_F(CliTest, EvalRetrieveDefaultsToRecallAtOneAndTen) {
  write_file(path("x.csv"), "1,0\n0,1\n1,0\n");
  write_file(path("p.txt"), "0,1\n");
  const Outcome r = run_cli({"eval-retrieve", "--embeddings", path("x.csv"), "--pairs",
                             path("p.txt"), "--out", path("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(read_file(path("m.json")));
  const auto& before = doc.at("metrics").at("before");
  EXPECT_EQ(before.at("queries"), 2);
  EXPECT_DOUBLE_EQ(before.at("recall_at").at("1").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(before.at("recall_at").at("10").get<double>(), 1.0);
  EXPECT_FALSE(doc.at("metrics").contains("after"));
}

TEST_F(CliTest, SynthPcaAndSweepRun) {
  write_file(path("spec.json"),
             R"({"d": 8, "topics": 2, "sources": 2, "n_per_cell": 10, "u_dim": 2,
                 "loading_u": {"random_orthogonal": 0.3}})");
  const Outcome s = run_cli({"synth", "--spec", path("spec.json"), "--out", path("corpus")});
  ASSERT_EQ(s.code, 0) << s.err;
  for (const char* f : {"embeddings.embx", "concept.txt", "gold.txt", "pairs.txt",
                        "spec.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "corpus" / f)) << f;
  }
  const Outcome p = run_cli({"pca", "--embeddings", path("corpus/embeddings.embx"),
                             "--labels", path("corpus/concept.txt"), "--baseline-out",
                             path("pc1.json")});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto doc = nlohmann::json::parse(p.out);
  EXPECT_EQ(doc.at("metrics").at("pc1_scores").size(), 40u);
  EXPECT_NO_THROW(load_eraser(path("pc1.json")));
  const Outcome w = run_cli({"sweep", "--spec", path("spec.json"), "--strength", "0",
                             "--strength", "1", "--strength", "2"});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_EQ(nlohmann::json::parse(w.out).at("metrics").at("rows").size(), 3u);
}

TEST_F(CliTest, RerunsAreByteIdenticalApartFromTimestamp) {
  write_file(path("spec.json"), R"({"d": 8, "topics": 3, "sources": 2, "n_per_cell": 8})");
  ASSERT_EQ(run_cli({"synth", "--spec", path("spec.json"), "--out", path("c")}).code, 0);
  std::vector<std::string> args = {"eval-cluster", "--embeddings", path("c/embeddings.embx"),
                                   "--gold", path("c/gold.txt"), "--k", "2", "--k", "3"};
  auto strip = [](const std::string& text) {
    auto doc = nlohmann::json::parse(text);
    doc.erase("timestamp");
    return doc.dump();
  };
  const Outcome a = run_cli(args);
  const Outcome b = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(strip(a.out), strip(b.out));
  EXPECT_EQ(nlohmann::json::parse(a.out).at("metrics").at("before").size(), 2u);
}

TEST_F(CliTest, ExitCodes) {
  const Outcome unknown = run_cli({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"fit", "--embeddings", path("x.csv")}).code, 2);

  write_file(path("bad.csv"), "1,2\n3\n");
  write_file(path("c.txt"), "A\nB\n");
  const Outcome format = run_cli({"fit", "--embeddings", path("bad.csv"), "--labels",
                                  path("c.txt"), "--out", path("e.json")});
  EXPECT_EQ(format.code, 3);
  EXPECT_NE(format.err.find("line 2"), std::string::npos);

  write_file(path("x.csv"), "1\n2\n3\n");
  EXPECT_EQ(run_cli({"fit", "--embeddings", path("x.csv"), "--labels", path("c.txt"),
                     "--out", path("e.json")})
                .code,
            3);
  EXPECT_EQ(run_cli({"apply", "--embeddings", path("x.csv"), "--eraser",
                     path("missing.json"), "--out", path("y.csv")})
                .code,
            3);
}

TEST(CliBinary, UnknownSubcommandExitsWithUsageCode) {
  const std::string cmd = std::string(LEACE_CLI_PATH) + " frobnicate >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

}  // namespace
}  // namespace leace
