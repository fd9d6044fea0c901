// SPDX-License-Identifier: Apache-2.0
// Runs the built command-line tool end to end.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Cli : ::testing::Test {
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("tarn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write_json(const std::string& name, const json& doc) const {
    const fs::path p = dir / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  int run(const std::string& args, std::string* out = nullptr) const {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = std::string(TARN_CLI_PATH) + " " + args + " > " + log.string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out != nullptr) {
      std::stringstream ss;
      ss << std::ifstream(log).rdbuf();
      *out = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  json tiny_config() const {
    return json{{"seed", 5},
                {"model", {{"d_in", 6}, {"visual_hidden", 3}, {"relation_hidden", 3}, {"nn_hidden", 3}}},
                {"episode", {{"way", 3}}},
                {"train", {{"lr", 0.01}, {"episodes", 20}, {"val_every", 10}, {"val_episodes", 5},
                           {"test_episodes", 10}}},
                {"data", {{"synthetic", {{"n_classes", 10}, {"examples_per_class", 4}, {"d_in", 6}}}}},
                {"split", {{"train_fraction", 0.4}, {"val_fraction", 0.3}}},
                {"output_dir", (dir / "run").string()}};
  }
};

}  // namespace

TEST_F(Cli, SynthWritesFiles) {
  const auto spec = write_json("spec.json", {{"name", "toy"}, {"n_classes", 4}, {"examples_per_class", 2},
                                             {"d_in", 3}, {"semantic_size", 2}});
  std::string out;
  ASSERT_EQ(run("synth --spec " + spec.string() + " --out " + (dir / "data").string(), &out), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "toy.tsf"));
  EXPECT_TRUE(fs::exists(dir / "data" / "toy.tsv"));
  EXPECT_EQ(json::parse(out)["videos"], 8);
}

TEST_F(Cli, TrainThenEval) {
  const auto cfg = write_json("cfg.json", tiny_config());
  std::string out;
  ASSERT_EQ(run("train --config " + cfg.string(), &out), 0);
  EXPECT_EQ(json::parse(out)["train_episodes"], 20);
  for (const char* f : {"train_log.csv", "checkpoint.tck", "checkpoint.json", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  ASSERT_EQ(run("eval --config " + cfg.string() + " --checkpoint " + (dir / "run" / "checkpoint.tck").string(), &out), 0);
  EXPECT_EQ(out.rfind("accuracy: ", 0), 0u) << out;
  EXPECT_TRUE(fs::exists(dir / "run" / "eval.csv"));
}

TEST_F(Cli, OverridesApply) {
  const auto cfg = write_json("cfg.json", tiny_config());
  std::string out;
  ASSERT_EQ(run("train --config " + cfg.string() + " --set train.episodes=4 --set train.val_every=0", &out), 0);
  EXPECT_EQ(json::parse(out)["train_episodes"], 4);
}

TEST_F(Cli, GradcheckAndFaultInjection) {
  const auto cfg = write_json("cfg.json", tiny_config());
  std::string out;
  EXPECT_EQ(run("gradcheck --config " + cfg.string(), &out), 0);
  EXPECT_NE(out.find("PASS"), std::string::npos);
  EXPECT_EQ(run("gradcheck --config " + cfg.string() + " --inject-fault attention.W", &out), 3);
  EXPECT_NE(out.find("attention.W"), std::string::npos);
  EXPECT_EQ(run("gradcheck --config " + cfg.string() + " --inject-fault nope"), 1);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("train --config " + write_json("bad.json", {{"measure", "dot"}}).string()), 1);
  EXPECT_EQ(run("train --config " + write_json("missing.json", {{"data", {{"path", "/nonexistent.tsf"}}}}).string()), 2);
  EXPECT_EQ(run("frobnicate"), 1);
  auto cfg = tiny_config();
  cfg["model"]["d_in"] = 7;
  EXPECT_EQ(run("train --config " + write_json("shape.json", cfg).string()), 2);
}
