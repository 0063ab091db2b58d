// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/cli.hpp"
#include "mmrank/config.hpp"
#include "mmrank/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace mmrank {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mmrank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("mmrank_cli_" + name); }

TEST(Config, EmptyFileGivesDefaults) {
  const auto path = temp("empty.cfg");
  std::ofstream(path).close();
  EXPECT_EQ(parse_config(path, {}, {}), RunConfig{});
  fs::remove(path);
}

TEST(Config, FlagOverridesFile) {
  const auto path = temp("lr.cfg");
  std::ofstream(path) << "learning_rate = 0.001\nepochs = 3\n";
  const RunConfig cfg = parse_config(path, {{"learning_rate", "0.01"}}, {});
  EXPECT_EQ(cfg.model.learning_rate, 0.01);
  EXPECT_EQ(cfg.model.epochs, 3);
  fs::remove(path);
}

TEST(Config, UnknownKeyNamed) {
  const auto path = temp("typo.cfg");
  std::ofstream(path) << "learnig_rate = 0.01\n";
  try {
    parse_config(path, {}, {});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("learnig_rate"), std::string::npos);
  }
  fs::remove(path);
}

TEST(Config, TypeMismatchNamesKey) {
  try {
    parse_config(std::nullopt, {{"epochs", "many"}}, {});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("epochs"), std::string::npos);
  }
  EXPECT_THROW(parse_config(std::nullopt, {{"umcm_kind", "gru"}}, {}), InputError);
  EXPECT_THROW(parse_config(std::nullopt, {{"modalities", ""}}, {}), InputError);
}

TEST(Config, KeyValueRoundTrip) {
  RunConfig cfg;
  cfg.model.umcm = UmcmKind::Sen;
  cfg.model.mlp_widths = {5};
  cfg.model.modality_mask = {true, false, true, false};
  cfg.model.learning_rate = 0.1 + 0.2;
  cfg.split_timestamp = 42;
  EXPECT_EQ(parse_config(std::nullopt, run_config_to_kv(cfg), {}), cfg);
}

TEST(Help, ListsEveryKeyWithDefault) {
  const Result r = run({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  const RunConfig defaults;
  for (const auto& [key, value] : run_config_to_kv(defaults)) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
    EXPECT_NE(r.out.find(key + " (default: " + value + ")"), std::string::npos) << key;
  }
}

TEST(Cli, TrainMissingDirectoryExitsOne) {
  const Result r = run({"train", "--data", "/nonexistent/mmrank_data", "--out", temp("m.bin").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/mmrank_data"), std::string::npos);
}

TEST(Cli, UnknownFlagAndKeyExitOne) {
  EXPECT_EQ(run({"train", "--bogus"}).code, 1);
  const auto path = temp("typo2.cfg");
  std::ofstream(path) << "learnig_rate = 0.01\n";
  const Result r = run({"gradcheck", "--config", path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("learnig_rate"), std::string::npos);
  fs::remove(path);
}

TEST(Cli, GradcheckPasses) {
  const Result r = run({"gradcheck", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_relative_error="), std::string::npos);
  EXPECT_NE(r.err.find("resolved config:"), std::string::npos);
}

TEST(Cli, PipelineAndPredict) {
  const auto dir = temp("pipe");
  fs::remove_all(dir);
  const auto spec = temp("pipe.spec");
  std::ofstream(spec) << "n_users = 50\nn_items = 80\nn_interactions = 1500\n";
  ASSERT_EQ(run({"synth", "--spec", spec.string(), "--out-dir", (dir / "data").string(), "--seed", "3"}).code, 0);
  const Result t = run({"train", "--data", (dir / "data").string(), "--out", (dir / "m.bin").string(),
                        "--split-timestamp", "1633046400", "--fusion-dim", "8", "--mlp-widths", "8"});
  ASSERT_EQ(t.code, 0) << t.err;
  const Result e = run({"evaluate", "--model", (dir / "m.bin").string(), "--data", (dir / "data").string(),
                        "--report", (dir / "r.json").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(dir / "r.json"));
  const Result p = run({"predict", "--model", (dir / "m.bin").string(), "--user", "u0", "--items", "i0,i1,i2"});
  ASSERT_EQ(p.code, 0) << p.err;
  std::istringstream lines(p.out);
  std::string id;
  double score, prev = 2.0;
  int n = 0;
  while (lines >> id >> score) {
    EXPECT_LE(score, prev);
    prev = score;
    ++n;
  }
  EXPECT_EQ(n, 3);
  EXPECT_EQ(run({"predict", "--model", (dir / "m.bin").string(), "--user", "nobody", "--items", "i0"}).code, 1);
  fs::remove_all(dir);
  fs::remove(spec);
}

}  // namespace
}  // namespace mmrank
