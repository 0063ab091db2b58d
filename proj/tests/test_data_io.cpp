// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/data_io.hpp"
#include "mmrank/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace mmrank {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("mmrank_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_minimal(const fs::path& dir, const std::string& interactions) {
  write(dir / "users.jsonl", R"({"user_id":"u1","interests":["cats"],"profile":{"age":"30s"}})" "\n");
  write(dir / "items.jsonl", R"({"item_id":"i1","sty":[1.0,2.0],"meta":{"size":"s"}})" "\n");
  write(dir / "interactions.tsv", interactions);
}

SynthSpec small_spec(std::uint64_t seed = 0) {
  SynthSpec s;
  s.n_users = 100;
  s.n_items = 200;
  s.n_interactions = 2000;
  s.seed = seed;
  return s;
}

TEST(Load, MinimalDataset) {
  TempDir dir("load_min");
  write_minimal(dir.path(), "u1\ti1\t1\t100\n");
  const Dataset d = load_dataset(dir.path());
  EXPECT_EQ(d.users.size(), 1u);
  EXPECT_EQ(d.items.size(), 1u);
  EXPECT_EQ(d.interactions.size(), 1u);
  EXPECT_EQ(d.schema.dense_dims[static_cast<int>(Modality::Sty)], 2);
}

TEST(Load, EmptyInteractions) {
  TempDir dir("load_empty");
  write_minimal(dir.path(), "");
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("no interactions"), std::string::npos);
  }
}

TEST(Load, MalformedLineHasFileAndLine) {
  TempDir dir("load_bad");
  write_minimal(dir.path(), "u1\ti1\t1\t100\nu1\ti1\tx\t101\n");
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("interactions.tsv:2"), std::string::npos) << e.what();
  }
}

TEST(Load, DanglingIdNamed) {
  TempDir dir("load_dangle");
  write_minimal(dir.path(), "u1\tghost\t1\t100\n");
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Load, InconsistentDimensionNamesItemAndDims) {
  TempDir dir("load_dims");
  write_minimal(dir.path(), "u1\ti1\t1\t100\n");
  std::ofstream(dir.path() / "items.jsonl", std::ios::app) << R"({"item_id":"i2","sty":[1.0,2.0,3.0]})" "\n";
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("i2"), std::string::npos);
    EXPECT_NE(msg.find("3"), std::string::npos);
    EXPECT_NE(msg.find("2"), std::string::npos);
  }
}

TEST(Load, MissingDirectory) {
  EXPECT_THROW(load_dataset("/nonexistent/mmrank"), InputError);
}

TEST(Vocabulary, DenseFromOneWithOov) {
  Vocabulary v;
  EXPECT_EQ(v.add("a"), 1);
  EXPECT_EQ(v.add("b"), 2);
  EXPECT_EQ(v.add("a"), 1);
  EXPECT_EQ(v.size(), 3);
  EXPECT_EQ(v.lookup("b"), 2);
  EXPECT_EQ(v.lookup("unseen"), 0);
  EXPECT_EQ(Vocabulary::from_tokens(v.tokens()).lookup("b"), 2);
}

TEST(Split, Boundaries) {
  std::vector<Interaction> xs;
  for (int t = 0; t < 10; ++t) xs.push_back({"u", "i", t % 2, t < 4 ? 10 + t : 100 + t});
  auto [train, test] = temporal_split(xs, 100);
  EXPECT_EQ(train.size(), 4u);
  EXPECT_EQ(test.size(), 6u);
  for (const auto& x : train) EXPECT_LT(x.timestamp, 100);
  for (const auto& x : test) EXPECT_GE(x.timestamp, 100);
  EXPECT_TRUE(temporal_split(xs, 0).first.empty());
  EXPECT_TRUE(temporal_split(xs, 1000).second.empty());
  EXPECT_EQ(temporal_split(xs, 104).second.front().timestamp, 104);
}

TEST(RoundTrip, LoadSaveLoad) {
  TempDir a("rt_a"), b("rt_b");
  save_dataset(synth_generate(small_spec()).data, a.path());
  const Dataset first = load_dataset(a.path());
  save_dataset(first, b.path());
  const Dataset second = load_dataset(b.path());
  EXPECT_EQ(first.users, second.users);
  EXPECT_EQ(first.items, second.items);
  EXPECT_EQ(first.interactions, second.interactions);
  EXPECT_EQ(first.schema.interests.tokens(), second.schema.interests.tokens());
  for (const char* f : {"users.jsonl", "items.jsonl", "interactions.tsv"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
}

TEST(Synth, SameSeedSameBytes) {
  TempDir a("syn_a"), b("syn_b");
  save_dataset(synth_generate(small_spec(4)).data, a.path());
  save_dataset(synth_generate(small_spec(4)).data, b.path());
  for (const char* f : {"users.jsonl", "items.jsonl", "interactions.tsv"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
  EXPECT_NE(synth_generate(small_spec(5)).data.interactions, synth_generate(small_spec(4)).data.interactions);
}

TEST(Synth, ZipfHeadExceedsUniformShare) {
  SynthSpec s = small_spec();
  s.zipf_exponent = 3.0;
  const Dataset d = synth_generate(s).data;
  std::map<std::string, int> counts;
  for (const auto& x : d.interactions) ++counts[x.item_id];
  int top = 0;
  for (const auto& [id, c] : counts) top = std::max(top, c);
  EXPECT_GT(static_cast<double>(top) / d.interactions.size(), 1.0 / s.n_items);
}

TEST(Synth, AllStyleCohort) {
  SynthSpec s = small_spec();
  s.frac_style = 1.0;
  s.frac_semantic = s.frac_text = s.frac_mixed = 0.0;
  for (const auto& u : synth_generate(s).data.users) {
    bool found = false;
    for (const auto& [f, v] : u.profile) {
      if (f == kCohortField) {
        EXPECT_EQ(v, "style");
        found = true;
      }
    }
    EXPECT_TRUE(found);
  }
}

TEST(Synth, CohortCountsFollowFractions) {
  const Dataset d = synth_generate(small_spec()).data;
  std::map<std::string, int> n;
  for (const auto& u : d.users)
    for (const auto& [f, v] : u.profile)
      if (f == kCohortField) ++n[v];
  EXPECT_EQ(n["style"], 30);
  EXPECT_EQ(n["semantic"], 30);
  EXPECT_EQ(n["text"], 30);
  EXPECT_EQ(n["mixed"], 10);
}

TEST(Synth, PositiveRateNearTarget) {
  SynthSpec s = small_spec();
  s.n_interactions = 20000;
  const Dataset d = synth_generate(s).data;
  double pos = 0;
  for (const auto& x : d.interactions) pos += x.label;
  const double rate = pos / d.interactions.size();
  EXPECT_NEAR(rate, s.target_positive_rate, 0.05);
  EXPECT_GE(rate, 0.2);
  EXPECT_LE(rate, 0.4);
}

TEST(Synth, SortedByTime) {
  const Dataset d = synth_generate(small_spec()).data;
  for (std::size_t i = 1; i < d.interactions.size(); ++i) {
    EXPECT_LE(d.interactions[i - 1].timestamp, d.interactions[i].timestamp);
  }
}

TEST(Synth, SpecFileRejectsUnknownKeyAndBadFractions) {
  TempDir dir("spec");
  write(dir.path() / "a.txt", "n_users = 10\nbogus = 1\n");
  EXPECT_THROW(read_synth_spec(dir.path() / "a.txt"), InputError);
  write(dir.path() / "b.txt", "frac_style = 0.5\n");
  EXPECT_THROW(read_synth_spec(dir.path() / "b.txt"), InputError);
  write(dir.path() / "c.txt", "# comment\nn_users = 10\nseed = 9\n");
  const SynthSpec s = read_synth_spec(dir.path() / "c.txt");
  EXPECT_EQ(s.n_users, 10);
  EXPECT_EQ(s.seed, 9u);
}

}  // namespace
}  // namespace mmrank
