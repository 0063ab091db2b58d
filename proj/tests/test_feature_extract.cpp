// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/errors.hpp"
#include "mmrank/feature_extract.hpp"
#include "mmrank/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace mmrank {
namespace {

LayerMap<double> random_layer(Rng& rng, int c, int h, int w) {
  std::vector<double> data(static_cast<std::size_t>(c * h * w));
  for (double& x : data) x = rng.normal();
  return LayerMap<double>::from_flat(c, h, w, data);
}

// Direct triple loop over the definition.
Eigen::MatrixXd gram_oracle(const LayerMap<double>& l) {
  const auto c = l.channels();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(c, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index k = 0; k < c; ++k)
      for (Eigen::Index p = 0; p < l.values.cols(); ++p) g(j, k) += l.values(j, p) * l.values(k, p);
  return g / static_cast<double>(l.height * l.width);
}

TEST(Gram, ConstantMapIsOne) {
  const std::vector<double> ones(4, 1.0);
  const auto g = gram_matrix(LayerMap<double>::from_flat(1, 2, 2, ones));
  ASSERT_EQ(g.rows(), 1);
  EXPECT_EQ(g(0, 0), 1.0);
}

TEST(Gram, HandExample) {
  const std::vector<double> data{1, 2, 3, 4, 1, 1, 1, 1};
  const auto g = gram_matrix(LayerMap<double>::from_flat(2, 2, 2, data));
  Eigen::Matrix2d expected;
  expected << 7.5, 2.5, 2.5, 1.0;
  EXPECT_EQ(g, Eigen::MatrixXd(expected));
}

TEST(Gram, MatchesOracleSymmetricAndPsd) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 1 + static_cast<int>(rng.below(8));
    const auto layer = random_layer(rng, c, 1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5)));
    const auto g = gram_matrix(layer);
    EXPECT_TRUE(g == g.transpose());
    EXPECT_LT((g - gram_oracle(layer)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(g.diagonal().minCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_oracle(layer));
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Gram, DegreeTwoHomogeneous) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto layer = random_layer(rng, 5, 3, 4);
    const double a = rng.uniform(-3.0, 3.0);
    const auto g = gram_matrix(layer);
    layer.values *= a;
    const auto ga = gram_matrix(layer);
    EXPECT_LE((ga - a * a * g).norm(), 1e-10 * (a * a * g).norm());
  }
}

TEST(Gram, InvariantToSpatialPermutation) {
  Rng rng(5);
  auto layer = random_layer(rng, 4, 3, 3);
  const auto g = gram_matrix(layer);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  LayerMap<double> shuffled = layer;
  for (int p = 0; p < 9; ++p) shuffled.values.col(p) = layer.values.col(perm[p]);
  EXPECT_LT((gram_matrix(shuffled) - g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gram, RejectsEmptyLayer) {
  EXPECT_THROW(gram_matrix(LayerMap<double>::from_flat(0, 2, 2, {})), std::invalid_argument);
  EXPECT_THROW(gram_matrix(LayerMap<double>::from_flat(1, 0, 2, {})), std::invalid_argument);
}

TEST(Gram, FloatScalar) {
  const std::vector<float> data{1, 2, 3, 4, 1, 1, 1, 1};
  const auto g = gram_matrix(LayerMap<float>::from_flat(2, 2, 2, data));
  EXPECT_FLOAT_EQ(g(0, 1), 2.5f);
}

TEST(Pool, GridOneIsGlobalMax) {
  Eigen::Matrix2d g;
  g << 7.5, 2.5, 2.5, 1.0;
  const auto p = pool_gram(Eigen::MatrixXd(g), 1);
  ASSERT_EQ(p.size(), 1);
  EXPECT_EQ(p(0, 0), 7.5);
}

TEST(Pool, BlocksCoverEveryRow) {
  for (int n = 1; n < 20; ++n) {
    for (int parts = 1; parts <= n; ++parts) {
      const auto off = block_offsets(n, parts);
      EXPECT_EQ(off.front(), 0);
      EXPECT_EQ(off.back(), n);
      for (int b = 0; b < parts; ++b) EXPECT_GE(off[b + 1] - off[b], 1);
    }
  }
}

TEST(Pool, BlockMaximum) {
  Eigen::MatrixXd g(4, 4);
  for (int i = 0; i < 16; ++i) g.data()[i] = i;
  const auto p = pool_gram(g, 2);
  EXPECT_EQ(p(0, 0), 5.0);
  EXPECT_EQ(p(1, 1), 15.0);
  EXPECT_EQ(p(1, 0), 7.0);
}

TEST(Semantic, ChannelMeans) {
  const std::vector<double> data{1, 2, 3, 4, 1, 1, 1, 1};
  const auto s = semantic_pool(LayerMap<double>::from_flat(2, 2, 2, data));
  EXPECT_EQ(s(0), 2.5);
  EXPECT_EQ(s(1), 1.0);
  const std::vector<double> four{4, 4, 4, 4};
  EXPECT_EQ(semantic_pool(LayerMap<double>::from_flat(1, 2, 2, four))(0), 4.0);
}

FeatureMapStack<double> stack_of(Rng& rng, int layers, int c) {
  FeatureMapStack<double> s;
  s.item_id = "x";
  for (int l = 0; l < layers; ++l) s.layers.push_back(random_layer(rng, c, 3, 3));
  return s;
}

TEST(Style, LengthIsLayersTimesGridSquared) {
  Rng rng(1);
  const auto v = style_vector(stack_of(rng, 4, 8), StyleConfig{});
  EXPECT_EQ(v.size(), 48);
}

TEST(Style, RejectsBadConfig) {
  Rng rng(2);
  const auto s = stack_of(rng, 2, 8);
  EXPECT_THROW(style_vector(s, StyleConfig{}), std::invalid_argument);
  const auto s3 = stack_of(rng, 3, 8);
  StyleConfig dup;
  dup.style_layers = {0, 0, 1};
  EXPECT_THROW(style_vector(s3, dup), std::invalid_argument);
  StyleConfig big;
  big.pool_grid = 9;
  EXPECT_THROW(style_vector(s3, big), std::invalid_argument);
  StyleConfig zero;
  zero.pool_grid = 0;
  EXPECT_THROW(style_vector(s3, zero), std::invalid_argument);
}

TEST(Style, JsonLinesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "mmrank_fe_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "maps.jsonl");
    for (int i = 0; i < 2; ++i) {
      out << R"({"item_id":"it)" << i << R"(","layers":[)";
      for (int l = 0; l < 3; ++l) {
        out << (l ? "," : "") << R"({"c":2,"h":2,"w":2,"data":[1,2,3,4,1,1,1,)" << i + l << "]}";
      }
      out << "]}\n";
    }
  }
  StyleConfig cfg;
  cfg.pool_grid = 1;
  const auto rows = extract_features(read_feature_maps(dir / "maps.jsonl"), cfg);
  write_extracted(dir / "out.jsonl", rows);
  const auto back = read_extracted(dir / "out.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].item_id, "it0");
  EXPECT_EQ(back[0].sty, rows[0].sty);
  EXPECT_EQ(back[1].sem, rows[1].sem);
  EXPECT_EQ(back[0].sty.size(), 3);
  std::filesystem::remove_all(dir);
}

TEST(Style, MalformedLineNamesLine) {
  const auto path = std::filesystem::temp_directory_path() / "mmrank_bad_maps.jsonl";
  {
    std::ofstream out(path);
    out << R"({"item_id":"a","layers":[{"c":1,"h":1,"w":1,"data":[1]}]})" << "\n";
    out << R"({"item_id":"b","layers":[{"c":2,"h":1,"w":1,"data":[1]}]})" << "\n";
  }
  try {
    read_feature_maps(path);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mmrank
