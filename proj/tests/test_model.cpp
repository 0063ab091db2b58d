// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/errors.hpp"
#include "mmrank/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace mmrank {
namespace {

Dataset small_data(std::uint64_t seed = 1, int interactions = 200) {
  SynthSpec s;
  s.n_users = 20;
  s.n_items = 30;
  s.n_interactions = interactions;
  s.tsem_dim = 5;
  s.sem_dim = 4;
  s.sty_dim = 6;
  s.n_topics = 4;
  s.seed = seed;
  return synth_generate(s).data;
}

ModelConfig tiny_config() {
  ModelConfig cfg = small_check_config();
  cfg.batch_size = 16;
  return cfg;
}

std::vector<std::size_t> all_rows(const EncodedData& enc) {
  std::vector<std::size_t> rows(enc.examples.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

TEST(Forward, ZeroParamsGiveHalf) {
  const Dataset data = small_data();
  for (UmcmKind kind : {UmcmKind::Att, UmcmKind::Sen, UmcmKind::None}) {
    ModelConfig cfg = tiny_config();
    cfg.umcm = kind;
    const ModelParams p = zero_params(cfg, data.schema);
    const auto enc = encode(data, data.schema, cfg, data.interactions);
    const auto t = forward(p, cfg, enc.users[0], enc.items[0]);
    EXPECT_EQ(t.prob, 0.5);
  }
}

TEST(Forward, ProbabilityInOpenInterval) {
  const Dataset data = small_data();
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params(cfg, data.schema, 3);
  const auto enc = encode(data, data.schema, cfg, data.interactions);
  for (const auto& ex : enc.examples) {
    const double prob = forward(p, cfg, enc.users[ex.user], enc.items[ex.item]).prob;
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
  }
  // saturated logits: the clamped value still stays inside the interval
  for_each_tensor(cfg, data.schema, [](const std::string&, auto& t) { t *= 4.0; }, p);
  for (const auto& ex : enc.examples) {
    const double prob = clamp_prob(forward(p, cfg, enc.users[ex.user], enc.items[ex.item]).prob);
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
    EXPECT_TRUE(std::isfinite(bce_loss(prob, 1.0)));
  }
}

TEST(Loss, ClosedForms) {
  EXPECT_NEAR(bce_loss(0.5, 1.0), 0.693147, 1e-6);
  EXPECT_NEAR(bce_loss(0.25, 0.0), 0.287682, 1e-6);
  const double top = clamp_prob(1.0);
  EXPECT_EQ(top, 1.0 - kProbClamp);
  EXPECT_NEAR(bce_loss(top, 1.0), 1e-7, 1e-12);
  EXPECT_EQ(clamp_prob(0.0), kProbClamp);
}

TEST(UserVector, InterestMeanAndEmptyBlock) {
  const Dataset data = small_data();
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params(cfg, data.schema, 4);
  EncodedUser u;
  u.profile.assign(data.schema.profile_fields.size(), 0);
  u.interests = {1};
  const int e = cfg.embed_dim;
  EXPECT_EQ(user_input(p, u).head(e), Eigen::VectorXd(p.interest_emb.row(1).transpose()));
  u.interests = {1, 2};
  const Eigen::VectorXd mean = (p.interest_emb.row(1) + p.interest_emb.row(2)).transpose() / 2.0;
  EXPECT_LT((user_input(p, u).head(e) - mean).cwiseAbs().maxCoeff(), 1e-15);
  u.interests.clear();
  EXPECT_TRUE(user_input(p, u).head(e).isZero(0.0));
  EXPECT_TRUE(user_vector(p, u).allFinite());
  EXPECT_EQ(user_vector(p, u).size(), cfg.fusion_dim);
}

TEST(Modalities, MaskAndLinearity) {
  const Dataset data = small_data();
  ModelConfig cfg = tiny_config();
  cfg.modality_mask = {false, false, true, false};
  ModelParams p = init_params(cfg, data.schema, 5);
  const auto item = encode_item(data.items[0], data.schema, cfg);
  auto raw = raw_modalities(p, cfg, item);
  ASSERT_EQ(raw.size(), 1u);
  for (auto& b : p.experts[0].proj_b) b.setZero();
  const Eigen::MatrixXd once = modality_list(p, raw, 0);
  EXPECT_EQ(once.cols(), 1);
  raw[0] *= 2.0;
  EXPECT_LT((modality_list(p, raw, 0) - 2.0 * once).cwiseAbs().maxCoeff(), 1e-14);
  raw[0].setZero();
  EXPECT_TRUE(modality_list(p, raw, 0).isZero(0.0));
}

TEST(Modalities, NoneIsMeanOfFirstExpert) {
  const Dataset data = small_data();
  ModelConfig cfg = tiny_config();
  cfg.umcm = UmcmKind::None;
  const ModelParams p = init_params(cfg, data.schema, 6);
  EXPECT_EQ(p.experts.size(), 1u);
  const auto enc = encode(data, data.schema, cfg, data.interactions);
  const auto t = forward(p, cfg, enc.users[0], enc.items[0]);
  const Eigen::VectorXd mean = t.experts[0].mods.rowwise().mean();
  EXPECT_LT((t.v_il - mean).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Modalities, MissingEnabledModalityNamed) {
  Dataset data = small_data();
  ItemRecord item = data.items[0];
  item.sty.reset();
  try {
    encode_item(item, data.schema, tiny_config());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("sty"), std::string::npos);
  }
}

TEST(Backward, OutputBiasZeroWhenPredictionExact) {
  const Dataset data = small_data();
  const ModelConfig cfg = tiny_config();
  const ModelParams p = zero_params(cfg, data.schema);
  const auto enc = encode(data, data.schema, cfg, data.interactions);
  const auto t = forward(p, cfg, enc.users[0], enc.items[0]);
  GradientSet g = zeros_like(p);
  backward(t, 0.5, p, cfg, enc.users[0], enc.items[0], 1.0, g);
  EXPECT_EQ(g.out_b(0), 0.0);
}

TEST(Regularisation, TouchedRowsOnly) {
  const Dataset data = small_data();
  ModelConfig cfg = tiny_config();
  ModelParams p = init_params(cfg, data.schema, 7);
  const auto enc = encode(data, data.schema, cfg, data.interactions);
  const std::vector<std::size_t> batch{0};
  const auto rows = touched_rows(enc, batch, p);
  GradientSet g = zeros_like(p);
  const double lambda = 0.25;
  const double penalty = add_l2(p, rows, lambda, &g);
  EXPECT_GT(penalty, 0.0);
  for (Eigen::Index r = 0; r < p.interest_emb.rows(); ++r) {
    const bool touched = std::find(rows.interest.begin(), rows.interest.end(), r) != rows.interest.end();
    const Eigen::VectorXd expected = touched ? Eigen::VectorXd(2.0 * lambda * p.interest_emb.row(r).transpose())
                                             : Eigen::VectorXd::Zero(cfg.embed_dim);
    EXPECT_LT((g.interest_emb.row(r).transpose() - expected).cwiseAbs().maxCoeff(), 1e-15);
  }

  cfg.l2_lambda = 0.0;
  const double plain = batch_objective(p, cfg, enc, batch, nullptr);
  cfg.l2_lambda = 1e-3;
  EXPECT_GT(batch_objective(p, cfg, enc, batch, nullptr), plain);
}

TEST(Adam, FirstStepClosedForm) {
  ModelParams p;
  p.out_b = Eigen::VectorXd::Zero(1);
  p.out_w = Eigen::VectorXd::Zero(2);
  GradientSet g = zeros_like(p);
  g.out_b(0) = 2.0;
  g.out_w << 3.0, -3.0;
  ModelConfig cfg;
  cfg.cross_layers = 0;
  cfg.mlp_widths.clear();
  AdamState st = make_adam_state(p);
  adam_apply(cfg, FeatureSchema{}, p, g, st, 1e-3);
  EXPECT_EQ(st.step, 1);
  EXPECT_NEAR(p.out_b(0), -0.000999999995, 1e-15);
  EXPECT_EQ(p.out_w(0), -p.out_w(1));
}

TEST(Adam, ZeroGradientLeavesParams) {
  const Dataset data = small_data();
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params(cfg, data.schema, 8);
  const ModelParams before = p;
  AdamState st = make_adam_state(p);
  adam_apply(cfg, data.schema, p, zeros_like(p), st, 1e-3);
  bool same = true;
  for_each_tensor(cfg, data.schema, [&](const std::string&, const auto& a, const auto& b) { same = same && a == b; },
                  p, before);
  EXPECT_TRUE(same);
  for_each_tensor(cfg, data.schema, [](const std::string&, const auto& v) { EXPECT_GE(v.minCoeff(), 0.0); }, st.v);
}

bool params_equal(const ModelConfig& cfg, const FeatureSchema& s, const ModelParams& a, const ModelParams& b) {
  bool same = true;
  for_each_tensor(cfg, s, [&](const std::string&, const auto& x, const auto& y) { same = same && x == y; }, a, b);
  return same;
}

TEST(Train, ZeroLearningRateKeepsInit) {
  const Dataset data = small_data();
  ModelConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  const auto r = train(data, data.interactions, cfg, {});
  EXPECT_TRUE(params_equal(cfg, data.schema, r.model.params, init_params(cfg, data.schema, cfg.seed)));
}

TEST(Train, Deterministic) {
  const Dataset data = small_data();
  ModelConfig cfg = tiny_config();
  cfg.epochs = 2;
  const auto a = train(data, data.interactions, cfg, {});
  const auto b = train(data, data.interactions, cfg, {});
  EXPECT_EQ(a.log.step_losses, b.log.step_losses);
  EXPECT_TRUE(params_equal(cfg, data.schema, a.model.params, b.model.params));
  cfg.seed = 1;
  EXPECT_NE(train(data, data.interactions, cfg, {}).log.step_losses, a.log.step_losses);
}

TEST(Train, OneEpochReducesLoss) {
  SynthSpec s;
  s.n_users = 300;
  s.n_items = 500;
  s.n_interactions = 20000;
  const Dataset data = synth_generate(s).data;
  ModelConfig cfg;
  const auto enc = encode(data, data.schema, cfg, data.interactions);
  const auto rows = all_rows(enc);
  const double before = batch_objective(init_params(cfg, data.schema, cfg.seed), cfg, enc, rows, nullptr);
  const auto r = train(data, data.interactions, cfg, {});
  EXPECT_LT(batch_objective(r.model.params, cfg, enc, rows, nullptr), before);
}

TEST(Train, RejectsEmptyInteractions) {
  const Dataset data = small_data();
  EXPECT_THROW(train(data, {}, tiny_config(), {}), InputError);
}

TEST(GradCheck, EveryVariant) {
  for (UmcmKind kind : {UmcmKind::Att, UmcmKind::Sen, UmcmKind::None}) {
    for (int layers : {0, 2}) {
      for (int experts : {1, 2}) {
        ModelConfig cfg = small_check_config();
        cfg.umcm = kind;
        cfg.cross_layers = layers;
        cfg.expert_count = experts;
        const auto rep = grad_check(cfg, 7);
        EXPECT_LE(rep.max_relative_error, 1e-4)
            << umcm_name(kind) << " L=" << layers << " K=" << experts << " worst " << rep.worst_group;
      }
    }
  }
}

TEST(GradCheck, SubsetMasksAndNoHiddenLayers) {
  ModelConfig cfg = small_check_config();
  cfg.modality_mask = {false, true, true, false};
  cfg.mlp_widths.clear();
  EXPECT_LE(grad_check(cfg, 3).max_relative_error, 1e-4);
  cfg.modality_mask = {false, false, false, true};
  cfg.umcm = UmcmKind::Sen;
  EXPECT_LE(grad_check(cfg, 4).max_relative_error, 1e-4);
}

TEST(Params, CountAndFinite) {
  const Dataset data = small_data();
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params(cfg, data.schema, 1);
  EXPECT_GT(parameter_count(cfg, data.schema, p), 0);
  EXPECT_TRUE(all_finite(cfg, data.schema, p));
  // biases start at zero
  EXPECT_TRUE(p.out_b.isZero(0.0));
  EXPECT_TRUE(p.cross_b[0].isZero(0.0));
}

}  // namespace
}  // namespace mmrank
