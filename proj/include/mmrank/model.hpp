// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/data_io.hpp"
#include "mmrank/fusion_ops.hpp"
#include "mmrank/model_config.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmrank {

/// Projections and gate owned by one expert tower. proj_w[j] maps the raw
/// vector of the j-th enabled modality to the fusion dimension.
struct ExpertParams {
  std::vector<Eigen::MatrixXd> proj_w;
  std::vector<Eigen::VectorXd> proj_b;
  SenParams<double> sen;
};

struct ModelParams {
  Eigen::MatrixXd interest_emb;            // vocab x embed_dim
  std::vector<Eigen::MatrixXd> profile_emb;
  std::vector<Eigen::MatrixXd> meta_emb;
  Eigen::MatrixXd user_w;                  // d x (embed_dim * (1 + profile fields))
  std::vector<ExpertParams> experts;
  std::vector<Eigen::MatrixXd> cross_w;    // 2d x 2d
  std::vector<Eigen::VectorXd> cross_b;
  std::vector<Eigen::MatrixXd> mlp_w;
  std::vector<Eigen::VectorXd> mlp_b;
  Eigen::VectorXd out_w;
  Eigen::VectorXd out_b;                   // size 1
};

/// Gradients share the parameter layout.
using GradientSet = ModelParams;

/// Calls f(name, tensor_a, tensor_b, ...) for every non-empty tensor in a
/// fixed order. All parameter sets must share the layout of `first`.
template <typename F, typename First, typename... Rest>
void for_each_tensor(const ModelConfig& cfg, const FeatureSchema& schema, F&& f, First& first,
                     Rest&... rest) {
  auto visit = [&](const std::string& name, auto member) {
    auto& head = member(first);
    if (head.size() == 0) return;
    f(name, head, member(rest)...);
  };
  visit("emb.interest", [](auto& p) -> auto& { return p.interest_emb; });
  for (std::size_t i = 0; i < first.profile_emb.size(); ++i) {
    visit("emb.profile." + schema.profile_fields[i].field,
          [i](auto& p) -> auto& { return p.profile_emb[i]; });
  }
  for (std::size_t i = 0; i < first.meta_emb.size(); ++i) {
    visit("emb.meta." + schema.meta_fields[i].field, [i](auto& p) -> auto& { return p.meta_emb[i]; });
  }
  visit("user.w", [](auto& p) -> auto& { return p.user_w; });
  const auto mods = cfg.enabled_modalities();
  for (std::size_t k = 0; k < first.experts.size(); ++k) {
    const std::string prefix = "expert" + std::to_string(k) + ".";
    for (std::size_t j = 0; j < first.experts[k].proj_w.size(); ++j) {
      const std::string m(modality_name(mods[j]));
      visit(prefix + m + ".w", [k, j](auto& p) -> auto& { return p.experts[k].proj_w[j]; });
      visit(prefix + m + ".b", [k, j](auto& p) -> auto& { return p.experts[k].proj_b[j]; });
    }
    visit(prefix + "sen.w1", [k](auto& p) -> auto& { return p.experts[k].sen.w1; });
    visit(prefix + "sen.b1", [k](auto& p) -> auto& { return p.experts[k].sen.b1; });
    visit(prefix + "sen.w2", [k](auto& p) -> auto& { return p.experts[k].sen.w2; });
    visit(prefix + "sen.b2", [k](auto& p) -> auto& { return p.experts[k].sen.b2; });
  }
  for (std::size_t l = 0; l < first.cross_w.size(); ++l) {
    visit("cross" + std::to_string(l) + ".w", [l](auto& p) -> auto& { return p.cross_w[l]; });
    visit("cross" + std::to_string(l) + ".b", [l](auto& p) -> auto& { return p.cross_b[l]; });
  }
  for (std::size_t i = 0; i < first.mlp_w.size(); ++i) {
    visit("mlp" + std::to_string(i) + ".w", [i](auto& p) -> auto& { return p.mlp_w[i]; });
    visit("mlp" + std::to_string(i) + ".b", [i](auto& p) -> auto& { return p.mlp_b[i]; });
  }
  visit("out.w", [](auto& p) -> auto& { return p.out_w; });
  visit("out.b", [](auto& p) -> auto& { return p.out_b; });
}

/// Zero-filled parameters shaped for (cfg, schema).
ModelParams zero_params(const ModelConfig& cfg, const FeatureSchema& schema);

/// Glorot-uniform weights and embeddings, zero biases, drawn from `seed`.
ModelParams init_params(const ModelConfig& cfg, const FeatureSchema& schema, std::uint64_t seed);

ModelParams zeros_like(const ModelParams& params);

Eigen::Index parameter_count(const ModelConfig& cfg, const FeatureSchema& schema,
                             const ModelParams& params);

bool all_finite(const ModelConfig& cfg, const FeatureSchema& schema, const ModelParams& params);

struct Model {
  ModelConfig config;
  FeatureSchema schema;
  ModelParams params;
  /// Directory the model was trained from, used by `predict` to find records.
  std::string data_source;
  /// Interactions at or after this timestamp were held out; absent when training used all.
  std::optional<std::int64_t> split_timestamp;
};

// Records mapped onto vocabulary indices.

struct EncodedUser {
  std::vector<int> interests;
  std::vector<int> profile;  // one index per schema profile field
  std::string cohort;
};

struct EncodedItem {
  std::array<Eigen::VectorXd, 3> dense;  // tsem, sem, sty
  std::vector<int> meta;                 // one index per schema meta field
};

struct EncodedExample {
  std::size_t user = 0;
  std::size_t item = 0;
  double label = 0.0;
};

struct EncodedData {
  std::vector<EncodedUser> users;
  std::vector<EncodedItem> items;
  std::vector<EncodedExample> examples;
};

EncodedUser encode_user(const UserRecord& user, const FeatureSchema& schema);

/// Throws InputError naming the item and modality when an enabled dense
/// modality is missing or has the wrong dimension.
EncodedItem encode_item(const ItemRecord& item, const FeatureSchema& schema, const ModelConfig& cfg);

/// Encodes every user and item of `data` against `schema`, and the given interactions.
EncodedData encode(const Dataset& data, const FeatureSchema& schema, const ModelConfig& cfg,
                   std::span<const Interaction> interactions);

// Forward and backward passes.

struct ExpertTrace {
  Eigen::MatrixXd mods;     // d x J projected modalities
  Eigen::VectorXd weights;  // per-modality weights (attention, SEN gates, or uniform)
  Eigen::VectorXd output;
  SenResult<double> sen;
};

struct ForwardTrace {
  Eigen::VectorXd user_input;
  Eigen::VectorXd v_user;
  std::vector<Eigen::VectorXd> raw;  // per enabled modality
  std::vector<ExpertTrace> experts;
  Eigen::VectorXd gate_weights;
  Eigen::VectorXd v_il;
  std::vector<Eigen::VectorXd> cross;  // x_0 ... x_L
  std::vector<Eigen::VectorXd> mlp_pre;
  std::vector<Eigen::VectorXd> mlp_act;
  double logit = 0.0;
  double prob = 0.5;

  /// Gate-weighted per-modality weights; a probability vector in ATT mode.
  Eigen::VectorXd modality_weights() const;
};

inline constexpr double kProbClamp = 1e-7;

double clamp_prob(double p);

/// Binary cross-entropy of a clamped probability.
double bce_loss(double p_clamped, double y);

/// Pre-projection user block: mean interest row followed by profile rows.
Eigen::VectorXd user_input(const ModelParams& params, const EncodedUser& user);

Eigen::VectorXd user_vector(const ModelParams& params, const EncodedUser& user);

/// Raw vectors of the enabled modalities in fixed order; META concatenates metadata rows.
std::vector<Eigen::VectorXd> raw_modalities(const ModelParams& params, const ModelConfig& cfg,
                                            const EncodedItem& item);

/// Expert k's projections of the raw modalities, as columns of a d x J matrix.
Eigen::MatrixXd modality_list(const ModelParams& params, const std::vector<Eigen::VectorXd>& raw,
                              int expert);

ForwardTrace forward(const ModelParams& params, const ModelConfig& cfg, const EncodedUser& user,
                     const EncodedItem& item);

/// Accumulates scale * d(BCE)/d(theta) into `grads`. The L2 term is added
/// separately by add_l2 since it is defined per batch.
void backward(const ForwardTrace& trace, double y, const ModelParams& params,
              const ModelConfig& cfg, const EncodedUser& user, const EncodedItem& item,
              double scale, GradientSet& grads);

/// Embedding rows touched by a batch, one entry per distinct (table, row).
struct TouchedRows {
  std::vector<int> interest;
  std::vector<std::vector<int>> profile;
  std::vector<std::vector<int>> meta;
};

TouchedRows touched_rows(const EncodedData& data, std::span<const std::size_t> batch,
                         const ModelParams& params);

/// lambda * sum of squared touched embedding rows; adds its gradient when `grads` is set.
double add_l2(const ModelParams& params, const TouchedRows& rows, double lambda, GradientSet* grads);

/// Mean BCE over the batch plus the L2 penalty on touched embedding rows.
/// Fills `grads` (zeroed first) when non-null.
double batch_objective(const ModelParams& params, const ModelConfig& cfg, const EncodedData& data,
                       std::span<const std::size_t> batch, GradientSet* grads);

// Optimisation.

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const ModelParams& params);

void adam_apply(const ModelConfig& cfg, const FeatureSchema& schema, ModelParams& params,
                const GradientSet& grads, AdamState& state, double learning_rate);

struct LossLog {
  std::vector<double> step_losses;
  std::vector<double> epoch_means;
};

struct TrainResult {
  Model model;
  LossLog log;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Minibatch Adam over `interactions`. Initialisation, shuffling and update
/// order all derive from cfg.seed. Throws InputError on an empty set and
/// NumericalError when the loss or parameters become non-finite.
TrainResult train(const Dataset& data, std::span<const Interaction> interactions,
                  const ModelConfig& cfg, const EpochCallback& on_epoch = {});

// Gradient verification.

struct GroupError {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_relative_error = 0.0;
  std::string worst_group;
};

/// Central-difference check of backward on a small seeded batch, with all
/// parameters (biases included) randomised so every path is exercised.
GradCheckReport grad_check(const ModelConfig& cfg, std::uint64_t seed, double step = 1e-5);

/// Small configuration used by `gradcheck` when no config is given.
ModelConfig small_check_config();

}  // namespace mmrank
