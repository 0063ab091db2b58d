// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/errors.hpp"
#include "mmrank/model.hpp"
#include "mmrank/random.hpp"

#include <cmath>
#include <numeric>

namespace mmrank {

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

void adam_apply(const ModelConfig& cfg, const FeatureSchema& schema, ModelParams& params,
                const GradientSet& grads, AdamState& state, double learning_rate) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const double eps = state.epsilon;
  for_each_tensor(
      cfg, schema,
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
        p.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      },
      params, grads, state.m, state.v);
}

TrainResult train(const Dataset& data, std::span<const Interaction> interactions,
                  const ModelConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (interactions.empty()) throw InputError("no interactions to train on");

  TrainResult result;
  Model& model = result.model;
  model.config = cfg;
  model.schema = data.schema;
  model.params = init_params(cfg, data.schema, cfg.seed);

  const EncodedData enc = encode(data, data.schema, cfg, interactions);
  AdamState adam = make_adam_state(model.params);
  Rng shuffler = Rng(cfg.seed).fork(0x5348);

  std::vector<std::size_t> order(enc.examples.size());
  std::iota(order.begin(), order.end(), 0);
  GradientSet grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(order.begin(), order.end());
    double epoch_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const double loss = batch_objective(model.params, cfg, enc, batch, &grads);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", step " +
                             std::to_string(steps + 1));
      }
      adam_apply(cfg, model.schema, model.params, grads, adam, cfg.learning_rate);
      result.log.step_losses.push_back(loss);
      epoch_sum += loss;
      ++steps;
    }
    if (!all_finite(cfg, model.schema, model.params)) {
      throw NumericalError("non-finite parameters after epoch " + std::to_string(epoch + 1));
    }
    const double mean = epoch_sum / static_cast<double>(steps);
    result.log.epoch_means.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

ModelConfig small_check_config() {
  ModelConfig cfg;
  cfg.fusion_dim = 6;
  cfg.embed_dim = 4;
  cfg.expert_count = 2;
  cfg.cross_layers = 2;
  cfg.mlp_widths = {8, 4};
  return cfg;
}

GradCheckReport grad_check(const ModelConfig& cfg, std::uint64_t seed, double step) {
  SynthSpec spec;
  spec.n_users = 6;
  spec.n_items = 8;
  spec.n_interactions = 12;
  spec.tsem_dim = 5;
  spec.sem_dim = 4;
  spec.sty_dim = 6;
  spec.n_topics = 4;
  spec.max_interests = 2;
  spec.seed = seed;
  const Dataset data = synth_generate(spec).data;
  const EncodedData enc = encode(data, data.schema, cfg, data.interactions);

  // Random values everywhere, biases included, so every branch carries signal.
  ModelParams params = zero_params(cfg, data.schema);
  Rng rng = Rng(seed).fork(0x4743);
  for_each_tensor(cfg, data.schema, [&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-0.5, 0.5);
  }, params);

  std::vector<std::size_t> batch(enc.examples.size());
  std::iota(batch.begin(), batch.end(), 0);

  GradientSet analytic;
  batch_objective(params, cfg, enc, batch, &analytic);

  GradCheckReport report;
  for_each_tensor(
      cfg, data.schema,
      [&](const std::string& name, auto& p, const auto& a) {
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double saved = p.data()[i];
          p.data()[i] = saved + step;
          const double up = batch_objective(params, cfg, enc, batch, nullptr);
          p.data()[i] = saved - step;
          const double down = batch_objective(params, cfg, enc, batch, nullptr);
          p.data()[i] = saved;
          const double numeric = (up - down) / (2.0 * step);
          const double ai = a.data()[i];
          diff2 += (ai - numeric) * (ai - numeric);
          a2 += ai * ai;
          n2 += numeric * numeric;
        }
        GroupError ge;
        ge.name = name;
        ge.analytic_norm = std::sqrt(a2);
        ge.numeric_norm = std::sqrt(n2);
        // floor keeps all-zero groups from dividing finite-difference round-off by ~0
        const double denom = std::max(ge.analytic_norm + ge.numeric_norm, 1e-6);
        ge.relative_error = std::sqrt(diff2) / denom;
        if (ge.relative_error > report.max_relative_error || report.groups.empty()) {
          report.max_relative_error = std::max(report.max_relative_error, ge.relative_error);
          report.worst_group = name;
        }
        report.groups.push_back(std::move(ge));
      },
      params, analytic);
  return report;
}

}  // namespace mmrank
