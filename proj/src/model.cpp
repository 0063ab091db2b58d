// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/model.hpp"

#include "mmrank/errors.hpp"
#include "mmrank/random.hpp"

#include <algorithm>
#include <cmath>

namespace mmrank {

ModelParams zero_params(const ModelConfig& cfg, const FeatureSchema& schema) {
  cfg.validate();
  const int d = cfg.fusion_dim;
  const int e = cfg.embed_dim;
  const auto mods = cfg.enabled_modalities();
  const auto n_mods = static_cast<Eigen::Index>(mods.size());

  ModelParams p;
  p.interest_emb = Eigen::MatrixXd::Zero(schema.interests.size(), e);
  for (const auto& f : schema.profile_fields) p.profile_emb.push_back(Eigen::MatrixXd::Zero(f.vocab.size(), e));
  if (cfg.enabled(Modality::Meta)) {
    for (const auto& f : schema.meta_fields) p.meta_emb.push_back(Eigen::MatrixXd::Zero(f.vocab.size(), e));
  }
  p.user_w = Eigen::MatrixXd::Zero(d, e * (1 + static_cast<int>(schema.profile_fields.size())));

  for (int k = 0; k < cfg.active_experts(); ++k) {
    ExpertParams ex;
    for (Modality m : mods) {
      const int raw = schema.raw_dim(m, e);
      if (m != Modality::Meta && raw == 0) {
        throw InputError("modality " + std::string(modality_name(m)) +
                         " is enabled but no item provides it");
      }
      ex.proj_w.push_back(Eigen::MatrixXd::Zero(d, raw));
      ex.proj_b.push_back(Eigen::VectorXd::Zero(d));
    }
    if (cfg.umcm == UmcmKind::Sen) {
      const Eigen::Index b = sen_bottleneck(n_mods);
      ex.sen.w1 = Eigen::MatrixXd::Zero(b, n_mods + d);
      ex.sen.b1 = Eigen::VectorXd::Zero(b);
      ex.sen.w2 = Eigen::MatrixXd::Zero(n_mods, b);
      ex.sen.b2 = Eigen::VectorXd::Zero(n_mods);
    }
    p.experts.push_back(std::move(ex));
  }

  const int x_dim = 2 * d;
  for (int l = 0; l < cfg.cross_layers; ++l) {
    p.cross_w.push_back(Eigen::MatrixXd::Zero(x_dim, x_dim));
    p.cross_b.push_back(Eigen::VectorXd::Zero(x_dim));
  }
  int in = x_dim;
  for (int w : cfg.mlp_widths) {
    p.mlp_w.push_back(Eigen::MatrixXd::Zero(w, in));
    p.mlp_b.push_back(Eigen::VectorXd::Zero(w));
    in = w;
  }
  p.out_w = Eigen::VectorXd::Zero(in);
  p.out_b = Eigen::VectorXd::Zero(1);
  return p;
}

namespace {

bool is_bias(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = name.substr(dot + 1);
  return leaf == "b" || leaf == "b1" || leaf == "b2";
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, const FeatureSchema& schema, std::uint64_t seed) {
  ModelParams p = zero_params(cfg, schema);
  Rng rng(seed);
  for_each_tensor(cfg, schema, [&](const std::string& name, auto& t) {
    if (is_bias(name)) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-limit, limit);
  }, p);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  auto zero = [](auto& t) { t.setZero(); };
  zero(z.interest_emb);
  for (auto& t : z.profile_emb) zero(t);
  for (auto& t : z.meta_emb) zero(t);
  zero(z.user_w);
  for (auto& ex : z.experts) {
    for (auto& t : ex.proj_w) zero(t);
    for (auto& t : ex.proj_b) zero(t);
    zero(ex.sen.w1);
    zero(ex.sen.b1);
    zero(ex.sen.w2);
    zero(ex.sen.b2);
  }
  for (auto& t : z.cross_w) zero(t);
  for (auto& t : z.cross_b) zero(t);
  for (auto& t : z.mlp_w) zero(t);
  for (auto& t : z.mlp_b) zero(t);
  zero(z.out_w);
  zero(z.out_b);
  return z;
}

Eigen::Index parameter_count(const ModelConfig& cfg, const FeatureSchema& schema,
                             const ModelParams& params) {
  Eigen::Index n = 0;
  for_each_tensor(cfg, schema, [&](const std::string&, const auto& t) { n += t.size(); }, params);
  return n;
}

bool all_finite(const ModelConfig& cfg, const FeatureSchema& schema, const ModelParams& params) {
  bool ok = true;
  for_each_tensor(cfg, schema, [&](const std::string&, const auto& t) { ok = ok && t.allFinite(); }, params);
  return ok;
}

// Encoding

EncodedUser encode_user(const UserRecord& user, const FeatureSchema& schema) {
  EncodedUser out;
  out.interests.reserve(user.interests.size());
  for (const auto& t : user.interests) out.interests.push_back(schema.interests.lookup(t));
  out.profile.assign(schema.profile_fields.size(), 0);
  for (std::size_t f = 0; f < schema.profile_fields.size(); ++f) {
    for (const auto& [field, token] : user.profile) {
      if (field == schema.profile_fields[f].field) out.profile[f] = schema.profile_fields[f].vocab.lookup(token);
    }
  }
  for (const auto& [field, token] : user.profile) {
    if (field == kCohortField) out.cohort = token;
  }
  return out;
}

EncodedItem encode_item(const ItemRecord& item, const FeatureSchema& schema, const ModelConfig& cfg) {
  EncodedItem out;
  for (Modality m : {Modality::Tsem, Modality::Sem, Modality::Sty}) {
    if (!cfg.enabled(m)) continue;
    const auto& v = item.dense(m);
    const std::string name(modality_name(m));
    if (!v) throw InputError("item " + item.item_id + ": missing modality " + name);
    const int expected = schema.dense_dims[static_cast<int>(m)];
    if (static_cast<int>(v->size()) != expected) {
      throw InputError("item " + item.item_id + ": " + name + " has dimension " +
                       std::to_string(v->size()) + ", model expects " + std::to_string(expected));
    }
    out.dense[static_cast<int>(m)] =
        Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
  }
  out.meta.assign(schema.meta_fields.size(), 0);
  for (std::size_t f = 0; f < schema.meta_fields.size(); ++f) {
    for (const auto& [field, token] : item.meta) {
      if (field == schema.meta_fields[f].field) out.meta[f] = schema.meta_fields[f].vocab.lookup(token);
    }
  }
  return out;
}

EncodedData encode(const Dataset& data, const FeatureSchema& schema, const ModelConfig& cfg,
                   std::span<const Interaction> interactions) {
  EncodedData out;
  out.users.reserve(data.users.size());
  for (const auto& u : data.users) out.users.push_back(encode_user(u, schema));
  out.items.reserve(data.items.size());
  for (const auto& it : data.items) out.items.push_back(encode_item(it, schema, cfg));
  out.examples.reserve(interactions.size());
  for (const auto& x : interactions) {
    const auto u = data.user_index.find(x.user_id);
    const auto i = data.item_index.find(x.item_id);
    if (u == data.user_index.end()) throw InputError("unknown user " + x.user_id);
    if (i == data.item_index.end()) throw InputError("unknown item " + x.item_id);
    out.examples.push_back({u->second, i->second, static_cast<double>(x.label)});
  }
  return out;
}

// Forward

Eigen::VectorXd ForwardTrace::modality_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(experts.front().weights.size());
  for (std::size_t k = 0; k < experts.size(); ++k) w += gate_weights(k) * experts[k].weights;
  return w;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double bce_loss(double p, double y) { return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)); }

Eigen::VectorXd user_input(const ModelParams& params, const EncodedUser& user) {
  const Eigen::Index e = params.interest_emb.cols();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(e * static_cast<Eigen::Index>(1 + params.profile_emb.size()));
  if (!user.interests.empty()) {
    for (int id : user.interests) z.head(e) += params.interest_emb.row(id).transpose();
    z.head(e) /= static_cast<double>(user.interests.size());
  }
  for (std::size_t f = 0; f < params.profile_emb.size(); ++f) {
    z.segment(e * static_cast<Eigen::Index>(f + 1), e) = params.profile_emb[f].row(user.profile[f]).transpose();
  }
  return z;
}

Eigen::VectorXd user_vector(const ModelParams& params, const EncodedUser& user) {
  return params.user_w * user_input(params, user);
}

std::vector<Eigen::VectorXd> raw_modalities(const ModelParams& params, const ModelConfig& cfg,
                                            const EncodedItem& item) {
  std::vector<Eigen::VectorXd> raw;
  for (Modality m : cfg.enabled_modalities()) {
    if (m == Modality::Meta) {
      const Eigen::Index e = cfg.embed_dim;
      Eigen::VectorXd v(e * static_cast<Eigen::Index>(params.meta_emb.size()));
      for (std::size_t f = 0; f < params.meta_emb.size(); ++f) {
        v.segment(e * static_cast<Eigen::Index>(f), e) = params.meta_emb[f].row(item.meta[f]).transpose();
      }
      raw.push_back(std::move(v));
    } else {
      raw.push_back(item.dense[static_cast<int>(m)]);
    }
  }
  return raw;
}

Eigen::MatrixXd modality_list(const ModelParams& params, const std::vector<Eigen::VectorXd>& raw,
                              int expert) {
  const ExpertParams& ex = params.experts[expert];
  Eigen::MatrixXd mods(params.user_w.rows(), static_cast<Eigen::Index>(raw.size()));
  for (std::size_t j = 0; j < raw.size(); ++j) {
    mods.col(static_cast<Eigen::Index>(j)).noalias() = ex.proj_w[j] * raw[j];
    mods.col(static_cast<Eigen::Index>(j)) += ex.proj_b[j];
  }
  return mods;
}

ForwardTrace forward(const ModelParams& params, const ModelConfig& cfg, const EncodedUser& user,
                     const EncodedItem& item) {
  ForwardTrace t;
  t.user_input = user_input(params, user);
  t.v_user = params.user_w * t.user_input;
  t.raw = raw_modalities(params, cfg, item);

  const auto n_experts = static_cast<Eigen::Index>(params.experts.size());
  const Eigen::Index d = t.v_user.size();
  Eigen::MatrixXd outputs(d, n_experts);
  t.experts.resize(params.experts.size());
  for (Eigen::Index k = 0; k < n_experts; ++k) {
    ExpertTrace& ex = t.experts[k];
    ex.mods = modality_list(params, t.raw, static_cast<int>(k));
    const Eigen::Index j = ex.mods.cols();
    switch (cfg.umcm) {
      case UmcmKind::Att: {
        auto r = umcm_att<double>(t.v_user, ex.mods);
        ex.weights = std::move(r.weights);
        ex.output = std::move(r.output);
        break;
      }
      case UmcmKind::Sen:
        ex.sen = umcm_sen<double>(t.v_user, ex.mods, params.experts[k].sen);
        ex.weights = ex.sen.gates;
        ex.output = ex.sen.output;
        break;
      case UmcmKind::None:
        ex.weights = Eigen::VectorXd::Constant(j, 1.0 / static_cast<double>(j));
        ex.output = ex.mods.rowwise().mean();
        break;
    }
    outputs.col(k) = ex.output;
  }
  auto mix = moe_mix<double>(t.v_user, outputs);
  t.gate_weights = std::move(mix.weights);
  t.v_il = std::move(mix.output);

  Eigen::VectorXd x0(2 * d);
  x0 << t.v_user, t.v_il;
  t.cross = cross_stack<double>(x0, params.cross_w, params.cross_b);

  const Eigen::VectorXd* h = &t.cross.back();
  t.mlp_pre.resize(params.mlp_w.size());
  t.mlp_act.resize(params.mlp_w.size());
  for (std::size_t i = 0; i < params.mlp_w.size(); ++i) {
    t.mlp_pre[i] = params.mlp_w[i] * *h + params.mlp_b[i];
    t.mlp_act[i] = t.mlp_pre[i].cwiseMax(0.0);
    h = &t.mlp_act[i];
  }
  t.logit = params.out_w.dot(*h) + params.out_b(0);
  t.prob = sigmoid(t.logit);
  return t;
}

// Backward

void backward(const ForwardTrace& t, double y, const ModelParams& params, const ModelConfig& cfg,
              const EncodedUser& user, const EncodedItem& item, double scale, GradientSet& g) {
  // d/dlogit of BCE(clamp(sigmoid(logit))); zero where the clamp is active
  const bool clamped = t.prob <= kProbClamp || t.prob >= 1.0 - kProbClamp;
  const double d_logit = clamped ? 0.0 : scale * (t.prob - y);

  const Eigen::VectorXd& top = params.mlp_w.empty() ? t.cross.back() : t.mlp_act.back();
  g.out_w += d_logit * top;
  g.out_b(0) += d_logit;
  Eigen::VectorXd dh = d_logit * params.out_w;

  for (std::size_t i = params.mlp_w.size(); i-- > 0;) {
    const Eigen::VectorXd& in = i == 0 ? t.cross.back() : t.mlp_act[i - 1];
    const Eigen::VectorXd d_pre = (t.mlp_pre[i].array() > 0.0).select(dh, 0.0);
    g.mlp_w[i].noalias() += d_pre * in.transpose();
    g.mlp_b[i] += d_pre;
    dh = params.mlp_w[i].transpose() * d_pre;
  }

  const Eigen::VectorXd& x0 = t.cross.front();
  Eigen::VectorXd d_x0 = Eigen::VectorXd::Zero(x0.size());
  for (std::size_t l = params.cross_w.size(); l-- > 0;) {
    auto cg = cross_layer_backward<double>(x0, t.cross[l], params.cross_w[l], params.cross_b[l], dh);
    g.cross_w[l] += cg.d_w;
    g.cross_b[l] += cg.d_b;
    d_x0 += cg.d_x0;
    dh = std::move(cg.d_xl);
  }
  d_x0 += dh;

  const Eigen::Index d = t.v_user.size();
  Eigen::VectorXd d_user = d_x0.head(d);
  const Eigen::VectorXd d_il = d_x0.tail(d);

  const auto n_experts = static_cast<Eigen::Index>(t.experts.size());
  Eigen::MatrixXd outputs(d, n_experts);
  for (Eigen::Index k = 0; k < n_experts; ++k) outputs.col(k) = t.experts[k].output;
  const auto mix = dot_attention_backward<double>(t.v_user, outputs, t.gate_weights, d_il);
  d_user += mix.d_query;

  const auto mods = cfg.enabled_modalities();
  const Eigen::Index e = cfg.embed_dim;
  Eigen::VectorXd d_meta;
  for (Eigen::Index k = 0; k < n_experts; ++k) {
    const ExpertTrace& ex = t.experts[k];
    const ExpertParams& pk = params.experts[k];
    ExpertParams& gk = g.experts[k];
    const Eigen::VectorXd d_out = mix.d_keys.col(k);
    Eigen::MatrixXd d_mods;
    switch (cfg.umcm) {
      case UmcmKind::Att: {
        auto ag = dot_attention_backward<double>(t.v_user, ex.mods, ex.weights, d_out);
        d_user += ag.d_query;
        d_mods = std::move(ag.d_keys);
        break;
      }
      case UmcmKind::Sen: {
        auto sg = umcm_sen_backward<double>(ex.mods, pk.sen, ex.sen, d_out);
        d_user += sg.d_query;
        d_mods = std::move(sg.d_keys);
        gk.sen.w1 += sg.d_params.w1;
        gk.sen.b1 += sg.d_params.b1;
        gk.sen.w2 += sg.d_params.w2;
        gk.sen.b2 += sg.d_params.b2;
        break;
      }
      case UmcmKind::None:
        d_mods = (d_out / static_cast<double>(ex.mods.cols())).replicate(1, ex.mods.cols());
        break;
    }
    for (std::size_t j = 0; j < mods.size(); ++j) {
      const auto col = d_mods.col(static_cast<Eigen::Index>(j));
      gk.proj_w[j].noalias() += col * t.raw[j].transpose();
      gk.proj_b[j] += col;
      if (mods[j] == Modality::Meta && t.raw[j].size() > 0) {
        if (d_meta.size() == 0) d_meta = Eigen::VectorXd::Zero(t.raw[j].size());
        d_meta.noalias() += pk.proj_w[j].transpose() * col;
      }
    }
  }

  for (std::size_t f = 0; f < params.meta_emb.size() && d_meta.size() > 0; ++f) {
    g.meta_emb[f].row(item.meta[f]) += d_meta.segment(e * static_cast<Eigen::Index>(f), e).transpose();
  }

  g.user_w.noalias() += d_user * t.user_input.transpose();
  const Eigen::VectorXd d_input = params.user_w.transpose() * d_user;
  if (!user.interests.empty()) {
    const Eigen::RowVectorXd share =
        d_input.head(e).transpose() / static_cast<double>(user.interests.size());
    for (int id : user.interests) g.interest_emb.row(id) += share;
  }
  for (std::size_t f = 0; f < params.profile_emb.size(); ++f) {
    g.profile_emb[f].row(user.profile[f]) +=
        d_input.segment(e * static_cast<Eigen::Index>(f + 1), e).transpose();
  }
}

// Regularisation and batch objective

namespace {

void sort_unique(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

TouchedRows touched_rows(const EncodedData& data, std::span<const std::size_t> batch,
                         const ModelParams& params) {
  TouchedRows rows;
  rows.profile.resize(params.profile_emb.size());
  rows.meta.resize(params.meta_emb.size());
  for (std::size_t idx : batch) {
    const auto& ex = data.examples[idx];
    const auto& u = data.users[ex.user];
    rows.interest.insert(rows.interest.end(), u.interests.begin(), u.interests.end());
    for (std::size_t f = 0; f < rows.profile.size(); ++f) rows.profile[f].push_back(u.profile[f]);
    const auto& it = data.items[ex.item];
    for (std::size_t f = 0; f < rows.meta.size(); ++f) rows.meta[f].push_back(it.meta[f]);
  }
  sort_unique(rows.interest);
  for (auto& r : rows.profile) sort_unique(r);
  for (auto& r : rows.meta) sort_unique(r);
  return rows;
}

double add_l2(const ModelParams& params, const TouchedRows& rows, double lambda, GradientSet* grads) {
  if (lambda == 0.0) return 0.0;
  double penalty = 0.0;
  auto table = [&](const Eigen::MatrixXd& emb, Eigen::MatrixXd* grad, const std::vector<int>& ids) {
    for (int id : ids) {
      penalty += emb.row(id).squaredNorm();
      if (grad) grad->row(id) += 2.0 * lambda * emb.row(id);
    }
  };
  table(params.interest_emb, grads ? &grads->interest_emb : nullptr, rows.interest);
  for (std::size_t f = 0; f < rows.profile.size(); ++f) {
    table(params.profile_emb[f], grads ? &grads->profile_emb[f] : nullptr, rows.profile[f]);
  }
  for (std::size_t f = 0; f < rows.meta.size(); ++f) {
    table(params.meta_emb[f], grads ? &grads->meta_emb[f] : nullptr, rows.meta[f]);
  }
  return lambda * penalty;
}

double batch_objective(const ModelParams& params, const ModelConfig& cfg, const EncodedData& data,
                       std::span<const std::size_t> batch, GradientSet* grads) {
  if (grads) *grads = zeros_like(params);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t idx : batch) {
    const auto& ex = data.examples[idx];
    const auto& u = data.users[ex.user];
    const auto& it = data.items[ex.item];
    const ForwardTrace t = forward(params, cfg, u, it);
    loss += bce_loss(clamp_prob(t.prob), ex.label);
    if (grads) backward(t, ex.label, params, cfg, u, it, scale, *grads);
  }
  loss *= scale;
  loss += add_l2(params, touched_rows(data, batch, params), cfg.l2_lambda, grads);
  return loss;
}

}  // namespace mmrank
