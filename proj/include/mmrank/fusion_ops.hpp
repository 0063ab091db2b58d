// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/feature_extract.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace mmrank {

// Building blocks of the fusion network and their reverse-mode
// counterparts. Modality (or expert) vectors are the columns of a d x J matrix.

template <typename Scalar>
VectorX<Scalar> softmax(const VectorX<Scalar>& scores) {
  const Scalar shift = scores.maxCoeff();
  VectorX<Scalar> e = (scores.array() - shift).exp().matrix();
  return e / e.sum();
}

/// Pullback of softmax: given p = softmax(s) and dL/dp, returns dL/ds.
template <typename Scalar>
VectorX<Scalar> softmax_backward(const VectorX<Scalar>& probs, const VectorX<Scalar>& d_probs) {
  return probs.cwiseProduct((d_probs.array() - probs.dot(d_probs)).matrix());
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
struct AttentionResult {
  VectorX<Scalar> output;
  VectorX<Scalar> weights;
};

template <typename Scalar>
struct AttentionGrad {
  VectorX<Scalar> d_query;
  MatrixX<Scalar> d_keys;
};

/// weights = softmax(keys^T query), output = keys * weights.
template <typename Scalar>
AttentionResult<Scalar> dot_attention(const VectorX<Scalar>& query, const MatrixX<Scalar>& keys) {
  if (keys.cols() < 1) throw std::invalid_argument("attention needs at least one key");
  if (keys.rows() != query.size()) throw std::invalid_argument("attention query/key size mismatch");
  AttentionResult<Scalar> r;
  r.weights = softmax<Scalar>(keys.transpose() * query);
  r.output = keys * r.weights;
  return r;
}

template <typename Scalar>
AttentionGrad<Scalar> dot_attention_backward(const VectorX<Scalar>& query,
                                             const MatrixX<Scalar>& keys,
                                             const VectorX<Scalar>& weights,
                                             const VectorX<Scalar>& d_output) {
  const VectorX<Scalar> d_weights = keys.transpose() * d_output;
  const VectorX<Scalar> d_scores = softmax_backward<Scalar>(weights, d_weights);
  AttentionGrad<Scalar> g;
  g.d_query = keys * d_scores;
  g.d_keys = d_output * weights.transpose() + query * d_scores.transpose();
  return g;
}

/// User-aware modality attention: the user vector scores each projected
/// modality by dot product.
template <typename Scalar>
AttentionResult<Scalar> umcm_att(const VectorX<Scalar>& v_user, const MatrixX<Scalar>& mods) {
  return dot_attention<Scalar>(v_user, mods);
}

/// Expert aggregation gate: softmax over v_user . o_k, blending expert outputs.
template <typename Scalar>
AttentionResult<Scalar> moe_mix(const VectorX<Scalar>& v_user, const MatrixX<Scalar>& expert_outputs) {
  return dot_attention<Scalar>(v_user, expert_outputs);
}

// Squeeze-and-excitation gating over modalities.

inline Eigen::Index sen_bottleneck(Eigen::Index modalities) { return (modalities + 1) / 2 + 1; }

/// w1: B x (J + d), w2: J x B.
template <typename Scalar>
struct SenParams {
  MatrixX<Scalar> w1;
  VectorX<Scalar> b1;
  MatrixX<Scalar> w2;
  VectorX<Scalar> b2;
};

template <typename Scalar>
struct SenResult {
  VectorX<Scalar> output;
  VectorX<Scalar> gates;
  VectorX<Scalar> input;
  VectorX<Scalar> hidden_pre;
  VectorX<Scalar> hidden;
};

template <typename Scalar>
struct SenGrad {
  VectorX<Scalar> d_query;
  MatrixX<Scalar> d_keys;
  SenParams<Scalar> d_params;
};

template <typename Scalar>
SenResult<Scalar> umcm_sen(const VectorX<Scalar>& v_user, const MatrixX<Scalar>& mods,
                           const SenParams<Scalar>& p) {
  const Eigen::Index d = mods.rows();
  const Eigen::Index j = mods.cols();
  if (j < 1) throw std::invalid_argument("SEN gating needs at least one modality");
  if (v_user.size() != d) throw std::invalid_argument("SEN user/modality size mismatch");
  if (p.w1.cols() != j + d || p.w2.rows() != j || p.w2.cols() != p.w1.rows()) {
    throw std::invalid_argument("SEN parameter shapes do not match inputs");
  }
  SenResult<Scalar> r;
  r.input.resize(j + d);
  r.input.head(j) = mods.colwise().mean().transpose();
  r.input.tail(d) = v_user;
  r.hidden_pre = p.w1 * r.input + p.b1;
  r.hidden = r.hidden_pre.cwiseMax(Scalar(0));
  const VectorX<Scalar> logits = p.w2 * r.hidden + p.b2;
  r.gates = logits.unaryExpr([](Scalar x) { return sigmoid<Scalar>(x); });
  r.output = mods * r.gates;
  return r;
}

template <typename Scalar>
SenGrad<Scalar> umcm_sen_backward(const MatrixX<Scalar>& mods, const SenParams<Scalar>& p,
                                  const SenResult<Scalar>& r, const VectorX<Scalar>& d_output) {
  const Eigen::Index d = mods.rows();
  const Eigen::Index j = mods.cols();
  SenGrad<Scalar> g;
  g.d_keys = d_output * r.gates.transpose();
  const VectorX<Scalar> d_gates = mods.transpose() * d_output;
  const VectorX<Scalar> d_logits =
      d_gates.cwiseProduct(r.gates.cwiseProduct((Scalar(1) - r.gates.array()).matrix()));
  g.d_params.w2 = d_logits * r.hidden.transpose();
  g.d_params.b2 = d_logits;
  const VectorX<Scalar> d_hidden = p.w2.transpose() * d_logits;
  const VectorX<Scalar> d_pre =
      (r.hidden_pre.array() > Scalar(0)).select(d_hidden, VectorX<Scalar>::Zero(d_hidden.size()));
  g.d_params.w1 = d_pre * r.input.transpose();
  g.d_params.b1 = d_pre;
  const VectorX<Scalar> d_input = p.w1.transpose() * d_pre;
  g.d_query = d_input.tail(d);
  // squeeze is a column mean
  g.d_keys.rowwise() += (d_input.head(j) / static_cast<Scalar>(d)).transpose();
  return g;
}

// Bounded-degree feature crosses.

/// x_{l+1} = x0 .* (W xl + b) + xl
template <typename Scalar>
VectorX<Scalar> cross_layer(const VectorX<Scalar>& x0, const VectorX<Scalar>& xl,
                            const MatrixX<Scalar>& w, const VectorX<Scalar>& b) {
  if (x0.size() != xl.size() || w.rows() != xl.size() || w.cols() != xl.size() ||
      b.size() != xl.size()) {
    throw std::invalid_argument("cross layer shape mismatch");
  }
  return x0.cwiseProduct(w * xl + b) + xl;
}

template <typename Scalar>
struct CrossGrad {
  VectorX<Scalar> d_x0;
  VectorX<Scalar> d_xl;
  MatrixX<Scalar> d_w;
  VectorX<Scalar> d_b;
};

template <typename Scalar>
CrossGrad<Scalar> cross_layer_backward(const VectorX<Scalar>& x0, const VectorX<Scalar>& xl,
                                       const MatrixX<Scalar>& w, const VectorX<Scalar>& b,
                                       const VectorX<Scalar>& d_out) {
  CrossGrad<Scalar> g;
  const VectorX<Scalar> d_inner = d_out.cwiseProduct(x0);
  g.d_x0 = d_out.cwiseProduct(w * xl + b);
  g.d_xl = d_out + w.transpose() * d_inner;
  g.d_w = d_inner * xl.transpose();
  g.d_b = d_inner;
  return g;
}

/// Applies every layer in order; returns x_0 ... x_L.
template <typename Scalar>
std::vector<VectorX<Scalar>> cross_stack(const VectorX<Scalar>& x0,
                                         const std::vector<MatrixX<Scalar>>& ws,
                                         const std::vector<VectorX<Scalar>>& bs) {
  if (ws.size() != bs.size()) throw std::invalid_argument("cross weight/bias count mismatch");
  std::vector<VectorX<Scalar>> xs;
  xs.reserve(ws.size() + 1);
  xs.push_back(x0);
  for (std::size_t l = 0; l < ws.size(); ++l) xs.push_back(cross_layer<Scalar>(x0, xs.back(), ws[l], bs[l]));
  return xs;
}

}  // namespace mmrank
