// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/metrics.hpp"

#include "mmrank/errors.hpp"
#include "mmrank/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mmrank {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t r = i; r < j; ++r) {
      if (labels[order[r]] == 1) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::domain_error("AUC undefined: need both positive and negative labels");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

EvalReport evaluate(const Model& model, const Dataset& data, std::span<const Interaction> interactions,
                    int threads) {
  const ModelConfig& cfg = model.config;
  const EncodedData enc = encode(data, model.schema, cfg, interactions);
  const std::size_t n = enc.examples.size();

  std::vector<double> probs(n);
  std::vector<Eigen::VectorXd> mod_w(n);
  std::vector<Eigen::VectorXd> gate_w(n);
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& ex = enc.examples[i];
      const ForwardTrace t = forward(model.params, cfg, enc.users[ex.user], enc.items[ex.item]);
      probs[i] = t.prob;
      mod_w[i] = t.modality_weights();
      gate_w[i] = t.gate_weights;
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    score_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, w * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back(score_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  EvalReport r;
  r.umcm = cfg.umcm;
  for (Modality m : cfg.enabled_modalities()) r.modalities.emplace_back(modality_name(m));
  r.n_interactions = n;
  const auto n_mods = static_cast<Eigen::Index>(r.modalities.size());
  r.modality_weights = Eigen::VectorXd::Zero(n_mods);
  r.expert_gate_weights = Eigen::VectorXd::Zero(cfg.active_experts());
  std::map<std::string, CohortWeights> cohorts;
  std::vector<int> labels(n);
  double bce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = enc.examples[i];
    labels[i] = static_cast<int>(ex.label);
    (labels[i] == 1 ? r.n_pos : r.n_neg) += 1;
    bce += bce_loss(clamp_prob(probs[i]), ex.label);
    r.modality_weights += mod_w[i];
    r.expert_gate_weights += gate_w[i];
    auto& c = cohorts[enc.users[ex.user].cohort];
    if (c.count == 0) {
      c.cohort = enc.users[ex.user].cohort;
      c.weights = Eigen::VectorXd::Zero(n_mods);
    }
    ++c.count;
    c.weights += mod_w[i];
  }
  if (n > 0) {
    const double inv = 1.0 / static_cast<double>(n);
    r.mean_bce = bce * inv;
    r.modality_weights *= inv;
    r.expert_gate_weights *= inv;
  }
  for (auto& [name, c] : cohorts) {
    c.weights /= static_cast<double>(c.count);
    r.by_cohort.push_back(std::move(c));
  }
  if (r.n_pos > 0 && r.n_neg > 0) r.auc = auc(probs, labels);
  return r;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n_interactions"] = r.n_interactions;
  j["n_pos"] = r.n_pos;
  j["n_neg"] = r.n_neg;
  j["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json(nullptr);
  j["auc_defined"] = r.auc.has_value();
  j["mean_bce"] = r.mean_bce;
  j["umcm_kind"] = std::string(umcm_name(r.umcm));
  j["modalities"] = r.modalities;
  j["modality_weights"] = to_std(r.modality_weights);
  auto cohorts = nlohmann::ordered_json::object();
  for (const auto& c : r.by_cohort) {
    nlohmann::ordered_json cj;
    cj["count"] = c.count;
    cj["modality_weights"] = to_std(c.weights);
    cohorts[c.cohort.empty() ? "(none)" : c.cohort] = cj;
  }
  j["by_cohort"] = cohorts;
  j["expert_gate_weights"] = to_std(r.expert_gate_weights);
  return j.dump(2) + "\n";
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine similarity of vectors with different sizes");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine similarity of a zero vector");
  return a.dot(b) / (na * nb);
}

SimilarityReport similarity_report(const std::map<std::string, Eigen::VectorXd>& vectors,
                                   const std::vector<std::string>& queries, int k, std::uint64_t seed) {
  SimilarityReport report;
  std::vector<const std::pair<const std::string, Eigen::VectorXd>*> pool;
  for (const auto& entry : vectors) {
    if (entry.second.norm() == 0.0) {
      report.warnings.push_back("excluded zero vector " + entry.first);
    } else {
      pool.push_back(&entry);
    }
  }
  Rng rng(seed);
  for (const auto& q : queries) {
    const auto it = vectors.find(q);
    if (it == vectors.end()) {
      report.warnings.push_back("unknown query " + q);
      continue;
    }
    if (it->second.norm() == 0.0) {
      report.warnings.push_back("skipped zero-vector query " + q);
      continue;
    }
    std::vector<Neighbor> all;
    all.reserve(pool.size());
    for (const auto* entry : pool) {
      if (entry->first != q) all.push_back({entry->first, cosine_similarity(it->second, entry->second)});
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), all.size());

    QuerySimilarity qs;
    qs.query = q;
    std::vector<Neighbor> sorted = all;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
    qs.nearest.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take));
    for (std::size_t i = 0; i < take; ++i) {  // partial Fisher-Yates
      const std::size_t pick = i + rng.below(all.size() - i);
      std::swap(all[i], all[pick]);
      qs.random.push_back(all[i]);
    }
    auto mean = [](const std::vector<Neighbor>& v) {
      double s = 0.0;
      for (const auto& x : v) s += x.similarity;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    qs.mean_nearest = mean(qs.nearest);
    qs.mean_random = mean(qs.random);
    report.queries.push_back(std::move(qs));
  }
  return report;
}

std::string similarity_to_json(const SimilarityReport& report) {
  auto list = [](const std::vector<Neighbor>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& x : v) arr.push_back({{"id", x.id}, {"similarity", x.similarity}});
    return arr;
  };
  nlohmann::ordered_json j;
  auto qs = nlohmann::ordered_json::array();
  for (const auto& q : report.queries) {
    nlohmann::ordered_json qj;
    qj["query"] = q.query;
    qj["nearest"] = list(q.nearest);
    qj["random"] = list(q.random);
    qj["mean_nearest"] = q.mean_nearest;
    qj["mean_random"] = q.mean_random;
    qs.push_back(qj);
  }
  j["queries"] = qs;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace mmrank
