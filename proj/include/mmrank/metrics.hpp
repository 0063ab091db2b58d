// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmrank {

/// Rank-based (Mann-Whitney) AUC; tied scores share their average rank, so
/// each tied positive/negative pair counts one half. Throws std::domain_error
/// when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct CohortWeights {
  std::string cohort;
  std::size_t count = 0;
  Eigen::VectorXd weights;
};

struct EvalReport {
  std::size_t n_interactions = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> auc;  // empty when the set holds a single class
  double mean_bce = 0.0;      // clamped BCE, no L2 term
  UmcmKind umcm = UmcmKind::Att;
  std::vector<std::string> modalities;
  Eigen::VectorXd modality_weights;  // mean over interactions
  std::vector<CohortWeights> by_cohort;  // sorted by cohort name
  Eigen::VectorXd expert_gate_weights;
};

/// Scores every interaction with `model`. Scoring runs on `threads` workers
/// over fixed contiguous chunks; all reductions run afterwards in input
/// order, so the report does not depend on the thread count.
EvalReport evaluate(const Model& model, const Dataset& data, std::span<const Interaction> interactions,
                    int threads = 1);

/// Pretty-printed JSON with a fixed key order.
std::string report_to_json(const EvalReport& report);

struct Neighbor {
  std::string id;
  double similarity = 0.0;
};

struct QuerySimilarity {
  std::string query;
  std::vector<Neighbor> nearest;
  std::vector<Neighbor> random;
  double mean_nearest = 0.0;
  double mean_random = 0.0;
};

struct SimilarityReport {
  std::vector<QuerySimilarity> queries;
  std::vector<std::string> warnings;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Top-k cosine neighbours of each query, itself excluded, against a seeded
/// random-k baseline.
/// Zero vectors are excluded and reported in `warnings`.
SimilarityReport similarity_report(const std::map<std::string, Eigen::VectorXd>& vectors,
                                   const std::vector<std::string>& queries, int k, std::uint64_t seed);

std::string similarity_to_json(const SimilarityReport& report);

}  // namespace mmrank
