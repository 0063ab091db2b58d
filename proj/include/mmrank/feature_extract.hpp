// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmrank {

template <typename Scalar>
using ChannelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One convolutional output. Row j holds channel j with its H*W positions
/// flattened row-major.
template <typename Scalar>
struct LayerMap {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  ChannelMatrix<Scalar> values;

  Eigen::Index channels() const { return values.rows(); }

  static LayerMap from_flat(Eigen::Index c, Eigen::Index h, Eigen::Index w,
                            std::span<const Scalar> data) {
    if (c <= 0 || h <= 0 || w <= 0) {
      throw std::invalid_argument("layer map dimensions must be positive");
    }
    if (static_cast<Eigen::Index>(data.size()) != c * h * w) {
      throw std::invalid_argument("layer map has " + std::to_string(data.size()) +
                                  " values, expected " + std::to_string(c * h * w));
    }
    LayerMap layer;
    layer.height = h;
    layer.width = w;
    layer.values = Eigen::Map<const ChannelMatrix<Scalar>>(data.data(), c, h * w);
    return layer;
  }
};

/// Layer outputs for one item, ordered shallow to deep.
template <typename Scalar>
struct FeatureMapStack {
  std::string item_id;
  std::vector<LayerMap<Scalar>> layers;
};

struct StyleConfig {
  std::vector<int> style_layers{0, 1, 2};
  int pool_grid = 4;
};

template <typename Scalar>
void check_layer(const LayerMap<Scalar>& layer) {
  if (layer.channels() == 0 || layer.height == 0 || layer.width == 0) {
    throw std::invalid_argument("empty layer map");
  }
  if (layer.values.cols() != layer.height * layer.width) {
    throw std::invalid_argument("layer map values do not match H*W");
  }
  if (!layer.values.allFinite()) {
    throw std::invalid_argument("layer map contains non-finite values");
  }
}

/// Channel-wise Gram matrix, G(j,k) = mean over positions of F_j * F_k.
/// Only the lower triangle is accumulated and then mirrored, so the result is
/// exactly symmetric.
template <typename Scalar>
MatrixX<Scalar> gram_matrix(const LayerMap<Scalar>& layer) {
  check_layer(layer);
  const Eigen::Index c = layer.channels();
  MatrixX<Scalar> lower = MatrixX<Scalar>::Zero(c, c);
  lower.template selfadjointView<Eigen::Lower>().rankUpdate(layer.values);
  MatrixX<Scalar> gram = lower.template selfadjointView<Eigen::Lower>();
  gram /= static_cast<Scalar>(layer.height * layer.width);
  return gram;
}

/// Spatial mean of every channel.
template <typename Scalar>
VectorX<Scalar> semantic_pool(const LayerMap<Scalar>& layer) {
  check_layer(layer);
  return layer.values.rowwise().mean();
}

/// Start offsets of a partition of n into `parts` contiguous blocks; the
/// first n % parts blocks are one longer. Returns parts+1 offsets.
inline std::vector<Eigen::Index> block_offsets(Eigen::Index n, Eigen::Index parts) {
  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(parts) + 1, 0);
  const Eigen::Index base = n / parts;
  const Eigen::Index extra = n % parts;
  for (Eigen::Index b = 0; b < parts; ++b) {
    offsets[b + 1] = offsets[b] + base + (b < extra ? 1 : 0);
  }
  return offsets;
}

/// Block max-pool of a square matrix down to grid x grid.
template <typename Scalar>
MatrixX<Scalar> pool_gram(const MatrixX<Scalar>& gram, int grid) {
  const Eigen::Index c = gram.rows();
  if (gram.cols() != c) throw std::invalid_argument("pool_gram expects a square matrix");
  if (grid < 1) throw std::invalid_argument("pool grid must be at least 1");
  if (grid > c) {
    throw std::invalid_argument("pool grid " + std::to_string(grid) + " exceeds channel count " +
                                std::to_string(c));
  }
  const auto off = block_offsets(c, grid);
  MatrixX<Scalar> pooled(grid, grid);
  for (int bi = 0; bi < grid; ++bi) {
    for (int bj = 0; bj < grid; ++bj) {
      pooled(bi, bj) = gram.block(off[bi], off[bj], off[bi + 1] - off[bi], off[bj + 1] - off[bj])
                           .maxCoeff();
    }
  }
  return pooled;
}

template <typename Scalar>
void validate_style_config(const FeatureMapStack<Scalar>& stack, const StyleConfig& cfg) {
  if (cfg.pool_grid < 1) throw std::invalid_argument("pool grid must be at least 1");
  if (cfg.style_layers.empty()) throw std::invalid_argument("no style layers selected");
  std::vector<int> sorted = cfg.style_layers;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("style layers must be distinct");
  }
  const int n_layers = static_cast<int>(stack.layers.size());
  if (sorted.front() < 0 || sorted.back() >= n_layers) {
    throw std::invalid_argument("style layer index out of range: stack has " +
                                std::to_string(n_layers) + " layers");
  }
}

/// Concatenated, row-major flattened, pooled Grams of the selected layers.
template <typename Scalar>
VectorX<Scalar> style_vector(const FeatureMapStack<Scalar>& stack, const StyleConfig& cfg) {
  validate_style_config(stack, cfg);
  const Eigen::Index cell = static_cast<Eigen::Index>(cfg.pool_grid) * cfg.pool_grid;
  VectorX<Scalar> out(cell * static_cast<Eigen::Index>(cfg.style_layers.size()));
  Eigen::Index pos = 0;
  for (int idx : cfg.style_layers) {
    const MatrixX<Scalar> pooled = pool_gram(gram_matrix(stack.layers[idx]), cfg.pool_grid);
    for (Eigen::Index r = 0; r < pooled.rows(); ++r) {
      for (Eigen::Index c = 0; c < pooled.cols(); ++c) out(pos++) = pooled(r, c);
    }
  }
  return out;
}

// Feature-map container (JSON Lines) and extraction output.

std::vector<FeatureMapStack<double>> read_feature_maps(const std::filesystem::path& path);

struct ExtractedFeatures {
  std::string item_id;
  Eigen::VectorXd sty;
  Eigen::VectorXd sem;
};

/// Runs style_vector and semantic_pool(last layer) over every stack.
std::vector<ExtractedFeatures> extract_features(const std::vector<FeatureMapStack<double>>& stacks,
                                                const StyleConfig& cfg);

void write_extracted(const std::filesystem::path& path, const std::vector<ExtractedFeatures>& rows);

std::vector<ExtractedFeatures> read_extracted(const std::filesystem::path& path);

}  // namespace mmrank
