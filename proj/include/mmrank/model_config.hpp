// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmrank {

/// Item modalities in their fixed processing order.
enum class Modality { Tsem = 0, Sem = 1, Sty = 2, Meta = 3 };

inline constexpr std::array<Modality, 4> kAllModalities{Modality::Tsem, Modality::Sem,
                                                         Modality::Sty, Modality::Meta};

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);

enum class UmcmKind { Att, Sen, None };

std::string_view umcm_name(UmcmKind k);
UmcmKind parse_umcm(std::string_view name);

struct ModelConfig {
  int fusion_dim = 32;
  int embed_dim = 8;
  int expert_count = 3;
  UmcmKind umcm = UmcmKind::Att;
  int cross_layers = 2;
  std::vector<int> mlp_widths{64, 32};
  std::array<bool, 4> modality_mask{true, true, true, true};
  double l2_lambda = 1e-3;
  double learning_rate = 1e-3;
  int epochs = 1;
  int batch_size = 256;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool enabled(Modality m) const { return modality_mask[static_cast<int>(m)]; }
  std::vector<Modality> enabled_modalities() const;
  /// Expert towers that own parameters; the unweighted ablation uses only expert 0.
  int active_experts() const { return umcm == UmcmKind::None ? 1 : expert_count; }

  bool operator==(const ModelConfig&) const = default;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// The model keys as ordered text pairs, the form used by config files and
/// the model container header.
KeyValues model_config_to_kv(const ModelConfig& cfg);

/// Sets one key. Returns false for keys that are not model keys; throws
/// std::invalid_argument when the value does not parse.
bool apply_model_key(ModelConfig& cfg, std::string_view key, std::string_view value);

}  // namespace mmrank
