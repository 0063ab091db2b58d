// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/model_config.hpp"

#include "mmrank/text.hpp"

#include <stdexcept>

namespace mmrank {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Tsem: return "tsem";
    case Modality::Sem: return "sem";
    case Modality::Sty: return "sty";
    case Modality::Meta: return "meta";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities) {
    if (modality_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown modality '" + std::string(name) +
                              "' (expected tsem, sem, sty or meta)");
}

std::string_view umcm_name(UmcmKind k) {
  switch (k) {
    case UmcmKind::Att: return "att";
    case UmcmKind::Sen: return "sen";
    case UmcmKind::None: return "none";
  }
  return "?";
}

UmcmKind parse_umcm(std::string_view name) {
  if (name == "att") return UmcmKind::Att;
  if (name == "sen") return UmcmKind::Sen;
  if (name == "none") return UmcmKind::None;
  throw std::invalid_argument("unknown umcm kind '" + std::string(name) +
                              "' (expected att, sen or none)");
}

std::vector<Modality> ModelConfig::enabled_modalities() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities) {
    if (enabled(m)) out.push_back(m);
  }
  return out;
}

void ModelConfig::validate() const {
  if (fusion_dim < 1) throw std::invalid_argument("fusion_dim must be at least 1");
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be at least 1");
  if (expert_count < 1) throw std::invalid_argument("expert_count must be at least 1");
  if (cross_layers < 0) throw std::invalid_argument("cross_layers must be non-negative");
  for (int w : mlp_widths) {
    if (w < 1) throw std::invalid_argument("mlp_widths entries must be positive");
  }
  if (enabled_modalities().empty()) throw std::invalid_argument("modalities: at least one must be enabled");
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("l2_lambda must be non-negative");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
}

KeyValues model_config_to_kv(const ModelConfig& cfg) {
  std::vector<std::string> mods;
  for (Modality m : cfg.enabled_modalities()) mods.emplace_back(modality_name(m));
  std::vector<std::string> widths;
  for (int w : cfg.mlp_widths) widths.push_back(std::to_string(w));
  return {
      {"fusion_dim", std::to_string(cfg.fusion_dim)},
      {"embed_dim", std::to_string(cfg.embed_dim)},
      {"expert_count", std::to_string(cfg.expert_count)},
      {"umcm_kind", std::string(umcm_name(cfg.umcm))},
      {"cross_layers", std::to_string(cfg.cross_layers)},
      {"mlp_widths", join(widths, ",")},
      {"modalities", join(mods, ",")},
      {"l2_lambda", format_double(cfg.l2_lambda)},
      {"learning_rate", format_double(cfg.learning_rate)},
      {"epochs", std::to_string(cfg.epochs)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"seed", std::to_string(cfg.seed)},
  };
}

bool apply_model_key(ModelConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "fusion_dim") {
    cfg.fusion_dim = parse_int(key, value);
  } else if (key == "embed_dim") {
    cfg.embed_dim = parse_int(key, value);
  } else if (key == "expert_count") {
    cfg.expert_count = parse_int(key, value);
  } else if (key == "umcm_kind") {
    cfg.umcm = parse_umcm(trim(value));
  } else if (key == "cross_layers") {
    cfg.cross_layers = parse_int(key, value);
  } else if (key == "mlp_widths") {
    cfg.mlp_widths.clear();
    for (const auto& part : split(value, ',')) {
      if (!part.empty()) cfg.mlp_widths.push_back(parse_int(key, part));
    }
  } else if (key == "modalities") {
    cfg.modality_mask = {false, false, false, false};
    for (const auto& part : split(value, ',')) {
      if (!part.empty()) cfg.modality_mask[static_cast<int>(parse_modality(part))] = true;
    }
  } else if (key == "l2_lambda") {
    cfg.l2_lambda = parse_double(key, value);
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_int(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_int(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint64(key, value);
  } else {
    return false;
  }
  return true;
}

}  // namespace mmrank
