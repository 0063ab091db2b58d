// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/config.hpp"

#include "mmrank/errors.hpp"
#include "mmrank/text.hpp"

#include <stdexcept>

namespace mmrank {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"fusion_dim", "shared dimension of user and modality vectors"},
      {"embed_dim", "width of every categorical embedding table"},
      {"expert_count", "parallel modality-weighting experts"},
      {"umcm_kind", "modality weighting: att (dot-product attention), sen (squeeze-excitation gates), none (plain mean)"},
      {"cross_layers", "number of feature-cross layers (0 disables crosses)"},
      {"mlp_widths", "comma-separated hidden widths of the prediction MLP"},
      {"modalities", "comma-separated enabled modalities from tsem,sem,sty,meta"},
      {"l2_lambda", "L2 penalty on embedding rows touched by a batch"},
      {"learning_rate", "Adam step size"},
      {"epochs", "passes over the training interactions"},
      {"batch_size", "interactions per Adam step"},
      {"seed", "seed for initialisation and shuffling"},
      {"split_timestamp", "train before this unix time, evaluate at or after it ('none' uses everything)"},
      {"threads", "scoring threads for evaluation"},
      {"log_level", "quiet, info or debug"},
  };
  return keys;
}

KeyValues run_config_to_kv(const RunConfig& cfg) {
  KeyValues kv = model_config_to_kv(cfg.model);
  kv.emplace_back("split_timestamp", cfg.split_timestamp ? std::to_string(*cfg.split_timestamp) : "none");
  kv.emplace_back("threads", std::to_string(cfg.threads));
  kv.emplace_back("log_level", cfg.log_level);
  return kv;
}

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (apply_model_key(cfg.model, key, value)) return;
    if (key == "split_timestamp") {
      if (trim(value) == "none") {
        cfg.split_timestamp.reset();
      } else {
        cfg.split_timestamp = parse_int64(key, value);
      }
    } else if (key == "threads") {
      cfg.threads = parse_int(key, value);
      if (cfg.threads < 1) throw std::invalid_argument("threads: must be at least 1");
    } else if (key == "log_level") {
      const std::string level = trim(value);
      if (level != "quiet" && level != "info" && level != "debug") {
        throw std::invalid_argument("log_level: expected quiet, info or debug, got '" + level + "'");
      }
      cfg.log_level = level;
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw InputError(msg.rfind(key, 0) == 0 ? msg : key + ": " + msg);
  }
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file, const KeyValues& overrides,
                       const RunConfig& base) {
  RunConfig cfg = base;
  if (file) {
    if (!std::filesystem::exists(*file)) throw InputError("config file not found: " + file->string());
    KeyValues entries;
    try {
      entries = read_key_values(*file);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    for (const auto& [k, v] : entries) apply_config_key(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
  try {
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return cfg;
}

std::string config_help(const RunConfig& defaults) {
  const KeyValues values = run_config_to_kv(defaults);
  std::string out = "Config keys (file: 'key = value'; flag: --key-with-dashes):\n";
  for (const auto& key : config_keys()) {
    std::string def;
    for (const auto& [k, v] : values) {
      if (k == key.name) def = v;
    }
    out += "  " + key.name + " (default: " + def + ")\n      " + key.help + "\n";
  }
  return out;
}

}  // namespace mmrank
