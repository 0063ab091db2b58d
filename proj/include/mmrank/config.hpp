// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/model_config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmrank {

/// Model settings plus run plumbing.
struct RunConfig {
  ModelConfig model;
  /// Train on interactions before this timestamp; evaluate on the rest.
  std::optional<std::int64_t> split_timestamp;
  int threads = 1;
  std::string log_level = "info";

  bool operator==(const RunConfig&) const = default;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

KeyValues run_config_to_kv(const RunConfig& cfg);

/// Sets one key; throws InputError naming the key when it is unknown or its
/// value does not parse.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Starts from `base`, applies the file (when given) and then `overrides`,
/// and validates the result.
RunConfig parse_config(const std::optional<std::filesystem::path>& file, const KeyValues& overrides,
                       const RunConfig& base = {});

/// One line per key with its default, for --help.
std::string config_help(const RunConfig& defaults = {});

}  // namespace mmrank
