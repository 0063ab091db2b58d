// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/model.hpp"

#include <filesystem>

namespace mmrank {

inline constexpr int kModelFormatVersion = 1;

/// Writes a model container: a text header (magic line, format version,
/// config keys, vocabularies) terminated by "end_header", followed by every
/// parameter tensor as a name, its shape, and little-endian 64-bit floats.
void save_model(const Model& model, const std::filesystem::path& path);

/// Throws InputError on a bad magic line, unsupported version, or tensors
/// whose names or shapes disagree with the header's config and schema.
Model load_model(const std::filesystem::path& path);

}  // namespace mmrank
