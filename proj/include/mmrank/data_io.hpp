// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include "mmrank/model_config.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mmrank {

using FieldTokens = std::vector<std::pair<std::string, std::string>>;

struct UserRecord {
  std::string user_id;
  std::vector<std::string> interests;
  FieldTokens profile;

  bool operator==(const UserRecord&) const = default;
};

/// Item with its modality bundle. Dense modalities are optional per item.
struct ItemRecord {
  std::string item_id;
  std::optional<std::vector<double>> tsem;
  std::optional<std::vector<double>> sem;
  std::optional<std::vector<double>> sty;
  FieldTokens meta;

  const std::optional<std::vector<double>>& dense(Modality m) const;
  std::optional<std::vector<double>>& dense(Modality m);

  bool operator==(const ItemRecord&) const = default;
};

struct Interaction {
  std::string user_id;
  std::string item_id;
  int label = 0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

/// Token vocabulary; index 0 is reserved for out-of-vocabulary tokens and
/// observed tokens get dense indices from 1 in first-seen order.
class Vocabulary {
 public:
  int add(const std::string& token);
  int lookup(std::string_view token) const;
  /// Rows needed in an embedding table, OOV row included.
  int size() const { return static_cast<int>(tokens_.size()) + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct FieldVocabulary {
  std::string field;
  Vocabulary vocab;

  bool operator==(const FieldVocabulary&) const = default;
};

/// Everything the model needs to map records onto parameter rows.
struct FeatureSchema {
  Vocabulary interests;
  std::vector<FieldVocabulary> profile_fields;
  std::vector<FieldVocabulary> meta_fields;
  /// tsem, sem, sty dimensionality; 0 when no item carries the modality.
  std::array<int, 3> dense_dims{0, 0, 0};

  /// Input width of a modality's projection.
  int raw_dim(Modality m, int embed_dim) const;

  bool operator==(const FeatureSchema&) const = default;
};

struct Dataset {
  std::vector<UserRecord> users;
  std::vector<ItemRecord> items;
  std::vector<Interaction> interactions;
  FeatureSchema schema;
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> item_index;

  const UserRecord* find_user(std::string_view id) const;
  const ItemRecord* find_item(std::string_view id) const;
};

/// Validates records and builds indices and vocabularies. Throws InputError
/// for duplicate ids, dangling interaction ids, non-binary labels, non-finite
/// vectors and inconsistent modality dimensions.
Dataset make_dataset(std::vector<UserRecord> users, std::vector<ItemRecord> items,
                     std::vector<Interaction> interactions);

/// Reads users.jsonl, items.jsonl and interactions.tsv from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

void save_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Train is strictly before `boundary`, test at or after it. Order is kept.
std::pair<std::vector<Interaction>, std::vector<Interaction>> temporal_split(
    std::span<const Interaction> interactions, std::int64_t boundary);

/// Recipe for a seeded long-tail dataset with planted per-modality tastes.
struct SynthSpec {
  int n_users = 2000;
  int n_items = 5000;
  int n_interactions = 100000;
  double zipf_exponent = 1.1;
  int tsem_dim = 8;
  int sem_dim = 8;
  int sty_dim = 8;
  // Cohort mix: style-driven, semantic-driven, text-driven, mixed.
  double frac_style = 0.3;
  double frac_semantic = 0.3;
  double frac_text = 0.3;
  double frac_mixed = 0.1;
  double noise = 0.5;
  std::uint64_t seed = 0;
  // Interest topics; a user's taste per modality is the mean of its topics' directions.
  int n_topics = 8;
  int max_interests = 2;
  /// Standard deviation of a single-topic taste logit.
  double signal_scale = 4.0;
  double target_positive_rate = 0.3;
  std::int64_t start_timestamp = 1609459200;  // 2021-01-01T00:00:00Z
  std::int64_t time_span = 31536000;          // one year

  void validate() const;
  bool operator==(const SynthSpec&) const = default;
};

KeyValues synth_spec_to_kv(const SynthSpec& spec);

/// Parses a key = value file. Unknown keys are rejected.
SynthSpec read_synth_spec(const std::filesystem::path& path);

/// Profile field carrying the planted cohort ("style", "semantic", "text", "mixed").
inline constexpr std::string_view kCohortField = "cohort";

/// Generated dataset plus the calibrated intercept it used.
struct SynthResult {
  Dataset data;
  double intercept = 0.0;
};

SynthResult synth_generate(const SynthSpec& spec);

}  // namespace mmrank
