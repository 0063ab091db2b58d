// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/data_io.hpp"

#include "mmrank/errors.hpp"
#include "mmrank/text.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace mmrank {

int Vocabulary::add(const std::string& token) {
  const auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  tokens_.push_back(token);
  const int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  return id;
}

int Vocabulary::lookup(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? 0 : it->second;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

int FeatureSchema::raw_dim(Modality m, int embed_dim) const {
  if (m == Modality::Meta) return embed_dim * static_cast<int>(meta_fields.size());
  return dense_dims[static_cast<int>(m)];
}

const std::optional<std::vector<double>>& ItemRecord::dense(Modality m) const {
  switch (m) {
    case Modality::Tsem: return tsem;
    case Modality::Sem: return sem;
    case Modality::Sty: return sty;
    default: throw std::invalid_argument("meta is not a dense modality");
  }
}

std::optional<std::vector<double>>& ItemRecord::dense(Modality m) {
  return const_cast<std::optional<std::vector<double>>&>(std::as_const(*this).dense(m));
}

const UserRecord* Dataset::find_user(std::string_view id) const {
  const auto it = user_index.find(std::string(id));
  return it == user_index.end() ? nullptr : &users[it->second];
}

const ItemRecord* Dataset::find_item(std::string_view id) const {
  const auto it = item_index.find(std::string(id));
  return it == item_index.end() ? nullptr : &items[it->second];
}

namespace {

FieldVocabulary& field_vocab(std::vector<FieldVocabulary>& fields, const std::string& name) {
  for (auto& f : fields) {
    if (f.field == name) return f;
  }
  fields.push_back({name, {}});
  return fields.back();
}

constexpr std::array<Modality, 3> kDense{Modality::Tsem, Modality::Sem, Modality::Sty};

}  // namespace

Dataset make_dataset(std::vector<UserRecord> users, std::vector<ItemRecord> items,
                     std::vector<Interaction> interactions) {
  Dataset d;
  d.users = std::move(users);
  d.items = std::move(items);
  d.interactions = std::move(interactions);

  for (std::size_t i = 0; i < d.users.size(); ++i) {
    const auto& u = d.users[i];
    if (u.user_id.empty()) throw InputError("user record with empty user_id");
    if (!d.user_index.emplace(u.user_id, i).second) throw InputError("duplicate user_id " + u.user_id);
    for (const auto& t : u.interests) d.schema.interests.add(t);
    for (const auto& [field, token] : u.profile) field_vocab(d.schema.profile_fields, field).vocab.add(token);
  }

  for (std::size_t i = 0; i < d.items.size(); ++i) {
    const auto& it = d.items[i];
    if (it.item_id.empty()) throw InputError("item record with empty item_id");
    if (!d.item_index.emplace(it.item_id, i).second) throw InputError("duplicate item_id " + it.item_id);
    for (Modality m : kDense) {
      const auto& v = it.dense(m);
      if (!v) continue;
      for (double x : *v) {
        if (!std::isfinite(x)) {
          throw InputError("item " + it.item_id + ": non-finite value in " +
                           std::string(modality_name(m)));
        }
      }
      int& dim = d.schema.dense_dims[static_cast<int>(m)];
      const int actual = static_cast<int>(v->size());
      if (dim == 0) {
        dim = actual;
      } else if (dim != actual) {
        throw InputError("item " + it.item_id + ": " + std::string(modality_name(m)) + " has dimension " +
                         std::to_string(actual) + ", expected " + std::to_string(dim));
      }
    }
    for (const auto& [field, token] : it.meta) field_vocab(d.schema.meta_fields, field).vocab.add(token);
  }

  for (const auto& x : d.interactions) {
    if (!d.user_index.count(x.user_id)) throw InputError("interaction references unknown user " + x.user_id);
    if (!d.item_index.count(x.item_id)) throw InputError("interaction references unknown item " + x.item_id);
    if (x.label != 0 && x.label != 1) {
      throw InputError("interaction " + x.user_id + "/" + x.item_id + ": label must be 0 or 1");
    }
  }
  return d;
}

namespace {

std::string where(const std::filesystem::path& path, int lineno) {
  return path.string() + ":" + std::to_string(lineno) + ": ";
}

FieldTokens read_fields(const nlohmann::ordered_json& j, const char* key) {
  FieldTokens out;
  if (!j.contains(key)) return out;
  for (const auto& [field, token] : j.at(key).items()) out.emplace_back(field, token.get<std::string>());
  return out;
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      f(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where(path, lineno) + e.what());
    } catch (const std::invalid_argument& e) {
      throw InputError(where(path, lineno) + e.what());
    }
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("data directory not found: " + dir.string());

  std::vector<UserRecord> users;
  for_each_line(dir / "users.jsonl", [&](const std::string& line) {
    const auto j = nlohmann::ordered_json::parse(line);
    UserRecord u;
    u.user_id = j.at("user_id").get<std::string>();
    if (j.contains("interests")) u.interests = j.at("interests").get<std::vector<std::string>>();
    u.profile = read_fields(j, "profile");
    users.push_back(std::move(u));
  });

  std::vector<ItemRecord> items;
  for_each_line(dir / "items.jsonl", [&](const std::string& line) {
    const auto j = nlohmann::ordered_json::parse(line);
    ItemRecord it;
    it.item_id = j.at("item_id").get<std::string>();
    for (Modality m : kDense) {
      const std::string key(modality_name(m));
      if (j.contains(key) && !j.at(key).is_null()) it.dense(m) = j.at(key).get<std::vector<double>>();
    }
    it.meta = read_fields(j, "meta");
    items.push_back(std::move(it));
  });

  std::vector<Interaction> interactions;
  for_each_line(dir / "interactions.tsv", [&](const std::string& line) {
    const auto cols = split(line, '\t');
    if (cols.size() != 4) {
      throw std::invalid_argument("expected 4 tab-separated columns, got " + std::to_string(cols.size()));
    }
    interactions.push_back({cols[0], cols[1], parse_int("label", cols[2]), parse_int64("timestamp", cols[3])});
  });
  if (interactions.empty()) throw InputError("no interactions in " + (dir / "interactions.tsv").string());

  return make_dataset(std::move(users), std::move(items), std::move(interactions));
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
  };
  auto fields_json = [](const FieldTokens& fields) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : fields) j[k] = v;
    return j;
  };

  auto users = open("users.jsonl");
  for (const auto& u : data.users) {
    nlohmann::ordered_json j;
    j["user_id"] = u.user_id;
    j["interests"] = u.interests;
    j["profile"] = fields_json(u.profile);
    users << j.dump() << '\n';
  }

  auto items = open("items.jsonl");
  for (const auto& it : data.items) {
    nlohmann::ordered_json j;
    j["item_id"] = it.item_id;
    for (Modality m : kDense) {
      if (it.dense(m)) j[std::string(modality_name(m))] = *it.dense(m);
    }
    j["meta"] = fields_json(it.meta);
    items << j.dump() << '\n';
  }

  auto inter = open("interactions.tsv");
  for (const auto& x : data.interactions) {
    inter << x.user_id << '\t' << x.item_id << '\t' << x.label << '\t' << x.timestamp << '\n';
  }
}

std::pair<std::vector<Interaction>, std::vector<Interaction>> temporal_split(
    std::span<const Interaction> interactions, std::int64_t boundary) {
  std::pair<std::vector<Interaction>, std::vector<Interaction>> out;
  for (const auto& x : interactions) (x.timestamp < boundary ? out.first : out.second).push_back(x);
  return out;
}

}  // namespace mmrank
