// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/model_io.hpp"

#include "mmrank/errors.hpp"
#include "mmrank/text.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace mmrank {

namespace {

constexpr const char* kMagic = "mmrank-model";

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InputError("model file truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

nlohmann::json fields_to_json(const std::vector<FieldVocabulary>& fields) {
  auto j = nlohmann::json::array();
  for (const auto& f : fields) j.push_back({f.field, f.vocab.tokens()});
  return j;
}

std::vector<FieldVocabulary> fields_from_json(const nlohmann::json& j) {
  std::vector<FieldVocabulary> out;
  for (const auto& entry : j) {
    out.push_back({entry.at(0).get<std::string>(),
                   Vocabulary::from_tokens(entry.at(1).get<std::vector<std::string>>())});
  }
  return out;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model to " + path.string());
  const auto& s = model.schema;
  out << kMagic << '\n' << "format_version=" << kModelFormatVersion << '\n';
  for (const auto& [k, v] : model_config_to_kv(model.config)) out << "config." << k << '=' << v << '\n';
  out << "schema.dense_dims=" << s.dense_dims[0] << ',' << s.dense_dims[1] << ',' << s.dense_dims[2] << '\n';
  out << "schema.interests=" << nlohmann::json(s.interests.tokens()).dump() << '\n';
  out << "schema.profile=" << fields_to_json(s.profile_fields).dump() << '\n';
  out << "schema.meta=" << fields_to_json(s.meta_fields).dump() << '\n';
  out << "data_source=" << nlohmann::json(model.data_source).dump() << '\n';
  out << "split_timestamp="
      << (model.split_timestamp ? std::to_string(*model.split_timestamp) : std::string("none")) << '\n';
  out << "end_header\n";

  std::uint32_t count = 0;
  for_each_tensor(model.config, s, [&](const std::string&, const auto&) { ++count; }, model.params);
  put_le<std::uint32_t>(out, count);
  for_each_tensor(
      model.config, s,
      [&](const std::string& name, const auto& t) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
        for (Eigen::Index i = 0; i < t.size(); ++i) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t.data()[i]));
      },
      model.params);
  if (!out) throw InputError("failed writing model to " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read model from " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw InputError(path.string() + ": not a model file");

  Model model;
  bool versioned = false;
  try {
    while (true) {
      if (!std::getline(in, line)) throw InputError(path.string() + ": header not terminated");
      if (line == "end_header") break;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InputError(path.string() + ": malformed header line '" + line + "'");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "format_version") {
        if (parse_int(key, value) != kModelFormatVersion) {
          throw InputError(path.string() + ": unsupported model format version " + value);
        }
        versioned = true;
      } else if (key.rfind("config.", 0) == 0) {
        if (!apply_model_key(model.config, key.substr(7), value)) {
          throw InputError(path.string() + ": unknown config key " + key.substr(7));
        }
      } else if (key == "schema.dense_dims") {
        const auto parts = split(value, ',');
        if (parts.size() != 3) throw InputError(path.string() + ": bad schema.dense_dims");
        for (int i = 0; i < 3; ++i) model.schema.dense_dims[i] = parse_int(key, parts[i]);
      } else if (key == "schema.interests") {
        model.schema.interests =
            Vocabulary::from_tokens(nlohmann::json::parse(value).get<std::vector<std::string>>());
      } else if (key == "schema.profile") {
        model.schema.profile_fields = fields_from_json(nlohmann::json::parse(value));
      } else if (key == "schema.meta") {
        model.schema.meta_fields = fields_from_json(nlohmann::json::parse(value));
      } else if (key == "data_source") {
        model.data_source = nlohmann::json::parse(value).get<std::string>();
      } else if (key == "split_timestamp") {
        if (value != "none") model.split_timestamp = parse_int64(key, value);
      } else {
        throw InputError(path.string() + ": unknown header key " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!versioned) throw InputError(path.string() + ": missing format_version");

  model.params = zero_params(model.config, model.schema);
  std::uint32_t expected = 0;
  for_each_tensor(model.config, model.schema, [&](const std::string&, const auto&) { ++expected; }, model.params);
  const auto count = get_le<std::uint32_t>(in);
  if (count != expected) {
    throw InputError(path.string() + ": holds " + std::to_string(count) + " tensors, config implies " +
                     std::to_string(expected));
  }
  for_each_tensor(
      model.config, model.schema,
      [&](const std::string& name, auto& t) {
        const auto len = get_le<std::uint32_t>(in);
        std::string stored(len, '\0');
        if (!in.read(stored.data(), len)) throw InputError("model file truncated");
        const auto rows = get_le<std::uint64_t>(in);
        const auto cols = get_le<std::uint64_t>(in);
        if (stored != name || rows != static_cast<std::uint64_t>(t.rows()) ||
            cols != static_cast<std::uint64_t>(t.cols())) {
          throw InputError(path.string() + ": tensor '" + stored + "' does not match expected '" + name + "'");
        }
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
      },
      model.params);
  return model;
}

}  // namespace mmrank
