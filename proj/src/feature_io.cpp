// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/feature_extract.hpp"

#include "mmrank/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace mmrank {

namespace {

std::string where(const std::filesystem::path& path, int lineno) {
  return path.string() + ":" + std::to_string(lineno) + ": ";
}

}  // namespace

std::vector<FeatureMapStack<double>> read_feature_maps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read feature maps from " + path.string());
  std::vector<FeatureMapStack<double>> stacks;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FeatureMapStack<double> stack;
      stack.item_id = j.at("item_id").get<std::string>();
      for (const auto& layer : j.at("layers")) {
        const auto data = layer.at("data").get<std::vector<double>>();
        stack.layers.push_back(LayerMap<double>::from_flat(
            layer.at("c").get<int>(), layer.at("h").get<int>(), layer.at("w").get<int>(), data));
        check_layer(stack.layers.back());
      }
      if (stack.layers.empty()) throw std::invalid_argument("item has no layers");
      stacks.push_back(std::move(stack));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where(path, lineno) + e.what());
    } catch (const std::invalid_argument& e) {
      throw InputError(where(path, lineno) + e.what());
    }
  }
  return stacks;
}

std::vector<ExtractedFeatures> extract_features(const std::vector<FeatureMapStack<double>>& stacks,
                                                const StyleConfig& cfg) {
  std::vector<ExtractedFeatures> out;
  out.reserve(stacks.size());
  for (const auto& stack : stacks) {
    try {
      out.push_back({stack.item_id, style_vector(stack, cfg), semantic_pool(stack.layers.back())});
    } catch (const std::invalid_argument& e) {
      throw InputError("item " + stack.item_id + ": " + e.what());
    }
  }
  return out;
}

void write_extracted(const std::filesystem::path& path, const std::vector<ExtractedFeatures>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["item_id"] = row.item_id;
    j["sty"] = std::vector<double>(row.sty.begin(), row.sty.end());
    j["sem"] = std::vector<double>(row.sem.begin(), row.sem.end());
    out << j.dump() << '\n';
  }
}

std::vector<ExtractedFeatures> read_extracted(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<ExtractedFeatures> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto sty = j.at("sty").get<std::vector<double>>();
      const auto sem = j.at("sem").get<std::vector<double>>();
      rows.push_back({j.at("item_id").get<std::string>(),
                      Eigen::Map<const Eigen::VectorXd>(sty.data(), static_cast<Eigen::Index>(sty.size())),
                      Eigen::Map<const Eigen::VectorXd>(sem.data(), static_cast<Eigen::Index>(sem.size()))});
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where(path, lineno) + e.what());
    }
  }
  return rows;
}

}  // namespace mmrank
