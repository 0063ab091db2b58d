// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/cli.hpp"

#include "mmrank/config.hpp"
#include "mmrank/data_io.hpp"
#include "mmrank/errors.hpp"
#include "mmrank/feature_extract.hpp"
#include "mmrank/metrics.hpp"
#include "mmrank/model_io.hpp"
#include "mmrank/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

namespace mmrank {

namespace {

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}
  void set_level(const std::string& level) { level_ = level == "quiet" ? 0 : level == "debug" ? 2 : 1; }
  void info(const std::string& msg) const {
    if (level_ >= 1) err_ << "[info] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= 2) err_ << "[debug] " << msg << '\n';
  }
  void warn(const std::string& msg) const {
    if (level_ >= 1) err_ << "[warn] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  int level_ = 1;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Registers one --flag per config key; values stay strings until the config is resolved.
struct ConfigFlags {
  std::optional<std::string> file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App& app, const RunConfig& defaults, bool with_file) {
    if (with_file) app.add_option("--config", file, "key = value config file");
    const KeyValues def = run_config_to_kv(defaults);
    for (const auto& key : config_keys()) {
      std::string dv;
      for (const auto& [k, v] : def) {
        if (k == key.name) dv = v;
      }
      options.emplace_back(key.name, app.add_option(dashed(key.name), values[key.name],
                                                    key.help + " (default: " + dv + ")"));
    }
  }

  KeyValues overrides() const {
    KeyValues kv;
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) kv.emplace_back(name, values.at(name));
    }
    return kv;
  }

  RunConfig resolve(const RunConfig& base, Log& log) const {
    RunConfig cfg = parse_config(file ? std::optional<std::filesystem::path>(*file) : std::nullopt,
                                 overrides(), base);
    log.set_level(cfg.log_level);
    std::string echo = "resolved config:";
    for (const auto& [k, v] : run_config_to_kv(cfg)) echo += " " + k + "=" + v;
    log.info(echo);
    return cfg;
  }
};

std::vector<int> parse_layers(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_int("layers", part));
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Log log(err);
  CLI::App app{"Multi-modal ranking with user-aware modality weighting"};
  app.name("mmrank");
  app.require_subcommand(1);

  // extract-style
  std::string maps_path, extract_out, layers_text = "0,1,2";
  int grid = 4;
  auto* extract = app.add_subcommand("extract-style", "Gram-matrix style and mean-pooled semantic vectors from feature maps");
  extract->add_option("--maps", maps_path, "feature-map JSON Lines file")->required();
  extract->add_option("--grid", grid, "pool each Gram matrix to grid x grid (default: 4)");
  extract->add_option("--layers", layers_text, "comma-separated style layer indices (default: 0,1,2)");
  extract->add_option("--out", extract_out, "output JSON Lines path")->required();

  // synth
  std::optional<std::string> spec_path;
  std::string synth_dir;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset with planted modality preferences");
  synth->add_option("--spec", spec_path, "key = value synth spec file (defaults used when omitted)");
  synth->add_option("--out-dir", synth_dir, "directory for users.jsonl, items.jsonl, interactions.tsv")->required();
  synth->add_option("--seed", synth_seed, "overrides the spec seed");

  // train
  std::string train_data, train_out;
  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--out", train_out, "model file to write")->required();
  train_flags.add(*train_cmd, RunConfig{}, true);
  train_cmd->footer(config_help());

  // gradcheck
  RunConfig check_base;
  check_base.model = small_check_config();
  ConfigFlags check_flags;
  auto* check = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  check_flags.add(*check, check_base, true);
  check->footer(config_help(check_base));

  // evaluate
  std::string eval_model, eval_data, eval_report;
  std::optional<std::string> eval_split;
  int eval_threads = 1;
  auto* eval = app.add_subcommand("evaluate", "AUC, BCE and modality-weight report");
  eval->add_option("--model", eval_model, "model file")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--report", eval_report, "JSON report path")->required();
  eval->add_option("--split-timestamp", eval_split,
                   "evaluate interactions at or after this time; 'none' for all (default: the model's training split)");
  eval->add_option("--threads", eval_threads, "scoring threads (default: 1)");

  // predict
  std::string pred_model, pred_user, pred_items;
  std::optional<std::string> pred_data;
  auto* predict = app.add_subcommand("predict", "Score items for one user, highest first");
  predict->add_option("--model", pred_model, "model file")->required();
  predict->add_option("--user", pred_user, "user id")->required();
  predict->add_option("--items", pred_items, "comma-separated item ids")->required();
  predict->add_option("--data", pred_data, "dataset directory (default: the one the model was trained on)");

  // similarity
  std::string sim_vectors, sim_out, sim_field = "sty";
  std::optional<std::string> sim_queries;
  int sim_k = 5;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("similarity", "Cosine nearest-neighbour vs random baseline over extracted vectors");
  sim->add_option("--vectors", sim_vectors, "extract-style output file")->required();
  sim->add_option("--field", sim_field, "sty or sem (default: sty)");
  sim->add_option("--queries", sim_queries, "comma-separated item ids (default: all)");
  sim->add_option("--k", sim_k, "neighbours per query (default: 5)");
  sim->add_option("--seed", sim_seed, "seed for the random baseline (default: 0)");
  sim->add_option("--out", sim_out, "JSON report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (*extract) {
      StyleConfig cfg;
      cfg.pool_grid = grid;
      cfg.style_layers = parse_layers(layers_text);
      const auto stacks = read_feature_maps(maps_path);
      write_extracted(extract_out, extract_features(stacks, cfg));
      log.info("extracted " + std::to_string(stacks.size()) + " items to " + extract_out);
    } else if (*synth) {
      SynthSpec spec = spec_path ? read_synth_spec(*spec_path) : SynthSpec{};
      if (synth_seed) spec.seed = *synth_seed;
      std::string echo = "synth spec:";
      for (const auto& [k, v] : synth_spec_to_kv(spec)) echo += " " + k + "=" + v;
      log.info(echo);
      const SynthResult result = synth_generate(spec);
      save_dataset(result.data, synth_dir);
      std::size_t pos = 0;
      for (const auto& x : result.data.interactions) pos += static_cast<std::size_t>(x.label);
      log.info("wrote " + std::to_string(result.data.interactions.size()) + " interactions to " + synth_dir +
               " (intercept " + format_double(result.intercept) + ", positive rate " +
               format_double(static_cast<double>(pos) / static_cast<double>(result.data.interactions.size())) +
               ")");
    } else if (*train_cmd) {
      const RunConfig cfg = train_flags.resolve(RunConfig{}, log);
      const Dataset data = load_dataset(train_data);
      std::vector<Interaction> train_set =
          cfg.split_timestamp ? temporal_split(data.interactions, *cfg.split_timestamp).first : data.interactions;
      log.info("training on " + std::to_string(train_set.size()) + " interactions");
      TrainResult result = train(data, train_set, cfg.model, [&](int epoch, double loss) {
        log.info("epoch " + std::to_string(epoch) + " mean loss " + format_double(loss));
      });
      result.model.data_source = std::filesystem::absolute(train_data).lexically_normal().string();
      result.model.split_timestamp = cfg.split_timestamp;
      save_model(result.model, train_out);
      log.info("saved model with " +
               std::to_string(parameter_count(cfg.model, result.model.schema, result.model.params)) +
               " parameters to " + train_out);
    } else if (*check) {
      const RunConfig cfg = check_flags.resolve(check_base, log);
      const GradCheckReport report = grad_check(cfg.model, cfg.model.seed);
      for (const auto& g : report.groups) out << g.name << '\t' << format_double(g.relative_error) << '\n';
      out << "max_relative_error=" << format_double(report.max_relative_error) << " worst=" << report.worst_group
          << '\n';
      if (report.max_relative_error > 1e-4) {
        err << "gradient check failed: " << report.worst_group << " exceeds 1e-4\n";
        return kExitNumerical;
      }
    } else if (*eval) {
      if (eval_threads < 1) throw InputError("threads: must be at least 1");
      const Model model = load_model(eval_model);
      const Dataset data = load_dataset(eval_data);
      std::optional<std::int64_t> split = model.split_timestamp;
      if (eval_split) split = trim(*eval_split) == "none" ? std::nullopt
                                                          : std::optional(parse_int64("split_timestamp", *eval_split));
      const std::vector<Interaction> test_set =
          split ? temporal_split(data.interactions, *split).second : data.interactions;
      const EvalReport report = evaluate(model, data, test_set, eval_threads);
      if (!report.auc) log.warn("AUC undefined: evaluation set holds a single class");
      std::ofstream f(eval_report, std::ios::binary);
      if (!f) throw InputError("cannot write " + eval_report);
      f << report_to_json(report);
      log.info("evaluated " + std::to_string(report.n_interactions) + " interactions, report at " + eval_report);
    } else if (*predict) {
      const Model model = load_model(pred_model);
      const std::string dir = pred_data ? *pred_data : model.data_source;
      if (dir.empty()) throw InputError("model records no data directory; pass --data");
      const Dataset data = load_dataset(dir);
      const UserRecord* user = data.find_user(pred_user);
      if (!user) throw InputError("unknown user " + pred_user);
      const EncodedUser eu = encode_user(*user, model.schema);
      std::vector<std::pair<std::string, double>> scored;
      for (const auto& id : split(pred_items, ',')) {
        if (id.empty()) continue;
        const ItemRecord* item = data.find_item(id);
        if (!item) throw InputError("unknown item " + id);
        scored.emplace_back(id, forward(model.params, model.config, eu,
                                        encode_item(*item, model.schema, model.config)).prob);
      }
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      for (const auto& [id, score] : scored) out << id << '\t' << format_double(score) << '\n';
    } else if (*sim) {
      if (sim_field != "sty" && sim_field != "sem") throw InputError("field: expected sty or sem");
      std::map<std::string, Eigen::VectorXd> vectors;
      for (auto& row : read_extracted(sim_vectors)) vectors[row.item_id] = sim_field == "sty" ? row.sty : row.sem;
      std::vector<std::string> queries;
      if (sim_queries) {
        queries = split(*sim_queries, ',');
      } else {
        for (const auto& [id, v] : vectors) queries.push_back(id);
      }
      const SimilarityReport report = similarity_report(vectors, queries, sim_k, sim_seed);
      for (const auto& w : report.warnings) log.warn(w);
      std::ofstream f(sim_out, std::ios::binary);
      if (!f) throw InputError("cannot write " + sim_out);
      f << similarity_to_json(report);
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace mmrank
