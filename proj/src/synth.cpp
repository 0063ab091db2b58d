// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#include "mmrank/data_io.hpp"
#include "mmrank/errors.hpp"
#include "mmrank/random.hpp"
#include "mmrank/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmrank {

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synth spec: " + msg); };
  if (n_users < 1 || n_items < 1 || n_interactions < 1) fail("counts must be positive");
  if (tsem_dim < 1 || sem_dim < 1 || sty_dim < 1) fail("modality dimensions must be positive");
  const double fracs[] = {frac_style, frac_semantic, frac_text, frac_mixed};
  for (double f : fracs) {
    if (!(f >= 0.0)) fail("cohort fractions must be non-negative");
  }
  if (std::abs(frac_style + frac_semantic + frac_text + frac_mixed - 1.0) > 1e-9) {
    fail("cohort fractions must sum to 1");
  }
  if (!(zipf_exponent >= 0.0)) fail("zipf_exponent must be non-negative");
  if (!(noise >= 0.0)) fail("noise must be non-negative");
  if (n_topics < 1 || max_interests < 1) fail("n_topics and max_interests must be positive");
  if (max_interests > n_topics) fail("max_interests cannot exceed n_topics");
  if (!(signal_scale >= 0.0)) fail("signal_scale must be non-negative");
  if (!(target_positive_rate > 0.0 && target_positive_rate < 1.0)) {
    fail("target_positive_rate must lie in (0, 1)");
  }
  if (time_span < 1) fail("time_span must be positive");
}

KeyValues synth_spec_to_kv(const SynthSpec& s) {
  return {
      {"n_users", std::to_string(s.n_users)},
      {"n_items", std::to_string(s.n_items)},
      {"n_interactions", std::to_string(s.n_interactions)},
      {"zipf_exponent", format_double(s.zipf_exponent)},
      {"tsem_dim", std::to_string(s.tsem_dim)},
      {"sem_dim", std::to_string(s.sem_dim)},
      {"sty_dim", std::to_string(s.sty_dim)},
      {"frac_style", format_double(s.frac_style)},
      {"frac_semantic", format_double(s.frac_semantic)},
      {"frac_text", format_double(s.frac_text)},
      {"frac_mixed", format_double(s.frac_mixed)},
      {"noise", format_double(s.noise)},
      {"seed", std::to_string(s.seed)},
      {"n_topics", std::to_string(s.n_topics)},
      {"max_interests", std::to_string(s.max_interests)},
      {"signal_scale", format_double(s.signal_scale)},
      {"target_positive_rate", format_double(s.target_positive_rate)},
      {"start_timestamp", std::to_string(s.start_timestamp)},
      {"time_span", std::to_string(s.time_span)},
  };
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
  SynthSpec s;
  try {
    for (const auto& [k, v] : read_key_values(path)) {
      if (k == "n_users") s.n_users = parse_int(k, v);
      else if (k == "n_items") s.n_items = parse_int(k, v);
      else if (k == "n_interactions") s.n_interactions = parse_int(k, v);
      else if (k == "zipf_exponent") s.zipf_exponent = parse_double(k, v);
      else if (k == "tsem_dim") s.tsem_dim = parse_int(k, v);
      else if (k == "sem_dim") s.sem_dim = parse_int(k, v);
      else if (k == "sty_dim") s.sty_dim = parse_int(k, v);
      else if (k == "frac_style") s.frac_style = parse_double(k, v);
      else if (k == "frac_semantic") s.frac_semantic = parse_double(k, v);
      else if (k == "frac_text") s.frac_text = parse_double(k, v);
      else if (k == "frac_mixed") s.frac_mixed = parse_double(k, v);
      else if (k == "noise") s.noise = parse_double(k, v);
      else if (k == "seed") s.seed = parse_uint64(k, v);
      else if (k == "n_topics") s.n_topics = parse_int(k, v);
      else if (k == "max_interests") s.max_interests = parse_int(k, v);
      else if (k == "signal_scale") s.signal_scale = parse_double(k, v);
      else if (k == "target_positive_rate") s.target_positive_rate = parse_double(k, v);
      else if (k == "start_timestamp") s.start_timestamp = parse_int64(k, v);
      else if (k == "time_span") s.time_span = parse_int64(k, v);
      else throw std::invalid_argument("unknown synth spec key '" + k + "'");
    }
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return s;
}

namespace {

constexpr const char* kCohorts[] = {"style", "semantic", "text", "mixed"};

// Per-cohort weights over (tsem, sem, sty).
Eigen::Vector3d cohort_beta(int cohort) {
  switch (cohort) {
    case 0: return {0.0, 0.0, 1.0};
    case 1: return {0.0, 1.0, 0.0};
    case 2: return {1.0, 0.0, 0.0};
    default: return Eigen::Vector3d::Constant(1.0 / 3.0);
  }
}

// Largest-remainder allocation of n users to cohorts.
std::vector<int> allocate_cohorts(const SynthSpec& s, Rng& rng) {
  const double fracs[] = {s.frac_style, s.frac_semantic, s.frac_text, s.frac_mixed};
  int counts[4];
  double rema[4];
  int total = 0;
  for (int c = 0; c < 4; ++c) {
    const double exact = fracs[c] * s.n_users;
    counts[c] = static_cast<int>(std::floor(exact));
    rema[c] = exact - counts[c];
    total += counts[c];
  }
  while (total < s.n_users) {
    const int best = static_cast<int>(std::max_element(rema, rema + 4) - rema);
    ++counts[best];
    rema[best] = -1.0;
    ++total;
  }
  std::vector<int> cohorts;
  cohorts.reserve(s.n_users);
  for (int c = 0; c < 4; ++c) cohorts.insert(cohorts.end(), counts[c], c);
  rng.shuffle(cohorts.begin(), cohorts.end());
  return cohorts;
}

Eigen::VectorXd normal_vector(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double mean_sigmoid(const std::vector<double>& scores, double intercept) {
  double sum = 0.0;
  for (double s : scores) sum += 1.0 / (1.0 + std::exp(-(intercept + s)));
  return sum / static_cast<double>(scores.size());
}

}  // namespace

SynthResult synth_generate(const SynthSpec& spec) {
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  Rng root(spec.seed);
  Rng topic_rng = root.fork(1);
  Rng item_rng = root.fork(2);
  Rng user_rng = root.fork(3);
  Rng event_rng = root.fork(4);
  Rng label_rng = root.fork(5);

  const std::array<int, 3> dims{spec.tsem_dim, spec.sem_dim, spec.sty_dim};

  // topic directions per dense modality
  std::vector<std::array<Eigen::VectorXd, 3>> topics(spec.n_topics);
  for (auto& t : topics) {
    for (int j = 0; j < 3; ++j) t[j] = normal_vector(topic_rng, dims[j]);
  }

  std::vector<ItemRecord> items(spec.n_items);
  std::vector<std::array<Eigen::VectorXd, 3>> item_vecs(spec.n_items);
  for (int i = 0; i < spec.n_items; ++i) {
    auto& it = items[i];
    it.item_id = "i" + std::to_string(i);
    for (int j = 0; j < 3; ++j) item_vecs[i][j] = normal_vector(item_rng, dims[j]);
    it.tsem = to_std(item_vecs[i][0]);
    it.sem = to_std(item_vecs[i][1]);
    it.sty = to_std(item_vecs[i][2]);
    static const char* sizes[] = {"s", "m", "l"};
    it.meta = {{"size", sizes[item_rng.below(3)]}, {"artist", "a" + std::to_string(item_rng.below(50))}};
  }

  // Zipf popularity over a random rank order
  std::vector<int> rank_to_item(spec.n_items);
  std::iota(rank_to_item.begin(), rank_to_item.end(), 0);
  item_rng.shuffle(rank_to_item.begin(), rank_to_item.end());
  std::vector<double> cdf(spec.n_items);
  double acc = 0.0;
  for (int r = 0; r < spec.n_items; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
    cdf[r] = acc;
  }
  for (double& c : cdf) c /= acc;

  const auto cohorts = allocate_cohorts(spec, user_rng);
  std::vector<UserRecord> users(spec.n_users);
  std::vector<std::array<Eigen::VectorXd, 3>> tastes(spec.n_users);
  for (int u = 0; u < spec.n_users; ++u) {
    auto& rec = users[u];
    rec.user_id = "u" + std::to_string(u);
    const int n_int = 1 + static_cast<int>(user_rng.below(spec.max_interests));
    std::vector<int> pool(spec.n_topics);
    std::iota(pool.begin(), pool.end(), 0);
    user_rng.shuffle(pool.begin(), pool.end());
    pool.resize(n_int);
    std::sort(pool.begin(), pool.end());
    for (int j = 0; j < 3; ++j) {
      tastes[u][j] = Eigen::VectorXd::Zero(dims[j]);
      for (int t : pool) tastes[u][j] += topics[t][j];
      tastes[u][j] *= spec.signal_scale / n_int;
    }
    for (int t : pool) rec.interests.push_back("topic" + std::to_string(t));
    rec.profile = {{std::string(kCohortField), kCohorts[cohorts[u]]},
                   {"gender", "g" + std::to_string(user_rng.below(2))},
                   {"age", "age" + std::to_string(user_rng.below(5))}};
  }

  struct Event {
    int user;
    int item;
    std::int64_t ts;
    double score;
  };
  std::vector<Event> events(spec.n_interactions);
  std::vector<double> scores(spec.n_interactions);
  for (int n = 0; n < spec.n_interactions; ++n) {
    Event& e = events[n];
    e.user = static_cast<int>(event_rng.below(spec.n_users));
    const double u = event_rng.uniform();
    const auto rank = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    e.item = rank_to_item[std::min<std::ptrdiff_t>(rank, spec.n_items - 1)];
    e.ts = spec.start_timestamp + static_cast<std::int64_t>(event_rng.below(spec.time_span));
    const Eigen::Vector3d beta = cohort_beta(cohorts[e.user]);
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (beta(j) == 0.0) continue;
      s += beta(j) * tastes[e.user][j].dot(item_vecs[e.item][j]) / std::sqrt(static_cast<double>(dims[j]));
    }
    e.score = s + spec.noise * event_rng.normal();
    scores[n] = e.score;
  }

  // intercept so the expected positive rate hits the target
  double lo = -60.0, hi = 60.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (mean_sigmoid(scores, mid) < spec.target_positive_rate ? lo : hi) = mid;
  }
  const double intercept = 0.5 * (lo + hi);

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return events[a].ts < events[b].ts; });

  std::vector<Interaction> interactions;
  interactions.reserve(events.size());
  std::vector<int> labels(events.size());
  for (std::size_t n = 0; n < events.size(); ++n) {
    const double p = 1.0 / (1.0 + std::exp(-(intercept + events[n].score)));
    labels[n] = label_rng.bernoulli(p) ? 1 : 0;
  }
  for (std::size_t n : order) {
    const Event& e = events[n];
    interactions.push_back({users[e.user].user_id, items[e.item].item_id, labels[n], e.ts});
  }

  return {make_dataset(std::move(users), std::move(items), std::move(interactions)), intercept};
}

}  // namespace mmrank
