#pragma once

// JSON experiment configuration: dataset block (generator or CSV), model
// block, sampler block, analysis selection, and output policy.  Validation
// errors carry the offending field path.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsm/bnn.hpp"
#include "dsm/datagen.hpp"
#include "dsm/nuts.hpp"
#include "dsm/priors.hpp"
#include "dsm/robustness.hpp"

namespace dsm::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string name = "dataset";
  std::string generator;  // linreg | friedman | friedman_correlated; empty = csv
  std::string csv_path;
  datagen::CsvSchema schema;
  long n = 100;
  double rho = 0.0;
  std::string spearman_csv;  // optional Spearman target matrix for the copula
  double train_frac = 0.8;
  std::uint64_t split_seed = 0;  // 0: derived from the experiment seed
};

struct ModelConfig {
  ModelKind kind = ModelKind::bnn;
  PriorSpec prior;
  int hidden = 16;
};

struct AttackBlock {
  std::vector<double> epsilons = {0.05, 0.1, 0.2, 0.4};
  std::vector<double> delta_fractions = {0.1, 0.25, 0.5, 0.75, 1.0};
  int subset_size = 100;
  int n_draws = 100;
};

struct KappaGrid {
  std::vector<double> z = {0.1, 1.0, 5.0};
  std::vector<double> alpha = {0.1, 1.0};
  std::vector<int> p = {2, 10};
  std::vector<double> nu = {1.0, 3.0};
  int points = 200;
};

struct ReplicateBlock {
  std::vector<long> sizes = {100, 200, 500};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  long test_n = 1000;
  std::uint64_t test_seed = 777;  // previously unseen by construction
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  SamplerConfig sampler;
  std::vector<std::string> analyses = {"metrics"};
  std::vector<double> prune_levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  AttackBlock attack;
  KappaGrid kappa_grid;
  ReplicateBlock replicates;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::string config_hash;

  Task task() const { return dataset.schema.task; }
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config error at " + path + "." + key + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError("config error at " + path + "." + key + ": " + e.what());
  }
}

template <typename T>
T value_or(const nlohmann::json& j, const std::string& path, const std::string& key,
           const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError("config error at " + path + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::require;
  using detail::value_or;
  ExperimentConfig c;
  c.seed = value_or<std::uint64_t>(j, "", "seed", 1);
  c.output_dir = value_or<std::string>(j, "", "output_dir", "out");

  if (!j.contains("dataset")) throw ConfigError("config error at dataset: missing");
  const auto& jd = j.at("dataset");
  c.dataset.name = value_or<std::string>(jd, "dataset", "name", "dataset");
  c.dataset.generator = value_or<std::string>(jd, "dataset", "generator", "");
  c.dataset.csv_path = value_or<std::string>(jd, "dataset", "csv_path", "");
  c.dataset.n = value_or<long>(jd, "dataset", "n", 100);
  c.dataset.rho = value_or<double>(jd, "dataset", "rho", 0.0);
  c.dataset.spearman_csv = value_or<std::string>(jd, "dataset", "spearman_csv", "");
  c.dataset.train_frac = value_or<double>(jd, "dataset", "train_frac", 0.8);
  c.dataset.split_seed = value_or<std::uint64_t>(jd, "dataset", "split_seed", 0);
  if (c.dataset.generator.empty() && c.dataset.csv_path.empty())
    throw ConfigError("config error at dataset: need generator or csv_path");
  if (!c.dataset.generator.empty()) {
    const std::set<std::string> known = {"linreg", "friedman", "friedman_correlated"};
    if (!known.count(c.dataset.generator))
      throw ConfigError("config error at dataset.generator: unknown value '" +
                        c.dataset.generator + "'");
  }
  if (jd.contains("schema")) {
    const auto& js = jd.at("schema");
    c.dataset.schema.target = require<std::string>(js, "dataset.schema", "target");
    const auto task = value_or<std::string>(js, "dataset.schema", "task", "regression");
    if (task == "regression")
      c.dataset.schema.task = Task::regression;
    else if (task == "binary_classification")
      c.dataset.schema.task = Task::binary_classification;
    else
      throw ConfigError("config error at dataset.schema.task: unknown value '" + task + "'");
    if (js.contains("categorical")) {
      for (const auto& [col, mapping] : js.at("categorical").items())
        for (const auto& [val, code] : mapping.items())
          c.dataset.schema.categorical[col][val] = code.get<double>();
    }
  } else {
    c.dataset.schema.task = Task::regression;
  }

  if (!j.contains("model")) throw ConfigError("config error at model: missing");
  const auto& jm = j.at("model");
  const auto kind = value_or<std::string>(jm, "model", "kind", "bnn");
  if (kind == "bnn")
    c.model.kind = ModelKind::bnn;
  else if (kind == "linear")
    c.model.kind = ModelKind::linear;
  else
    throw ConfigError("config error at model.kind: unknown value '" + kind + "'");
  c.model.hidden = value_or<int>(jm, "model", "hidden", 16);
  if (!jm.contains("prior")) throw ConfigError("config error at model.prior: missing");
  try {
    c.model.prior = jm.at("prior").get<PriorSpec>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error at model.prior: ") + e.what());
  }

  if (j.contains("sampler")) {
    const auto& js = j.at("sampler");
    c.sampler.chains = value_or<int>(js, "sampler", "chains", 4);
    c.sampler.warmup = value_or<int>(js, "sampler", "warmup", 1000);
    c.sampler.draws = value_or<int>(js, "sampler", "draws", 1000);
    c.sampler.target_accept = value_or<double>(js, "sampler", "target_accept", 0.8);
    c.sampler.max_treedepth = value_or<int>(js, "sampler", "max_treedepth", 10);
  }
  c.sampler.seed = c.seed;

  c.analyses = detail::value_or<std::vector<std::string>>(j, "", "analyses", {"metrics"});
  const std::set<std::string> known_analyses = {"metrics",      "m_eff",
                                                "kappa_tables", "prune_sweep",
                                                "robustness",   "dependence_sweep"};
  for (const auto& a : c.analyses)
    if (!known_analyses.count(a))
      throw ConfigError("config error at analyses: unknown analysis '" + a + "'");
  for (const auto& a : c.analyses)
    if (a == "robustness" && c.task() != Task::binary_classification)
      throw ConfigError("config error at analyses: robustness requires a classification task");

  c.prune_levels = value_or<std::vector<double>>(j, "", "prune_levels", c.prune_levels);
  if (j.contains("attack")) {
    const auto& ja = j.at("attack");
    c.attack.epsilons = value_or<std::vector<double>>(ja, "attack", "epsilons", c.attack.epsilons);
    c.attack.delta_fractions =
        value_or<std::vector<double>>(ja, "attack", "delta_fractions", c.attack.delta_fractions);
    c.attack.subset_size = value_or<int>(ja, "attack", "subset_size", 100);
    c.attack.n_draws = value_or<int>(ja, "attack", "n_draws", 100);
  }
  if (j.contains("kappa_grid")) {
    const auto& jk = j.at("kappa_grid");
    c.kappa_grid.z = value_or<std::vector<double>>(jk, "kappa_grid", "z", c.kappa_grid.z);
    c.kappa_grid.alpha =
        value_or<std::vector<double>>(jk, "kappa_grid", "alpha", c.kappa_grid.alpha);
    c.kappa_grid.p = value_or<std::vector<int>>(jk, "kappa_grid", "p", c.kappa_grid.p);
    c.kappa_grid.nu = value_or<std::vector<double>>(jk, "kappa_grid", "nu", c.kappa_grid.nu);
    c.kappa_grid.points = value_or<int>(jk, "kappa_grid", "points", 200);
  }
  if (j.contains("replicates")) {
    const auto& jr = j.at("replicates");
    c.replicates.sizes =
        value_or<std::vector<long>>(jr, "replicates", "sizes", c.replicates.sizes);
    c.replicates.seeds =
        value_or<std::vector<std::uint64_t>>(jr, "replicates", "seeds", c.replicates.seeds);
    c.replicates.test_n = value_or<long>(jr, "replicates", "test_n", 1000);
    c.replicates.test_seed = value_or<std::uint64_t>(jr, "replicates", "test_seed", 777);
  }

  // stable content hash for output headers
  std::hash<std::string> hasher;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016zx", hasher(j.dump()));
  c.config_hash = buf;
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

// materialize the dataset block: generate or load, then split + standardize
inline datagen::Dataset build_dataset(const ExperimentConfig& c) {
  datagen::Dataset d;
  const auto& dc = c.dataset;
  if (dc.generator == "linreg") {
    d = datagen::gen_linreg(dc.n, dc.rho, c.seed);
  } else if (dc.generator == "friedman" || dc.generator == "friedman_correlated") {
    const bool corr = dc.generator == "friedman_correlated";
    if (corr && !dc.spearman_csv.empty()) {
      datagen::CsvSchema s;
      s.target = "";  // matrix file: all numeric columns, no target handling
      std::ifstream in(dc.spearman_csv);
      if (!in) throw ConfigError("config error at dataset.spearman_csv: cannot open");
      std::vector<std::vector<double>> rows;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
      }
      Eigen::MatrixXd S(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t jj = 0; jj < rows[i].size(); ++jj) S(i, jj) = rows[i][jj];
      d = datagen::gen_friedman(dc.n, true, &S, c.seed);
    } else {
      d = datagen::gen_friedman(dc.n, corr, nullptr, c.seed);
    }
  } else {
    if (dc.schema.target.empty())
      throw ConfigError("config error at dataset.schema.target: required for csv datasets");
    d = datagen::load_csv(dc.csv_path, dc.schema);
  }
  d.task = c.task();
  const std::uint64_t split_seed =
      dc.split_seed ? dc.split_seed : splitmix64(c.seed ^ 0x5eedULL);
  datagen::split(d, dc.train_frac, split_seed);
  datagen::standardize(d);
  return d;
}

inline Posterior build_posterior(const ExperimentConfig& c, const datagen::Dataset& d) {
  NetworkShape shape{d.p(), c.model.kind == ModelKind::bnn ? c.model.hidden : 1, 1};
  return Posterior(c.model.kind, c.task(), c.model.prior, shape, d.train_X(), d.train_y());
}

}  // namespace dsm::config
