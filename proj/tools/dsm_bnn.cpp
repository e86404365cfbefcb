// Experiment runner: gen-data, fit, analyze, attack.  Batch interface
// driven by a single JSON config; outputs plot-ready CSVs and a JSON
// diagnostics summary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsm/config.hpp"
#include "dsm/diagnostics.hpp"
#include "dsm/linearize.hpp"
#include "dsm/metrics.hpp"
#include "dsm/pruning.hpp"
#include "dsm/robustness.hpp"
#include "dsm/shrinkage.hpp"
#include "dsm/trace_io.hpp"

namespace fs = std::filesystem;
using namespace dsm;
using config::ExperimentConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string file_header(const ExperimentConfig& c) {
  return "config_hash=" + c.config_hash + " seed=" + std::to_string(c.seed);
}

std::ofstream open_csv(const fs::path& path, const ExperimentConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(12);
  out << "# " << file_header(c) << "\n";
  return out;
}

// posterior predictive ensemble on the original data scale
metrics::PredictiveEnsemble ensemble_from_trace(const Posterior& post, const Trace& trace,
                                                const Eigen::MatrixXd& Xq,
                                                const datagen::Dataset& data) {
  metrics::PredictiveEnsemble e;
  const long M = static_cast<long>(trace.n_chains()) * trace.n_draws();
  e.draws.resize(Xq.rows(), M);
  e.sigma.resize(M);
  long m = 0;
  for (int c = 0; c < trace.n_chains(); ++c)
    for (int i = 0; i < trace.n_draws(); ++i, ++m) {
      const Eigen::VectorXd th = trace.draws[c].row(i).transpose();
      Eigen::VectorXd f = post.predict(th, Xq);
      if (post.layout().task == Task::binary_classification) {
        for (long k = 0; k < f.size(); ++k) f[k] = dist::sigmoid(f[k]);
        e.sigma[m] = 1.0;
      } else {
        f = f.array() * data.y_sd + data.y_mean;
        e.sigma[m] = post.sigma_of(th) * data.y_sd;
      }
      e.draws.col(m) = f;
    }
  return e;
}

double classification_nll(const metrics::PredictiveEnsemble& e, const Eigen::VectorXd& y) {
  double acc = 0.0;
  const auto M = static_cast<double>(e.n_draws());
  for (long i = 0; i < e.n_test(); ++i) {
    double mix = 0.0;
    for (long m = 0; m < e.n_draws(); ++m) {
      const double q = e.draws(i, m);
      mix += (y[i] > 0.5) ? q : 1.0 - q;
    }
    acc += -std::log(std::max(mix / M, 1e-300));
  }
  return acc / static_cast<double>(e.n_test());
}

std::map<std::string, double> compute_metrics(const Posterior& post, const Trace& trace,
                                              const datagen::Dataset& data) {
  const Eigen::MatrixXd Xq = data.test_X();
  auto e = ensemble_from_trace(post, trace, Xq, data);
  std::map<std::string, double> out;
  if (post.layout().task == Task::regression) {
    Eigen::VectorXd y = data.test_y().array() * data.y_sd + data.y_mean;
    out["rmse"] = metrics::rmse(e, y);
    out["crps"] = metrics::crps(e, y);
    out["pnll"] = metrics::pnll(e, y);
  } else {
    const Eigen::VectorXd y = data.test_y();
    out["accuracy"] = metrics::accuracy(e, y);
    out["nll"] = classification_nll(e, y);
    out["ece"] = metrics::ece(e, y);
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const ExperimentConfig& c,
                       const std::map<std::string, double>& values, long n) {
  auto out = open_csv(path, c);
  out << "model,dataset,n,seed,metric,value\n";
  for (const auto& [k, v] : values)
    out << to_string(c.model.prior.family) << "," << c.dataset.name << "," << n << "," << c.seed
        << "," << k << "," << v << "\n";
}

nlohmann::json diagnostics_json(const Trace& trace, const ExperimentConfig& c) {
  std::vector<double> rhats, ess_bulk, ess_tail;
  for (int j = 0; j < trace.dim; ++j) {
    auto chains = trace.coordinate(j);
    rhats.push_back(diagnostics::split_rhat(chains));
    auto e = diagnostics::ess(chains);
    ess_bulk.push_back(e.bulk);
    ess_tail.push_back(e.tail);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double total =
      static_cast<double>(trace.n_chains()) * static_cast<double>(trace.n_draws());
  nlohmann::json j;
  j["config_hash"] = c.config_hash;
  j["seed"] = c.seed;
  j["chains"] = trace.n_chains();
  j["draws_per_chain"] = trace.n_draws();
  j["max_rhat"] = *std::max_element(rhats.begin(), rhats.end());
  j["median_rhat"] = median(rhats);
  j["divergence_fraction"] = trace.divergence_fraction();
  j["median_ess_bulk_over_m"] = median(ess_bulk) / total;
  j["median_ess_tail_over_m"] = median(ess_tail) / total;
  j["step_size"] = trace.step_size;
  return j;
}

Trace fit_posterior(const Posterior& post, const SamplerConfig& cfg, int threads) {
  SamplerConfig run_cfg = cfg;
  run_cfg.threads = threads;
  try {
    return run_nuts(
        [&post](const Eigen::VectorXd& th, Eigen::VectorXd& g) { return post.value_grad(th, g); },
        post.layout().dim, run_cfg);
  } catch (const std::runtime_error& e) {
    throw NumericalError(e.what());
  }
}

int cmd_fit(const ExperimentConfig& c, int threads) {
  fs::create_directories(c.output_dir);
  auto data = config::build_dataset(c);
  auto post = config::build_posterior(c, data);
  Trace trace = fit_posterior(post, c.sampler, threads);

  trace_io::write_trace_csv((fs::path(c.output_dir) / "trace.csv").string(), trace,
                            post.layout().coord_names(), file_header(c));
  {
    std::ofstream out(fs::path(c.output_dir) / "diagnostics.json");
    out << diagnostics_json(trace, c).dump(2) << "\n";
  }
  write_metrics_csv(fs::path(c.output_dir) / "metrics.csv", c,
                    compute_metrics(post, trace, data), data.n());
  std::cout << "fit: wrote trace.csv, diagnostics.json, metrics.csv to " << c.output_dir
            << "\n";
  return kExitOk;
}

void analysis_m_eff(const ExperimentConfig& c, const Posterior& post, const Trace& trace,
                    int threads, int thin) {
  auto series = linearize::posterior_m_eff_trace(post, trace, thin, threads);
  auto out = open_csv(fs::path(c.output_dir) / "m_eff.csv", c);
  out << "draw,m_eff\n";
  for (long i = 0; i < series.values.size(); ++i) out << i << "," << series.values[i] << "\n";

  // mean sorted spectrum of (I+G)^{-1} G across the same reference draws
  Eigen::VectorXd mean_curve;
  long count = 0;
  for (int ch = 0; ch < trace.n_chains(); ++ch)
    for (int i = 0; i < trace.n_draws(); i += std::max(1, thin)) {
      auto lz =
          linearize::build_linearization(post, trace.draws[ch].row(i).transpose(), post.X());
      Eigen::VectorXd w = linearize::whitened_spectrum(lz.P, lz.S);
      Eigen::VectorXd curve = (w.array() / (1.0 + w.array())).matrix();
      if (mean_curve.size() == 0)
        mean_curve = curve;
      else
        mean_curve += curve;
      ++count;
    }
  mean_curve /= static_cast<double>(std::max<long>(1, count));
  auto out2 = open_csv(fs::path(c.output_dir) / "eigencurve.csv", c);
  out2 << "index,mean_shrinkage_eigenvalue\n";
  for (long i = 0; i < mean_curve.size(); ++i) out2 << i << "," << mean_curve[i] << "\n";
}

void analysis_kappa_tables(const ExperimentConfig& c) {
  auto out = open_csv(fs::path(c.output_dir) / "kappa_tables.csv", c);
  out << "z,alpha,p,nu,kappa,dsm_density,student_density,horseshoe_density\n";
  const int n = std::max(20, c.kappa_grid.points);
  // symmetric geometric grid inside the [1e-9, 1-1e-9] evaluation window:
  // constant-ratio spacing keeps the trapezoid accurate through the
  // integrable endpoint singularities (attainable for alpha - 1 > -1/2;
  // smaller alpha carries real mass beyond the window edge)
  const int m = n / 2;
  const double ratio = std::pow(0.5 / 1e-9, 1.0 / static_cast<double>(m - 1));
  std::vector<double> grid;
  grid.reserve(2 * m);
  for (int i = 0; i < m; ++i) grid.push_back(1e-9 * std::pow(ratio, i));
  for (int i = m - 1; i >= 0; --i) grid.push_back(1.0 - grid[i]);
  for (double z : c.kappa_grid.z)
    for (double alpha : c.kappa_grid.alpha)
      for (int p : c.kappa_grid.p)
        for (double nu : c.kappa_grid.nu) {
          shrinkage::ShrinkageContext ctx{z, alpha, p, nu};
          for (double k : grid)
            out << z << "," << alpha << "," << p << "," << nu << "," << k << ","
                << shrinkage::dsm_kappa_density(k, ctx) << ","
                << shrinkage::student_kappa_density(k, z, nu) << ","
                << shrinkage::horseshoe_kappa_density(k, z) << "\n";
        }
}

void analysis_prune_sweep(const ExperimentConfig& c, const Posterior& post, const Trace& trace,
                          const datagen::Dataset& data, int threads) {
  const Eigen::MatrixXd Xq = data.test_X();
  const bool classify = post.layout().task == Task::binary_classification;
  Eigen::VectorXd y = data.test_y();
  if (!classify) y = y.array() * data.y_sd + data.y_mean;
  const double scale = classify ? 1.0 : data.y_sd;
  const double shift = classify ? 0.0 : data.y_mean;
  auto metric = [&](const metrics::PredictiveEnsemble& e, const Eigen::VectorXd& yy) {
    metrics::PredictiveEnsemble scaled = e;
    if (!classify) scaled.draws = (e.draws.array() * scale + shift).matrix();
    return classify ? metrics::accuracy(scaled, yy) : metrics::rmse(scaled, yy);
  };
  auto rows = pruning::sparsity_sweep(post, trace, c.prune_levels, Xq, y,
                                      classify ? "accuracy" : "rmse", metric, threads);
  auto out = open_csv(fs::path(c.output_dir) / "prune_sweep.csv", c);
  out << "scheme,sparsity,metric,value\n";
  for (const auto& r : rows)
    out << r.scheme << "," << r.sparsity << "," << r.metric << "," << r.value << "\n";
}

void analysis_robustness(const ExperimentConfig& c, const Posterior& post, const Trace& trace,
                         const datagen::Dataset& data, int threads) {
  const Eigen::MatrixXd Xq = data.test_X();
  const Eigen::VectorXd yq = data.test_y();
  robustness::AttackConfig acfg;
  acfg.delta_fractions = c.attack.delta_fractions;
  acfg.subset_size = c.attack.subset_size;
  acfg.n_draws = c.attack.n_draws;
  acfg.seed = c.seed;

  // subset of test points shared across epsilons
  Rng rng(c.seed ^ 0xa77ac4ULL);
  std::vector<long> pick;
  for (long i = 0; i < Xq.rows(); ++i) pick.push_back(i);
  for (long i = Xq.rows() - 1; i > 0; --i)
    std::swap(pick[i], pick[static_cast<long>(rng.uniform() * (i + 1))]);
  if (static_cast<long>(acfg.subset_size) < Xq.rows()) pick.resize(acfg.subset_size);

  auto p1_out = open_csv(fs::path(c.output_dir) / "robustness_p1.csv", c);
  p1_out << "# single-step FGSM search of T: fractions are lower bounds\n";
  p1_out << "epsilon,delta,mean_p1\n";
  auto safety_out = open_csv(fs::path(c.output_dir) / "robustness_safety.csv", c);
  safety_out << "# single-step FGSM search of T: fractions are lower bounds\n";
  safety_out << "epsilon,safe,partially_safe,unsafe\n";

  for (double eps : c.attack.epsilons) {
    acfg.epsilon = eps;
    std::vector<std::vector<robustness::P1Row>> rows(pick.size());
    std::vector<robustness::SafetyBin> bins(pick.size());
    parallel_for(static_cast<long>(pick.size()), threads, [&](long i) {
      rows[i] =
          robustness::estimate_p1(post, trace, Xq.row(pick[i]).transpose(), yq[pick[i]], acfg);
      bins[i] =
          robustness::estimate_p2(post, trace, Xq.row(pick[i]).transpose(), yq[pick[i]], acfg)
              .bin;
    });
    for (std::size_t d = 0; d < acfg.delta_fractions.size(); ++d) {
      double mean_p1 = 0.0;
      for (const auto& r : rows) mean_p1 += r[d].fraction;
      p1_out << eps << "," << rows[0][d].delta << ","
             << mean_p1 / static_cast<double>(rows.size()) << "\n";
    }
    double safe = 0, partial = 0, unsafe = 0;
    for (auto b : bins) {
      safe += b == robustness::SafetyBin::safe;
      partial += b == robustness::SafetyBin::partially_safe;
      unsafe += b == robustness::SafetyBin::unsafe;
    }
    const auto m = static_cast<double>(bins.size());
    safety_out << eps << "," << safe / m << "," << partial / m << "," << unsafe / m << "\n";
  }
}

void analysis_dependence_sweep(const ExperimentConfig& c) {
  // dispersion of the regularized scale under different tail priors, at the
  // slab prior's median c^2, its 0.9 quantile, and an effectively unbounded
  // slab; sign classification against 1/(p alpha)
  const auto& prior = c.model.prior;
  std::vector<double> c_draws(20000);
  Rng rng(c.seed ^ 0xc0ffeeULL);
  for (auto& v : c_draws) v = rng.inv_gamma(prior.c_sq_shape(), prior.c_sq_rate());
  std::sort(c_draws.begin(), c_draws.end());
  const double c_med = c_draws[c_draws.size() / 2];
  const double c_q90 = c_draws[static_cast<std::size_t>(0.9 * c_draws.size())];
  const double c_big = 1e8;
  const double tau = 0.3;

  auto out = open_csv(fs::path(c.output_dir) / "dependence_sweep.csv", c);
  out << "scale_prior,tail_param,c_sq,tau,p,alpha,cv_sq,std_error,threshold,cov_sign\n";
  const long draws = 200000;
  for (int p : c.kappa_grid.p)
    for (double alpha : c.kappa_grid.alpha)
      for (double c2 : {c_med, c_q90, c_big}) {
        const double pa = p * alpha;
        auto emit = [&](const std::string& name, double tail,
                        const std::function<double(Rng&)>& sampler) {
          auto est = shrinkage::cv_squared_mc(sampler, c2, tau, draws, c.seed);
          auto dep = shrinkage::variance_component_covariance({p, alpha, est.mean, est.var});
          out << name << "," << tail << "," << c2 << "," << tau << "," << p << "," << alpha
              << "," << est.value << "," << est.std_error << "," << dep.threshold << ","
              << dep.sign << "\n";
        };
        for (double nu : {1.0, 2.0, 3.0, 5.0, 10.0})
          emit("half_student_t", nu, [nu](Rng& r) { return r.half_student_t(nu); });
        emit("gamma_sqrt", pa, [pa](Rng& r) { return std::sqrt(r.gamma(pa, 0.5)); });
      }
}

int cmd_analyze(const ExperimentConfig& c, const std::string& trace_path, int threads,
                int thin) {
  fs::create_directories(c.output_dir);
  auto data = config::build_dataset(c);
  auto post = config::build_posterior(c, data);
  Trace trace = trace_io::read_trace_csv(trace_path);
  if (trace.dim != post.layout().dim)
    throw config::ConfigError("analyze: trace dimension " + std::to_string(trace.dim) +
                              " does not match the model (" +
                              std::to_string(post.layout().dim) + ")");
  for (const auto& a : c.analyses) {
    if (a == "metrics")
      write_metrics_csv(fs::path(c.output_dir) / "metrics.csv", c,
                        compute_metrics(post, trace, data), data.n());
    else if (a == "m_eff")
      analysis_m_eff(c, post, trace, threads, thin);
    else if (a == "kappa_tables")
      analysis_kappa_tables(c);
    else if (a == "prune_sweep")
      analysis_prune_sweep(c, post, trace, data, threads);
    else if (a == "robustness")
      analysis_robustness(c, post, trace, data, threads);
    else if (a == "dependence_sweep")
      analysis_dependence_sweep(c);
    std::cout << "analyze: " << a << " done\n";
  }
  return kExitOk;
}

int cmd_gen_data(const ExperimentConfig& c) {
  fs::create_directories(c.output_dir);
  const auto& dc = c.dataset;
  if (dc.generator.empty()) throw config::ConfigError("gen-data: dataset.generator required");
  auto generate = [&](long n, std::uint64_t seed) {
    if (dc.generator == "linreg") return datagen::gen_linreg(n, dc.rho, seed);
    return datagen::gen_friedman(n, dc.generator == "friedman_correlated", nullptr, seed);
  };
  for (std::uint64_t s : c.replicates.seeds)
    if (s == c.replicates.test_seed)
      throw config::ConfigError("gen-data: replicates.test_seed collides with a train seed");
  for (long n : c.replicates.sizes)
    for (std::uint64_t s : c.replicates.seeds) {
      auto d = generate(n, s);
      const auto name =
          dc.generator + "_n" + std::to_string(n) + "_seed" + std::to_string(s) + ".csv";
      datagen::save_csv((fs::path(c.output_dir) / name).string(), d, "y",
                        file_header(c) + " gen_seed=" + std::to_string(s));
    }
  auto test = generate(c.replicates.test_n, c.replicates.test_seed);
  datagen::save_csv((fs::path(c.output_dir) / (dc.generator + "_test.csv")).string(), test, "y",
                    file_header(c) + " gen_seed=" + std::to_string(c.replicates.test_seed));
  std::cout << "gen-data: wrote " << c.replicates.sizes.size() * c.replicates.seeds.size() + 1
            << " files to " << c.output_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet scale mixture priors for Bayesian neural networks"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out_override;
  std::uint64_t seed_override = 0;
  int threads = 0;
  int thin = 1;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub, bool needs_trace) {
    sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--out", out_override, "output directory override");
    auto* s = sub->add_option("--seed", seed_override, "seed override");
    s->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--threads", threads, "worker threads (default: DSM_BNN_THREADS or 1)");
    if (needs_trace)
      sub->add_option("--trace", trace_path, "trace CSV from a previous fit")->required();
  };

  auto* fit = app.add_subcommand("fit", "sample the posterior and write trace + metrics");
  add_common(fit, false);
  auto* analyze = app.add_subcommand("analyze", "run the configured analyses on a trace");
  add_common(analyze, true);
  analyze->add_option("--thin", thin, "reference-point thinning for m_eff");
  auto* attack = app.add_subcommand("attack", "adversarial robustness tables only");
  add_common(attack, true);
  auto* gen = app.add_subcommand("gen-data", "write replicate datasets");
  add_common(gen, false);

  CLI11_PARSE(app, argc, argv);

  if (threads == 0) {
    if (const char* env = std::getenv("DSM_BNN_THREADS")) threads = std::atoi(env);
    if (threads <= 0) threads = 1;
  }

  try {
    auto cfg = config::load_config(config_path);
    if (have_seed) {
      cfg.seed = seed_override;
      cfg.sampler.seed = seed_override;
    }
    if (!out_override.empty()) cfg.output_dir = out_override;

    if (app.got_subcommand(fit)) return cmd_fit(cfg, threads);
    if (app.got_subcommand(analyze)) return cmd_analyze(cfg, trace_path, threads, thin);
    if (app.got_subcommand(attack)) {
      if (cfg.task() != Task::binary_classification)
        throw config::ConfigError("attack: requires a classification task");
      cfg.analyses = {"robustness"};
      return cmd_analyze(cfg, trace_path, threads, thin);
    }
    if (app.got_subcommand(gen)) return cmd_gen_data(cfg);
  } catch (const config::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
