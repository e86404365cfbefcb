#pragma once

// Multinomial No-U-Turn sampler with dual-averaging step-size adaptation
// and diagonal mass-matrix estimation in expanding warmup windows.  Chains
// run independently with private RNG streams derived from (seed, chain).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dsm/rng.hpp"

namespace dsm {

using LogpGrad = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double target_accept = 0.8;
  int max_treedepth = 10;
  std::uint64_t seed = 1;
  int threads = 1;
  double init_jitter_sd = 0.1;

  void validate() const {
    if (chains < 1 || warmup < 1 || draws < 1)
      throw std::invalid_argument("SamplerConfig: counts must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw std::invalid_argument("SamplerConfig: target_accept in (0,1)");
  }
};

struct Trace {
  int dim = 0;
  std::vector<Eigen::MatrixXd> draws;                 // [chain](draw, dim)
  std::vector<std::vector<std::uint8_t>> divergent;   // [chain][draw]
  std::vector<Eigen::VectorXd> energy_error;          // trajectory-mean signed H - H0 drift
  std::vector<Eigen::VectorXd> accept_stat;           // mean Metropolis prob per draw
  std::vector<Eigen::VectorXd> treedepth;
  std::vector<double> step_size;                      // frozen post-warmup
  std::vector<Eigen::VectorXd> mass_diag;             // inverse metric (variances)
  std::map<std::string, std::vector<Eigen::VectorXd>> derived;  // name -> [chain] series

  int n_chains() const { return static_cast<int>(draws.size()); }
  int n_draws() const { return draws.empty() ? 0 : static_cast<int>(draws[0].rows()); }

  double divergence_fraction() const {
    long total = 0, div = 0;
    for (const auto& c : divergent) {
      total += static_cast<long>(c.size());
      for (auto b : c) div += b;
    }
    return total == 0 ? 0.0 : static_cast<double>(div) / static_cast<double>(total);
  }

  // per-chain series of one coordinate
  std::vector<Eigen::VectorXd> coordinate(int idx) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(draws.size());
    for (const auto& m : draws) out.push_back(m.col(idx));
    return out;
  }
};

namespace nuts_detail {

struct State {
  Eigen::VectorXd theta, p, grad;
  double logp = 0.0;
};

struct Tree {
  State leftmost, rightmost, sample;
  Eigen::VectorXd rho;
  double log_sum_w = -std::numeric_limits<double>::infinity();
  double sum_metro = 0.0;
  double sum_dh = 0.0;  // signed integrator drift, summed over visited states
  long n_leapfrog = 0;
  bool divergent = false;
  bool turning = false;
};

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

class Chain {
 public:
  Chain(const LogpGrad& f, int dim, const SamplerConfig& cfg, int chain_id)
      : f_(f), dim_(dim), cfg_(cfg), rng_(cfg.seed, static_cast<std::uint64_t>(chain_id)) {
    inv_mass_ = Eigen::VectorXd::Ones(dim);
  }

  void initialize(const Eigen::VectorXd* init) {
    cur_.theta.resize(dim_);
    cur_.grad.resize(dim_);
    if (init) {
      cur_.theta = *init;
      cur_.logp = f_(cur_.theta, cur_.grad);
      if (std::isfinite(cur_.logp) && cur_.grad.allFinite()) return;
      throw std::runtime_error("nuts: supplied init has non-finite density");
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (int i = 0; i < dim_; ++i) cur_.theta[i] = rng_.normal(0.0, cfg_.init_jitter_sd);
      cur_.logp = f_(cur_.theta, cur_.grad);
      if (std::isfinite(cur_.logp) && cur_.grad.allFinite()) return;
    }
    throw std::runtime_error("nuts: failed to find a finite starting point in 100 attempts");
  }

  void run(Eigen::MatrixXd& out, std::vector<std::uint8_t>& div_out, Eigen::VectorXd& eerr_out,
           Eigen::VectorXd& astat_out, Eigen::VectorXd& depth_out, double& eps_out,
           Eigen::VectorXd& mass_out) {
    find_reasonable_epsilon();
    mu_ = std::log(10.0 * eps_);
    setup_windows();

    Eigen::VectorXd welford_m = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd welford_s = Eigen::VectorXd::Zero(dim_);
    long welford_n = 0;

    for (int it = 0; it < cfg_.warmup; ++it) {
      const auto res = transition();
      adapt_step_size(res.accept_stat);
      if (in_mass_window(it)) {
        ++welford_n;
        const Eigen::VectorXd d = cur_.theta - welford_m;
        welford_m += d / static_cast<double>(welford_n);
        welford_s += d.cwiseProduct(cur_.theta - welford_m);
      }
      if (is_window_end(it)) {
        if (welford_n > 2) {
          const auto n = static_cast<double>(welford_n);
          inv_mass_ = (welford_s / (n - 1.0)) * (n / (n + 5.0));
          inv_mass_.array() += 1e-3 * (5.0 / (n + 5.0));
        }
        welford_m.setZero();
        welford_s.setZero();
        welford_n = 0;
        // re-anchor dual averaging on the new metric
        find_reasonable_epsilon();
        mu_ = std::log(10.0 * eps_);
        hbar_ = 0.0;
        log_eps_bar_ = 0.0;
        adapt_count_ = 0;
      }
    }
    eps_ = std::exp(log_eps_bar_);

    out.resize(cfg_.draws, dim_);
    div_out.assign(cfg_.draws, 0);
    eerr_out.resize(cfg_.draws);
    astat_out.resize(cfg_.draws);
    depth_out.resize(cfg_.draws);
    for (int it = 0; it < cfg_.draws; ++it) {
      const auto res = transition();
      out.row(it) = cur_.theta.transpose();
      div_out[it] = res.divergent ? 1 : 0;
      eerr_out[it] = res.energy_error;
      astat_out[it] = res.accept_stat;
      depth_out[it] = res.depth;
    }
    eps_out = eps_;
    mass_out = inv_mass_;
  }

 private:
  struct TransitionResult {
    double accept_stat = 0.0;
    double energy_error = 0.0;
    int depth = 0;
    bool divergent = false;
  };

  double kinetic(const Eigen::VectorXd& p) const {
    return 0.5 * p.dot(inv_mass_.cwiseProduct(p));
  }

  // one leapfrog step; returns false on non-finite values
  bool leapfrog(State& z, double direction) {
    const double e = direction * eps_;
    z.p += 0.5 * e * z.grad;
    z.theta += e * inv_mass_.cwiseProduct(z.p);
    z.logp = f_(z.theta, z.grad);
    if (!std::isfinite(z.logp) || !z.grad.allFinite()) return false;
    z.p += 0.5 * e * z.grad;
    return true;
  }

  bool uturn(const State& left, const State& right, const Eigen::VectorXd& rho) const {
    return inv_mass_.cwiseProduct(right.p).dot(rho) <= 0.0 ||
           inv_mass_.cwiseProduct(left.p).dot(rho) <= 0.0;
  }

  Tree build_tree(int depth, State z, double direction, double h0) {
    Tree t;
    if (depth == 0) {
      const bool ok = leapfrog(z, direction);
      t.n_leapfrog = 1;
      const double h = ok ? -z.logp + kinetic(z.p) : std::numeric_limits<double>::infinity();
      const double dh = h0 - h;  // > 0 means energy dropped
      if (!ok || dh < -1000.0) {
        t.divergent = true;
        return t;
      }
      t.leftmost = z;
      t.rightmost = z;
      t.sample = std::move(z);
      t.rho = t.sample.p;
      t.log_sum_w = dh;
      t.sum_metro = std::min(1.0, std::exp(dh));
      t.sum_dh = -dh;
      return t;
    }
    Tree first = build_tree(depth - 1, std::move(z), direction, h0);
    if (first.divergent || first.turning) return first;
    Tree second = build_tree(
        depth - 1, direction > 0 ? first.rightmost : first.leftmost, direction, h0);
    first.n_leapfrog += second.n_leapfrog;
    first.sum_metro += second.sum_metro;
    first.sum_dh += second.sum_dh;
    if (second.divergent || second.turning) {
      first.divergent = second.divergent;
      first.turning = second.turning;
      return first;
    }
    const double lw = log_add_exp(first.log_sum_w, second.log_sum_w);
    if (std::log(rng_.uniform()) < second.log_sum_w - lw) first.sample = second.sample;
    first.log_sum_w = lw;
    first.rho += second.rho;
    if (direction > 0)
      first.rightmost = second.rightmost;
    else
      first.leftmost = second.leftmost;
    first.turning = uturn(first.leftmost, first.rightmost, first.rho);
    return first;
  }

  TransitionResult transition() {
    State z = cur_;
    z.p.resize(dim_);
    for (int i = 0; i < dim_; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_mass_[i]);
    const double h0 = -z.logp + kinetic(z.p);

    State leftmost = z, rightmost = z, sample = z;
    Eigen::VectorXd rho = z.p;
    double log_sum_w = 0.0;
    double sum_metro = 0.0, sum_dh = 0.0;
    long n_leapfrog = 0;
    TransitionResult res;

    for (int depth = 0; depth < cfg_.max_treedepth; ++depth) {
      const double direction = (rng_.uniform() < 0.5) ? -1.0 : 1.0;
      Tree sub = build_tree(depth, direction > 0 ? rightmost : leftmost, direction, h0);
      n_leapfrog += sub.n_leapfrog;
      sum_metro += sub.sum_metro;
      sum_dh += sub.sum_dh;
      if (sub.divergent) {
        res.divergent = true;
        break;
      }
      if (sub.turning) break;
      // biased progressive sampling toward the new subtree
      if (std::log(rng_.uniform()) < sub.log_sum_w - log_sum_w) sample = sub.sample;
      log_sum_w = log_add_exp(log_sum_w, sub.log_sum_w);
      rho += sub.rho;
      if (direction > 0)
        rightmost = sub.rightmost;
      else
        leftmost = sub.leftmost;
      res.depth = depth + 1;
      if (uturn(leftmost, rightmost, rho)) break;
    }
    cur_ = sample;
    res.accept_stat = (n_leapfrog > 0) ? sum_metro / static_cast<double>(n_leapfrog) : 0.0;
    res.energy_error = (n_leapfrog > 0) ? sum_dh / static_cast<double>(n_leapfrog) : 0.0;
    return res;
  }

  void find_reasonable_epsilon() {
    eps_ = 1.0;
    State z = cur_;
    z.p.resize(dim_);
    for (int i = 0; i < dim_; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_mass_[i]);
    const double h0 = -z.logp + kinetic(z.p);
    auto accept = [&](double eps) {
      eps_ = eps;
      State trial = z;
      if (!leapfrog(trial, 1.0)) return 0.0;
      return std::exp(h0 - (-trial.logp + kinetic(trial.p)));
    };
    double a = accept(eps_);
    const bool grow = a > 0.5;
    for (int i = 0; i < 50; ++i) {
      eps_ *= grow ? 2.0 : 0.5;
      a = accept(eps_);
      if ((grow && a < 0.5) || (!grow && a > 0.5)) break;
      if (eps_ > 1e7 || eps_ < 1e-10) break;
    }
  }

  void adapt_step_size(double accept_stat) {
    ++adapt_count_;
    const double m = static_cast<double>(adapt_count_);
    const double eta = 1.0 / (m + 10.0);
    hbar_ = (1.0 - eta) * hbar_ + eta * (cfg_.target_accept - accept_stat);
    const double log_eps = mu_ - std::sqrt(m) / 0.05 * hbar_;
    const double w = std::pow(m, -0.75);
    log_eps_bar_ = w * log_eps + (1.0 - w) * log_eps_bar_;
    eps_ = std::exp(log_eps);
  }

  // Stan-style expanding windows: init buffer for step size only, doubling
  // covariance windows, terminal buffer for the final step-size run.
  void setup_windows() {
    const int w = cfg_.warmup;
    int init_buf = 75, term_buf = 50, base = 25;
    if (w < init_buf + term_buf + base) {
      init_buf = static_cast<int>(0.15 * w);
      term_buf = static_cast<int>(0.10 * w);
      base = w - init_buf - term_buf;
    }
    window_ends_.clear();
    int start = init_buf, size = base;
    while (start + size < w - term_buf) {
      if (start + size + 2 * size >= w - term_buf) {
        window_ends_.push_back(w - term_buf - 1);
        start = w - term_buf;
      } else {
        window_ends_.push_back(start + size - 1);
        start += size;
        size *= 2;
      }
    }
    if (window_ends_.empty() && base > 0) window_ends_.push_back(w - term_buf - 1);
    mass_begin_ = init_buf;
    mass_end_ = w - term_buf;
  }

  bool in_mass_window(int it) const { return it >= mass_begin_ && it < mass_end_; }
  bool is_window_end(int it) const {
    for (int e : window_ends_)
      if (it == e) return true;
    return false;
  }

  const LogpGrad& f_;
  int dim_;
  SamplerConfig cfg_;
  Rng rng_;
  State cur_;
  Eigen::VectorXd inv_mass_;
  double eps_ = 1.0;
  double mu_ = 0.0, hbar_ = 0.0, log_eps_bar_ = 0.0;
  long adapt_count_ = 0;
  std::vector<int> window_ends_;
  int mass_begin_ = 0, mass_end_ = 0;
};

}  // namespace nuts_detail

inline Trace run_nuts(const LogpGrad& logp_grad, int dim, const SamplerConfig& config,
                      const Eigen::VectorXd* init = nullptr) {
  config.validate();
  Trace trace;
  trace.dim = dim;
  trace.draws.resize(config.chains);
  trace.divergent.resize(config.chains);
  trace.energy_error.resize(config.chains);
  trace.accept_stat.resize(config.chains);
  trace.treedepth.resize(config.chains);
  trace.step_size.resize(config.chains);
  trace.mass_diag.resize(config.chains);

  auto run_chain = [&](int c) {
    nuts_detail::Chain chain(logp_grad, dim, config, c);
    chain.initialize(init);
    chain.run(trace.draws[c], trace.divergent[c], trace.energy_error[c], trace.accept_stat[c],
              trace.treedepth[c], trace.step_size[c], trace.mass_diag[c]);
  };

  const int workers = std::min(std::max(1, config.threads), config.chains);
  if (workers == 1) {
    for (int c = 0; c < config.chains; ++c) run_chain(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(config.chains);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1)) {
          try {
            run_chain(c);
          } catch (...) {
            errs[c] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  return trace;
}

}  // namespace dsm
