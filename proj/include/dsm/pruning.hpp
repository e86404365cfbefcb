#pragma once

// Magnitude pruning of the network weights (W1 and the output weights,
// never biases or scales), per posterior draw or via one posterior-mean
// mask, plus the sparsity-sweep evaluation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsm/bnn.hpp"
#include "dsm/metrics.hpp"
#include "dsm/nuts.hpp"
#include "dsm/parallel.hpp"

namespace dsm::pruning {

struct PruneMask {
  std::vector<std::uint8_t> keep;  // over [W1 entries..., w_out entries...]
  double sparsity = 0.0;

  long zeros() const {
    long z = 0;
    for (auto k : keep) z += (k == 0);
    return z;
  }
};

// one global magnitude threshold over the prunable set; ties broken by index
inline PruneMask mask_from_magnitudes(const Eigen::VectorXd& magnitudes, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw std::invalid_argument("pruning: sparsity in [0,1)");
  const long n = magnitudes.size();
  const auto n_zero = static_cast<long>(std::llround(sparsity * static_cast<double>(n)));
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    return magnitudes[a] < magnitudes[b];
  });
  PruneMask m;
  m.sparsity = sparsity;
  m.keep.assign(n, 1);
  for (long i = 0; i < n_zero; ++i) m.keep[order[i]] = 0;
  return m;
}

namespace detail {

// prunable weights of one draw: first-layer entries then output weights
inline Eigen::VectorXd prunable_weights(const Posterior& post, const Eigen::VectorXd& theta) {
  const Layout& L = post.layout();
  const ScaleAssembly a = post.assemble(theta);
  Eigen::VectorXd w(L.n_weights + L.w_out.size);
  w.head(L.n_weights) = a.w1;
  if (L.w_out.present())
    w.tail(L.w_out.size) = theta.segment(L.w_out.offset, L.w_out.size);
  return w;
}

inline Eigen::VectorXd predict_masked(const Posterior& post, const Eigen::VectorXd& theta,
                                      const PruneMask& mask, const Eigen::MatrixXd& Xq) {
  const Layout& L = post.layout();
  Eigen::VectorXd w = prunable_weights(post, theta);
  for (long i = 0; i < w.size(); ++i)
    if (!mask.keep[i]) w[i] = 0.0;
  if (L.kind == ModelKind::linear)
    return (Xq * w.head(L.n_weights)).array() + theta[L.b_out.offset];
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      W1(w.data(), L.H, L.p);
  Eigen::VectorXd f = Posterior::predict_with_weights(
      Xq, W1, theta.segment(L.b1.offset, L.H), w.tail(L.H), theta[L.b_out.offset]);
  if (L.task == Task::binary_classification)
    for (long i = 0; i < f.size(); ++i) f[i] = dist::sigmoid(f[i]);
  return f;
}

inline std::vector<Eigen::VectorXd> all_draws(const Trace& trace) {
  std::vector<Eigen::VectorXd> out;
  for (int c = 0; c < trace.n_chains(); ++c)
    for (int i = 0; i < trace.n_draws(); ++i) out.push_back(trace.draws[c].row(i).transpose());
  return out;
}

}  // namespace detail

// zero the smallest-|w| fraction of each draw's own weights, then predict
inline metrics::PredictiveEnsemble prune_per_sample(const Posterior& post, const Trace& trace,
                                                    double sparsity, const Eigen::MatrixXd& Xq,
                                                    int threads = 1) {
  const auto draws = detail::all_draws(trace);
  metrics::PredictiveEnsemble e;
  e.draws.resize(Xq.rows(), static_cast<long>(draws.size()));
  e.sigma.resize(draws.size());
  parallel_for(static_cast<long>(draws.size()), threads, [&](long m) {
    const auto mask =
        mask_from_magnitudes(detail::prunable_weights(post, draws[m]).cwiseAbs(), sparsity);
    e.draws.col(m) = detail::predict_masked(post, draws[m], mask, Xq);
    e.sigma[m] = post.sigma_of(draws[m]);
  });
  return e;
}

// one mask from the posterior mean of |w|, applied to every draw
inline metrics::PredictiveEnsemble posterior_prune(const Posterior& post, const Trace& trace,
                                                   double sparsity, const Eigen::MatrixXd& Xq,
                                                   int threads = 1) {
  const auto draws = detail::all_draws(trace);
  Eigen::VectorXd mean_abs;
  for (const auto& th : draws) {
    const Eigen::VectorXd w = detail::prunable_weights(post, th).cwiseAbs();
    if (mean_abs.size() == 0)
      mean_abs = w;
    else
      mean_abs += w;
  }
  mean_abs /= static_cast<double>(draws.size());
  const auto mask = mask_from_magnitudes(mean_abs, sparsity);

  metrics::PredictiveEnsemble e;
  e.draws.resize(Xq.rows(), static_cast<long>(draws.size()));
  e.sigma.resize(draws.size());
  parallel_for(static_cast<long>(draws.size()), threads, [&](long m) {
    e.draws.col(m) = detail::predict_masked(post, draws[m], mask, Xq);
    e.sigma[m] = post.sigma_of(draws[m]);
  });
  return e;
}

struct SweepRow {
  std::string scheme;
  double sparsity = 0.0;
  std::string metric;
  double value = 0.0;
};

// metric per (scheme, level); levels must be ascending
inline std::vector<SweepRow> sparsity_sweep(
    const Posterior& post, const Trace& trace, const std::vector<double>& levels,
    const Eigen::MatrixXd& Xq, const Eigen::VectorXd& yq, const std::string& metric_name,
    const std::function<double(const metrics::PredictiveEnsemble&, const Eigen::VectorXd&)>&
        metric,
    int threads = 1) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] < levels[i - 1])
      throw std::invalid_argument("sparsity_sweep: levels must be ascending");
  std::vector<SweepRow> rows;
  for (double s : levels) {
    rows.push_back({"prune_per_sample", s, metric_name,
                    metric(prune_per_sample(post, trace, s, Xq, threads), yq)});
    rows.push_back({"posterior_prune", s, metric_name,
                    metric(posterior_prune(post, trace, s, Xq, threads), yq)});
  }
  return rows;
}

}  // namespace dsm::pruning
