#pragma once

// Predictive evaluation on posterior ensembles: RMSE of the posterior-mean
// prediction, empirical CRPS, predictive negative log-likelihood, accuracy
// and expected calibration error.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dsm/distributions.hpp"

namespace dsm::metrics {

struct PredictiveEnsemble {
  Eigen::MatrixXd draws;  // n_test x M: f draws (regression) or probabilities
  Eigen::VectorXd sigma;  // per-draw noise scale, for density evaluation

  long n_test() const { return draws.rows(); }
  long n_draws() const { return draws.cols(); }
  void require_nonempty() const {
    if (draws.rows() == 0 || draws.cols() == 0)
      throw std::invalid_argument("PredictiveEnsemble: empty");
  }
};

inline double rmse(const PredictiveEnsemble& e, const Eigen::VectorXd& y) {
  e.require_nonempty();
  const Eigen::VectorXd mean_pred = e.draws.rowwise().mean();
  return std::sqrt((mean_pred - y).squaredNorm() / static_cast<double>(y.size()));
}

// (1/M) sum |x_i - y| - (1/2M^2) sum_ij |x_i - x_j|, sorted O(M log M) form
inline double crps_point(Eigen::VectorXd draws, double y) {
  const auto M = static_cast<double>(draws.size());
  if (draws.size() == 0) throw std::invalid_argument("crps: empty ensemble");
  double first = 0.0;
  for (int i = 0; i < draws.size(); ++i) first += std::abs(draws[i] - y);
  first /= M;
  std::sort(draws.data(), draws.data() + draws.size());
  double pair_sum = 0.0;  // = sum_ij |x_i - x_j|
  for (int k = 0; k < draws.size(); ++k)
    pair_sum += (2.0 * (k + 1.0) - 1.0 - M) * draws[k];
  pair_sum *= 2.0;
  return first - pair_sum / (2.0 * M * M);
}

inline double crps(const PredictiveEnsemble& e, const Eigen::VectorXd& y) {
  e.require_nonempty();
  double acc = 0.0;
  for (long i = 0; i < e.n_test(); ++i) acc += crps_point(e.draws.row(i), y[i]);
  return acc / static_cast<double>(e.n_test());
}

// mean over test points of -log[(1/M) sum_m N(y | f_m, sigma_m^2)]
inline double pnll(const PredictiveEnsemble& e, const Eigen::VectorXd& y) {
  e.require_nonempty();
  if (e.sigma.size() != e.n_draws())
    throw std::invalid_argument("pnll: sigma draws required");
  double acc = 0.0;
  const auto M = e.n_draws();
  Eigen::VectorXd logs(M);
  for (long i = 0; i < e.n_test(); ++i) {
    for (long m = 0; m < M; ++m)
      logs[m] = dist::log_normal(y[i], e.draws(i, m), e.sigma[m]);
    const double mx = logs.maxCoeff();
    acc += -(mx + std::log((logs.array() - mx).exp().sum() / static_cast<double>(M)));
  }
  return acc / static_cast<double>(e.n_test());
}

inline double accuracy(const PredictiveEnsemble& e, const Eigen::VectorXd& labels) {
  e.require_nonempty();
  const Eigen::VectorXd prob = e.draws.rowwise().mean();
  double correct = 0.0;
  for (long i = 0; i < prob.size(); ++i)
    correct += ((prob[i] >= 0.5 ? 1.0 : 0.0) == labels[i]) ? 1.0 : 0.0;
  return correct / static_cast<double>(prob.size());
}

// ECE with equal-width bins over the predicted-class confidence
inline double ece(const PredictiveEnsemble& e, const Eigen::VectorXd& labels, int bins = 10) {
  e.require_nonempty();
  const Eigen::VectorXd prob = e.draws.rowwise().mean();
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<long> count(bins, 0);
  for (long i = 0; i < prob.size(); ++i) {
    const double pred = (prob[i] >= 0.5) ? 1.0 : 0.0;
    const double conf = (pred == 1.0) ? prob[i] : 1.0 - prob[i];
    int b = std::min(bins - 1, static_cast<int>(conf * bins));
    conf_sum[b] += conf;
    acc_sum[b] += (pred == labels[i]) ? 1.0 : 0.0;
    ++count[b];
  }
  double e_sum = 0.0;
  const auto N = static_cast<double>(prob.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const auto nb = static_cast<double>(count[b]);
    e_sum += nb / N * std::abs(acc_sum[b] / nb - conf_sum[b] / nb);
  }
  return e_sum;
}

}  // namespace dsm::metrics
