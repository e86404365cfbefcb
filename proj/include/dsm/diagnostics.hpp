#pragma once

// Convergence diagnostics: rank-normalized split R-hat and bulk/tail
// effective sample sizes with Geyer's initial monotone sequence.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "dsm/nuts.hpp"

namespace dsm::diagnostics {

namespace detail {

inline std::vector<Eigen::VectorXd> split_chains(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) {
    const int n = static_cast<int>(c.size()) / 2;
    if (n < 1) continue;
    out.push_back(c.head(n));
    out.push_back(c.segment(n, n));
  }
  return out;
}

// pooled average ranks mapped through the normal quantile function
inline std::vector<Eigen::VectorXd> rank_normalize(const std::vector<Eigen::VectorXd>& seqs) {
  long total = 0;
  for (const auto& s : seqs) total += s.size();
  struct Item {
    double v;
    int seq;
    int idx;
  };
  std::vector<Item> items;
  items.reserve(total);
  for (int s = 0; s < static_cast<int>(seqs.size()); ++s)
    for (int i = 0; i < seqs[s].size(); ++i) items.push_back({seqs[s][i], s, i});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

  std::vector<Eigen::VectorXd> out(seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) out[s].resize(seqs[s].size());
  std::size_t i = 0;
  const double S = static_cast<double>(total);
  while (i < items.size()) {
    std::size_t j = i;
    while (j + 1 < items.size() && items[j + 1].v == items[i].v) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    const double u = (avg_rank - 0.375) / (S + 0.25);
    const double z = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
    for (std::size_t k = i; k <= j; ++k) out[items[k].seq][items[k].idx] = z;
    i = j + 1;
  }
  return out;
}

struct Variance {
  double W = 0.0;      // mean within-sequence variance
  double var_plus = 0.0;
  bool degenerate = true;
};

inline Variance pooled_variance(const std::vector<Eigen::VectorXd>& seqs) {
  Variance v;
  const int m = static_cast<int>(seqs.size());
  if (m < 2) return v;
  const auto n = static_cast<double>(seqs[0].size());
  if (n < 2) return v;
  Eigen::VectorXd means(m);
  double W = 0.0;
  for (int s = 0; s < m; ++s) {
    means[s] = seqs[s].mean();
    W += (seqs[s].array() - means[s]).square().sum() / (n - 1.0);
  }
  W /= m;
  const double grand = means.mean();
  const double B_over_n = (means.array() - grand).square().sum() / (m - 1.0);
  v.W = W;
  v.var_plus = (n - 1.0) / n * W + B_over_n;
  v.degenerate = !(v.var_plus > 1e-300) || !std::isfinite(v.var_plus);
  return v;
}

// per-sequence autocovariance at lag t with denominator n
inline double autocov(const Eigen::VectorXd& x, int t, double mean) {
  const int n = static_cast<int>(x.size());
  double s = 0.0;
  for (int i = 0; i < n - t; ++i) s += (x[i] - mean) * (x[i + t] - mean);
  return s / n;
}

// combined-chain ESS (Vehtari et al. 2021) on already-prepared sequences
inline double ess_core(const std::vector<Eigen::VectorXd>& seqs) {
  const int m = static_cast<int>(seqs.size());
  if (m < 2) return 0.0;
  const int n = static_cast<int>(seqs[0].size());
  if (n < 4) return 0.0;
  const Variance v = pooled_variance(seqs);
  if (v.degenerate) return 0.0;

  Eigen::VectorXd means(m), vars(m);
  for (int s = 0; s < m; ++s) means[s] = seqs[s].mean();

  auto rho_hat = [&](int t) {
    double acov = 0.0;
    for (int s = 0; s < m; ++s) acov += autocov(seqs[s], t, means[s]);
    acov /= m;
    return 1.0 - (v.W - acov) / v.var_plus;
  };

  // Geyer initial monotone positive sequence
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  double rho_even = rho_hat(0);  // == 1 - (W - W_biased)/var_plus, close to 1
  double rho_odd = (n > 1) ? rho_hat(1) : 0.0;
  double pair = rho_even + rho_odd;
  int t = 0;
  while (pair > 0.0 && t + 2 < n) {
    pair = std::min(pair, prev_pair);
    tau += pair;
    prev_pair = pair;
    t += 2;
    rho_even = rho_hat(t);
    rho_odd = (t + 1 < n) ? rho_hat(t + 1) : 0.0;
    pair = rho_even + rho_odd;
  }
  tau = 2.0 * tau - 1.0;  // = 1 + 2 sum rho
  if (tau < 1.0 / std::log10(static_cast<double>(n * m) + 10.0)) {
    tau = 1.0 / std::log10(static_cast<double>(n * m) + 10.0);  // Stan's anti-thinning cap
  }
  return static_cast<double>(n) * m / tau;
}

inline double quantile_of(const std::vector<Eigen::VectorXd>& chains, double q) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.data(), c.data() + c.size());
  std::sort(all.begin(), all.end());
  const double pos = q * (static_cast<double>(all.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  return (lo + 1 < all.size()) ? all[lo] * (1.0 - frac) + all[lo + 1] * frac : all.back();
}

}  // namespace detail

// Rank-normalized split R-hat; exactly 1 for degenerate (zero-variance) input.
inline double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  auto seqs = detail::split_chains(chains);
  if (seqs.size() < 2) return 1.0;
  bool constant = true;
  for (const auto& s : seqs)
    if (s.size() > 0 && (s.array() != seqs[0][0]).any()) constant = false;
  if (constant) return 1.0;
  seqs = detail::rank_normalize(seqs);
  const auto v = detail::pooled_variance(seqs);
  if (v.degenerate || v.W <= 0.0) return 1.0;
  return std::sqrt(v.var_plus / v.W);
}

struct EssResult {
  double bulk = 0.0;
  double tail = 0.0;
};

inline EssResult ess(const std::vector<Eigen::VectorXd>& chains) {
  EssResult r;
  auto seqs = detail::split_chains(chains);
  if (seqs.size() < 2) return r;
  bool constant = true;
  for (const auto& s : seqs)
    if (s.size() > 0 && (s.array() != seqs[0][0]).any()) constant = false;
  if (constant) return r;

  r.bulk = detail::ess_core(detail::rank_normalize(seqs));

  auto indicator_ess = [&](double q) {
    const double cut = detail::quantile_of(chains, q);
    std::vector<Eigen::VectorXd> ind;
    ind.reserve(seqs.size());
    for (const auto& s : seqs)
      ind.push_back((s.array() <= cut).cast<double>().matrix());
    return detail::ess_core(ind);
  };
  r.tail = std::min(indicator_ess(0.05), indicator_ess(0.95));
  return r;
}

inline double split_rhat(const Trace& trace, int coordinate) {
  return split_rhat(trace.coordinate(coordinate));
}
inline EssResult ess(const Trace& trace, int coordinate) {
  return ess(trace.coordinate(coordinate));
}

}  // namespace dsm::diagnostics
