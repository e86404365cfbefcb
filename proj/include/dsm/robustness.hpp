#pragma once

// FGSM adversarial examples and the posterior robustness (p1) and safety
// (p2) estimators for binary classification networks.  The adversarial set
// T is the l-infinity ball searched by one FGSM step per posterior draw, so
// the estimates are lower bounds on the definitions' probabilities.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsm/bnn.hpp"
#include "dsm/nuts.hpp"
#include "dsm/parallel.hpp"

namespace dsm::robustness {

struct AttackConfig {
  double epsilon = 0.1;  // l-infinity radius (single value; callers sweep)
  std::vector<double> delta_fractions = {0.1, 0.25, 0.5, 0.75, 1.0};
  bool deltas_absolute = false;  // read delta_fractions as absolute thresholds
  int subset_size = 100;
  int n_draws = 100;  // posterior network samples entering the attack
  std::uint64_t seed = 1;

  void validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("AttackConfig: epsilon >= 0");
    for (double f : delta_fractions) {
      if (deltas_absolute && !(f >= 0.0))
        throw std::invalid_argument("AttackConfig: absolute deltas must be >= 0");
      if (!deltas_absolute && !(f > 0.0 && f <= 1.0))
        throw std::invalid_argument("AttackConfig: delta fractions in (0,1]");
    }
  }
};

namespace detail {

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

inline void require_classifier(const Posterior& post) {
  if (post.layout().task != Task::binary_classification)
    throw std::invalid_argument("robustness: classification model required");
}

// thin to the last n draws, spread over chains
inline std::vector<Eigen::VectorXd> thin_draws(const Trace& trace, int n) {
  std::vector<Eigen::VectorXd> all;
  for (int c = 0; c < trace.n_chains(); ++c)
    for (int i = 0; i < trace.n_draws(); ++i) all.push_back(trace.draws[c].row(i).transpose());
  if (n <= 0 || n >= static_cast<int>(all.size())) return all;
  std::vector<Eigen::VectorXd> out;
  const double step = static_cast<double>(all.size()) / n;
  for (int i = 0; i < n; ++i) out.push_back(all[static_cast<std::size_t>(i * step)]);
  return out;
}

}  // namespace detail

// network logit and its input gradient at one point
inline double logit_and_input_grad(const Posterior& post, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& x, Eigen::VectorXd* grad_x) {
  const Layout& L = post.layout();
  const ScaleAssembly a = post.assemble(theta);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      W1(a.w1.data(), L.H, L.p);
  const Eigen::VectorXd pre = W1 * x + theta.segment(L.b1.offset, L.H);
  const Eigen::VectorXd h = pre.array().tanh();
  const Eigen::VectorXd wL = theta.segment(L.w_out.offset, L.H);
  const double f = wL.dot(h) + theta[L.b_out.offset];
  if (grad_x) {
    const Eigen::VectorXd gate = wL.cwiseProduct((1.0 - h.array().square()).matrix());
    *grad_x = W1.transpose() * gate;
  }
  return f;
}

// x_adv = x + eps sign(grad_x CE(f(x), y)); the cross-entropy input gradient
// is (sigmoid(f) - y) * df/dx
inline Eigen::VectorXd fgsm(const Posterior& post, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x, double y, double epsilon) {
  detail::require_classifier(post);
  Eigen::VectorXd gx;
  const double f = logit_and_input_grad(post, theta, x, &gx);
  const double q = dist::sigmoid(f);
  Eigen::VectorXd adv = x;
  for (long j = 0; j < x.size(); ++j) adv[j] += epsilon * detail::sign((q - y) * gx[j]);
  return adv;
}

struct P1Row {
  double epsilon = 0.0;
  double delta = 0.0;
  double fraction = 0.0;  // P(softmax deviation >= delta) over draws
};

// p1 at one test point: fraction of posterior draws whose own FGSM point
// moves the softmax output by at least delta in l2 norm.  The binary-head
// softmax distance is sqrt(2) |q(x*) - q(x_adv)|.
inline std::vector<P1Row> estimate_p1(const Posterior& post, const Trace& trace,
                                      const Eigen::VectorXd& x_star, double y_star,
                                      const AttackConfig& cfg) {
  detail::require_classifier(post);
  cfg.validate();
  const auto draws = detail::thin_draws(trace, cfg.n_draws);
  std::vector<double> devs(draws.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    const double q0 = dist::sigmoid(logit_and_input_grad(post, draws[m], x_star, nullptr));
    const Eigen::VectorXd adv = fgsm(post, draws[m], x_star, y_star, cfg.epsilon);
    const double q1 = dist::sigmoid(logit_and_input_grad(post, draws[m], adv, nullptr));
    devs[m] = std::sqrt(2.0) * std::abs(q0 - q1);
  }
  std::vector<P1Row> rows;
  for (double frac : cfg.delta_fractions) {
    const double delta = cfg.deltas_absolute ? frac : frac * cfg.epsilon;
    double count = 0.0;
    for (double d : devs) count += (d >= delta) ? 1.0 : 0.0;
    rows.push_back({cfg.epsilon, delta, count / static_cast<double>(devs.size())});
  }
  return rows;
}

enum class SafetyBin { safe, partially_safe, unsafe };

inline std::string to_string(SafetyBin b) {
  switch (b) {
    case SafetyBin::safe: return "safe";
    case SafetyBin::partially_safe: return "partially_safe";
    case SafetyBin::unsafe: return "unsafe";
  }
  return "?";
}

struct P2Result {
  double fraction = 0.0;  // P(label change) over draws
  SafetyBin bin = SafetyBin::safe;
};

// p2 at one test point: fraction of draws whose predicted label flips at
// the draw's FGSM point; binned safe (0), partially safe ((0,1)), unsafe (1)
inline P2Result estimate_p2(const Posterior& post, const Trace& trace,
                            const Eigen::VectorXd& x_star, double y_star,
                            const AttackConfig& cfg) {
  detail::require_classifier(post);
  cfg.validate();
  const auto draws = detail::thin_draws(trace, cfg.n_draws);
  double flips = 0.0;
  for (const auto& th : draws) {
    const double f0 = logit_and_input_grad(post, th, x_star, nullptr);
    const Eigen::VectorXd adv = fgsm(post, th, x_star, y_star, cfg.epsilon);
    const double f1 = logit_and_input_grad(post, th, adv, nullptr);
    flips += ((f0 >= 0.0) != (f1 >= 0.0)) ? 1.0 : 0.0;
  }
  P2Result r;
  r.fraction = flips / static_cast<double>(draws.size());
  r.bin = (r.fraction == 0.0)
              ? SafetyBin::safe
              : ((r.fraction == 1.0) ? SafetyBin::unsafe : SafetyBin::partially_safe);
  return r;
}

struct SafetyTable {
  double safe = 0.0, partially_safe = 0.0, unsafe = 0.0;
};

// aggregate p2 bins over a random subset of test points
inline SafetyTable safety_table(const Posterior& post, const Trace& trace,
                                const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test,
                                const AttackConfig& cfg, int threads = 1) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<long> pick;
  const long n = X_test.rows();
  if (cfg.subset_size >= n) {
    for (long i = 0; i < n; ++i) pick.push_back(i);
  } else {
    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (long i = n - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<long>(rng.uniform() * (i + 1))]);
    pick.assign(idx.begin(), idx.begin() + cfg.subset_size);
  }
  std::vector<SafetyBin> bins(pick.size());
  parallel_for(static_cast<long>(pick.size()), threads, [&](long i) {
    bins[i] = estimate_p2(post, trace, X_test.row(pick[i]).transpose(), y_test[pick[i]], cfg)
                  .bin;
  });
  SafetyTable t;
  for (auto b : bins) {
    if (b == SafetyBin::safe) t.safe += 1.0;
    if (b == SafetyBin::partially_safe) t.partially_safe += 1.0;
    if (b == SafetyBin::unsafe) t.unsafe += 1.0;
  }
  const auto m = static_cast<double>(bins.size());
  t.safe /= m;
  t.partially_safe /= m;
  t.unsafe /= m;
  return t;
}

}  // namespace dsm::robustness
