#pragma once

// Unconstrained <-> constrained transforms for the sampler state: the
// stick-breaking simplex map with its log-Jacobian and vector-Jacobian
// product, and the scalar logit map for the Beta-marginal variants.
//
// Everything is carried on the log scale internally.  Small-alpha Dirichlet
// states push the unconstrained coordinates far enough that sigmoids
// saturate in double precision; densities and gradients must stay finite
// there, so log z and log(1-z) are computed from log1p_exp and the VJP is
// expressed in x * grad products.

#include <cmath>

#include <Eigen/Dense>

#include "dsm/distributions.hpp"

namespace dsm::transforms {

struct StickBreak {
  Eigen::VectorXd x;      // simplex, size K (entries can underflow to 0)
  Eigen::VectorXd log_x;  // finite for any finite input
  Eigen::VectorXd z;      // broken sticks, size K-1
  Eigen::VectorXd omz;    // 1 - z, computed without cancellation
  double log_jac = 0.0;
};

// u in R^{K-1} -> simplex in R^K.  The log(K-1-k) offset centers u = 0 at
// the uniform simplex.
inline StickBreak simplex_from_unconstrained(const Eigen::VectorXd& u) {
  const int K = static_cast<int>(u.size()) + 1;
  StickBreak s;
  s.x.resize(K);
  s.log_x.resize(K);
  s.z.resize(K - 1);
  s.omz.resize(K - 1);
  double log_rem = 0.0, log_jac = 0.0;
  for (int k = 0; k < K - 1; ++k) {
    const double v = u[k] - std::log(static_cast<double>(K - 1 - k));
    const double log_z = -dist::log1p_exp(-v);   // log sigmoid(v)
    const double log_omz = -dist::log1p_exp(v);  // log sigmoid(-v)
    s.z[k] = std::exp(log_z);
    s.omz[k] = std::exp(log_omz);
    s.log_x[k] = log_rem + log_z;
    s.x[k] = std::exp(s.log_x[k]);
    log_jac += log_z + log_omz + log_rem;
    log_rem += log_omz;
  }
  s.log_x[K - 1] = log_rem;
  s.x[K - 1] = std::exp(log_rem);
  s.log_jac = log_jac;
  return s;
}

inline Eigen::VectorXd unconstrained_from_simplex(const Eigen::VectorXd& x) {
  const int K = static_cast<int>(x.size());
  // suffix sums keep the stick remainders positive even when one component
  // carries nearly all the mass
  Eigen::VectorXd suffix(K + 1);
  suffix[K] = 0.0;
  for (int k = K - 1; k >= 0; --k) suffix[k] = suffix[k + 1] + x[k];
  Eigen::VectorXd u(K - 1);
  for (int k = 0; k < K - 1; ++k)
    u[k] = std::log(x[k]) - std::log(suffix[k + 1]) + std::log(static_cast<double>(K - 1 - k));
  return u;
}

// Pulls a gradient w.r.t. the simplex back to the unconstrained scale.
// q_k must be x_k * dL/dx_k, which stays finite where x_k underflows.
// When with_log_jac is set, the gradient of the transform's log-Jacobian is
// added (the sampler differentiates the density on unconstrained space).
inline Eigen::VectorXd stick_break_vjp(const StickBreak& s, const Eigen::VectorXd& q,
                                       bool with_log_jac) {
  const int K = static_cast<int>(s.x.size());
  Eigen::VectorXd grad_u(K - 1);
  double suffix = q[K - 1];
  for (int k = K - 2; k >= 0; --k) {
    grad_u[k] = s.omz[k] * q[k] - s.z[k] * suffix;
    if (with_log_jac)
      grad_u[k] += 1.0 - 2.0 * s.z[k] - static_cast<double>(K - 2 - k) * s.z[k];
    suffix += q[k];
  }
  return grad_u;
}

// Scalar logit map for (0,1)-valued parameters, log-scale variants included.
inline double unit_from_unconstrained(double u) { return dist::sigmoid(u); }
inline double log_unit_from_unconstrained(double u) { return -dist::log1p_exp(-u); }
inline double log_unit_complement(double u) { return -dist::log1p_exp(u); }
inline double unit_log_jac_from_unconstrained(double u) {
  return log_unit_from_unconstrained(u) + log_unit_complement(u);
}
inline double unit_log_jac(double x) { return std::log(x) + std::log1p(-x); }

}  // namespace dsm::transforms
