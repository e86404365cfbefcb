#pragma once

// Log densities of the distributions appearing in the prior hierarchy.
// All are plain functions of the constrained variable; change-of-variable
// terms live with the transforms.

#include <cmath>

#include <Eigen/Dense>

namespace dsm::dist {

inline constexpr double kLnTwoPi = 1.8378770664093454836;

inline double log_std_normal(double z) { return -0.5 * z * z - 0.5 * kLnTwoPi; }

inline double log_normal(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - 0.5 * kLnTwoPi - std::log(sd);
}

// Half-Cauchy on x > 0 with scale s.
inline double log_half_cauchy(double x, double s) {
  return std::log(2.0 / M_PI) - std::log(s) - std::log1p((x / s) * (x / s));
}

// Half-Student-t on x > 0 with nu degrees of freedom, unit scale.
inline double log_half_student_t(double x, double nu) {
  return std::log(2.0) + std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

// Inverse gamma with shape a and rate b (mean b/(a-1) for a > 1).
inline double log_inv_gamma(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

inline double log_beta(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// Symmetric Dirichlet(alpha, ..., alpha) on the simplex.
inline double log_dirichlet_sym(const Eigen::VectorXd& x, double alpha) {
  const auto p = static_cast<double>(x.size());
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::log(x[i]);
  return (alpha - 1.0) * s + std::lgamma(p * alpha) - p * std::lgamma(alpha);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double sigmoid(double x) {
  return (x >= 0.0) ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  return (x > 0.0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace dsm::dist
