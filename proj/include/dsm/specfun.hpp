#pragma once

// Special functions backing the shrinkage theory: log-gamma, Pochhammer
// symbols (integer and half-integer order), and the hypergeometric
// functions 2F1 / 3F2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "dsm/quadrature.hpp"

namespace dsm::specfun {

enum class HypMethod { series, pfaff_transform, euler_integral, large_z_transform };

struct HypergeometricResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t terms_used = 0;
  HypMethod method = HypMethod::series;
};

inline constexpr std::size_t kMaxSeriesTerms = 10000;

inline double ln_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("ln_gamma: require x > 0");
  return std::lgamma(x);
}

// log|Gamma(x)| with sign, defined away from the poles at 0, -1, -2, ...
inline std::pair<double, int> signed_ln_gamma(double x) {
  if (x > 0.0) return {std::lgamma(x), 1};
  if (x == std::floor(x)) return {std::numeric_limits<double>::infinity(), 0};  // pole
  const double lg = std::lgamma(x);
  // Gamma alternates sign on (-1,0), (-2,-1), ...
  const int sign = (static_cast<std::int64_t>(std::floor(x)) % 2 == 0) ? 1 : -1;
  return {lg, sign};
}

inline bool is_integer(double x, double tol = 1e-9) {
  return std::abs(x - std::round(x)) < tol;
}

inline bool is_half_integer(double x, double tol = 1e-9) {
  return is_integer(2.0 * x, tol);
}

// Rising factorial (x)_n = Gamma(x+n)/Gamma(x) for n a nonnegative integer
// or half-integer.  Integer orders use the exact product; half-integer
// orders the gamma-ratio form, which needs x > 0.
inline double pochhammer(double x, double n) {
  if (n < 0.0 || !is_half_integer(n))
    throw std::domain_error("pochhammer: order must be a nonnegative (half-)integer");
  if (n == 0.0) return 1.0;
  if (is_integer(n)) {
    const auto m = static_cast<std::int64_t>(std::llround(n));
    if (m <= 64) {
      double r = 1.0;
      for (std::int64_t i = 0; i < m; ++i) r *= (x + static_cast<double>(i));
      return r;
    }
    if (x <= 0.0) throw std::domain_error("pochhammer: large integer order needs x > 0");
    return std::exp(std::lgamma(x + n) - std::lgamma(x));
  }
  if (x <= 0.0) throw std::domain_error("pochhammer: half-integer order needs x > 0");
  return std::exp(std::lgamma(x + n) - std::lgamma(x));
}

// log of (x)_n for x > 0, used where p*alpha + nu/2 grows large.
inline double ln_pochhammer(double x, double n) {
  if (x <= 0.0) throw std::domain_error("ln_pochhammer: require x > 0");
  if (n == 0.0) return 0.0;
  return std::lgamma(x + n) - std::lgamma(x);
}

namespace detail {

// Maclaurin series of 2F1 for argument in [0, 1).  Terms are built by
// ratio updates; stops once |term| < 1e-15 |sum| holds three times in a
// row, capped at kMaxSeriesTerms.
inline HypergeometricResult hyp2f1_series(double a, double b, double c, double z,
                                          HypMethod tag) {
  HypergeometricResult r;
  r.method = tag;
  double term = 1.0, sum = 1.0;
  int small_streak = 0;
  for (std::size_t n = 0; n < kMaxSeriesTerms; ++n) {
    const double dn = static_cast<double>(n);
    term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-15 * std::abs(sum)) {
      if (++small_streak >= 3) {
        r.value = sum;
        r.converged = true;
        r.terms_used = n + 1;
        return r;
      }
    } else {
      small_streak = 0;
    }
    if (!std::isfinite(sum)) break;
  }
  r.value = sum;
  r.terms_used = kMaxSeriesTerms;
  return r;
}

// DLMF 15.8.2: maps a strongly negative argument to 1/z.  Requires a - b
// not an integer; poles of 1/Gamma kill the corresponding term.
inline HypergeometricResult hyp2f1_large_negative(double a, double b, double c, double z) {
  HypergeometricResult r;
  r.method = HypMethod::large_z_transform;
  const double w = 1.0 / z;  // in (-1, 0)
  const double log_mz = std::log(-z);

  const auto [lg_c, sg_c] = signed_ln_gamma(c);
  const auto [lg_ba, sg_ba] = signed_ln_gamma(b - a);
  const auto [lg_ab, sg_ab] = signed_ln_gamma(a - b);
  const auto [lg_a, sg_a] = signed_ln_gamma(a);
  const auto [lg_b, sg_b] = signed_ln_gamma(b);
  const auto [lg_ca, sg_ca] = signed_ln_gamma(c - a);
  const auto [lg_cb, sg_cb] = signed_ln_gamma(c - b);

  double value = 0.0;
  std::size_t terms = 0;
  // term with (-z)^{-a}: coefficient Gamma(c)Gamma(b-a) / (Gamma(b)Gamma(c-a))
  if (sg_b != 0 && sg_ca != 0 && std::isfinite(lg_ba)) {
    auto inner = hyp2f1_series(a, a - c + 1.0, a - b + 1.0, w, HypMethod::large_z_transform);
    if (!inner.converged) return r;
    terms += inner.terms_used;
    const double lg = lg_c + lg_ba - lg_b - lg_ca - a * log_mz;
    value += sg_c * sg_ba * sg_b * sg_ca * std::exp(lg) * inner.value;
  }
  // term with (-z)^{-b}
  if (sg_a != 0 && sg_cb != 0 && std::isfinite(lg_ab)) {
    auto inner = hyp2f1_series(b, b - c + 1.0, b - a + 1.0, w, HypMethod::large_z_transform);
    if (!inner.converged) return r;
    terms += inner.terms_used;
    const double lg = lg_c + lg_ab - lg_a - lg_cb - b * log_mz;
    value += sg_c * sg_ab * sg_a * sg_cb * std::exp(lg) * inner.value;
  }
  r.value = value;
  r.converged = std::isfinite(value);
  r.terms_used = terms;
  return r;
}

// Euler's integral representation, valid for c > b > 0 and real z <= 1
// (the integrand stays real there; z = 1 additionally needs c - a - b > 0).
inline HypergeometricResult hyp2f1_euler(double a, double b, double c, double z) {
  HypergeometricResult r;
  r.method = HypMethod::euler_integral;
  if (!(c > b && b > 0.0)) return r;
  if (z > 1.0) return r;
  if (z == 1.0 && !(c - a - b > 0.0)) return r;
  const double ln_beta = std::lgamma(b) + std::lgamma(c - b) - std::lgamma(c);
  const auto f = [&](double t, double tc) {
    // tc = distance to the nearer endpoint, supplied by tanh-sinh
    const double one_minus_t = (t > 0.5) ? tc : 1.0 - t;
    const double lt = (t > 0.5) ? std::log1p(-one_minus_t) : std::log(t);
    const double lg = (b - 1.0) * lt + (c - b - 1.0) * std::log(one_minus_t) -
                      a * std::log1p(-z * t) - ln_beta;
    return std::exp(lg);
  };
  double err = 0.0;
  const double val = quadrature::integrate_01(f, 1e-10, &err);
  r.value = val;
  r.converged = std::isfinite(val) && err < 1e-6 * std::max(1.0, std::abs(val));
  return r;
}

}  // namespace detail

// Gauss hypergeometric function 2F1(a, b; c; z) for real arguments.
//   z in [0, 1): Maclaurin series.
//   z < 0:       Pfaff transform onto (0, 1), or the 1/z transform once the
//                mapped argument gets too close to 1 (kappa -> 1 regime).
//   z >= 1:      Euler integral when it is real-convergent, otherwise the
//                result is flagged non-converged.
inline HypergeometricResult hyp2f1(double a, double b, double c, double z) {
  if (c <= 0.0 && is_integer(c))
    throw std::domain_error("hyp2f1: c must not be a non-positive integer");
  if (z == 0.0) return {1.0, true, 0, HypMethod::series};

  if (z > 0.0 && z < 1.0) {
    auto r = detail::hyp2f1_series(a, b, c, z, HypMethod::series);
    if (r.converged) return r;
    return detail::hyp2f1_euler(a, b, c, z);
  }
  if (z < 0.0) {
    const double u = z / (z - 1.0);  // in (0, 1)
    if (u > 0.95 && !is_integer(a - b)) {
      auto r = detail::hyp2f1_large_negative(a, b, c, z);
      if (r.converged) return r;
    }
    // 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
    auto r = detail::hyp2f1_series(a, c - b, c, u, HypMethod::pfaff_transform);
    if (r.converged) {
      r.value *= std::pow(1.0 - z, -a);
      return r;
    }
    return detail::hyp2f1_euler(a, b, c, z);
  }
  return detail::hyp2f1_euler(a, b, c, z);
}

// 3F2(a1, a2, a3; b1, b2; z), series for |z| < 1 only.  Callers needing
// |z| >= 1 go through the Beta-quadrature path in the shrinkage module.
inline HypergeometricResult hyp3f2(double a1, double a2, double a3, double b1, double b2,
                                   double z) {
  if ((b1 <= 0.0 && is_integer(b1)) || (b2 <= 0.0 && is_integer(b2)))
    throw std::domain_error("hyp3f2: lower parameters must not be non-positive integers");
  HypergeometricResult r;
  if (z == 0.0) return {1.0, true, 0, HypMethod::series};
  if (std::abs(z) >= 1.0) return r;
  double term = 1.0, sum = 1.0;
  int small_streak = 0;
  for (std::size_t n = 0; n < kMaxSeriesTerms; ++n) {
    const double dn = static_cast<double>(n);
    term *= (a1 + dn) * (a2 + dn) * (a3 + dn) / ((b1 + dn) * (b2 + dn) * (dn + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-15 * std::abs(sum)) {
      if (++small_streak >= 3) {
        r.value = sum;
        r.converged = true;
        r.terms_used = n + 1;
        return r;
      }
    } else {
      small_streak = 0;
    }
    if (!std::isfinite(sum)) break;
  }
  r.value = sum;
  r.terms_used = kMaxSeriesTerms;
  return r;
}

}  // namespace dsm::specfun
