#pragma once

// Scalar shrinkage theory: kappa and its prior densities/moments under
// horseshoe, Student-t and Dirichlet-scale-mixture local scales, the
// regularized-kappa shift, effective model size, and the dependence
// structure of the variance components.
//
// Every closed hypergeometric form has a Beta-quadrature twin; the
// quadrature path is the reference and the fallback wherever the series
// region ends.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "dsm/quadrature.hpp"
#include "dsm/rng.hpp"
#include "dsm/specfun.hpp"

namespace dsm::shrinkage {

struct ShrinkageContext {
  double z = 1.0;      // z_j = sqrt(n) sigma^-1 tau s_j
  double alpha = 0.1;  // Dirichlet concentration
  int p = 2;           // group size
  double nu = 1.0;     // local-scale Student-t df

  void validate() const {
    if (!(z > 0.0)) throw std::domain_error("ShrinkageContext: z > 0 required");
    if (!(alpha > 0.0) || p < 1 || !(nu > 0.0))
      throw std::domain_error("ShrinkageContext: invalid parameters");
  }
  double beta() const { return (static_cast<double>(p) - 1.0) * alpha; }
};

inline double kappa(double z, double lambda_sq, double xi) {
  return 1.0 / (1.0 + z * z * lambda_sq * xi);
}

// kappa_tilde = (1-b) kappa + b, the slab-induced shift into (b, 1).
inline double regularized_kappa(double kappa_val, double b) {
  return (1.0 - b) * kappa_val + b;
}

inline double m_eff_scalar(const Eigen::VectorXd& kappas) {
  return (1.0 - kappas.array()).sum();
}

namespace detail {

inline void check_open_unit(double kappa_val, double one_minus_kappa) {
  if (!(kappa_val > 0.0 && one_minus_kappa > 0.0))
    throw std::domain_error("kappa density: evaluation only inside (0,1)");
}

// E_xi[ xi^k g(xi) ] under Beta(alpha, beta) by tanh-sinh quadrature.
// g is supplied as log g(xi) for stability at extreme s.
template <typename LogG>
double beta_expectation_quad(double k, double alpha, double beta, const LogG& log_g) {
  if (beta <= 0.0) {
    // degenerate p = 1 case: xi == 1 almost surely
    return std::exp(log_g(1.0, 0.0));
  }
  const double ln_b = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  auto f = [&](double x, double xc) {
    const double omx = (x > 0.5) ? xc : 1.0 - x;
    const double lx = (x > 0.5) ? std::log1p(-omx) : std::log(x);
    return std::exp((alpha + k - 1.0) * lx + (beta - 1.0) * std::log(omx) - ln_b +
                    log_g(x, omx));
  };
  return quadrature::integrate_01(f, 1e-11);
}

// (x)_k via log gamma, arbitrary real order k with x > 0, x + k > 0.
inline double poch_ratio(double x, double k) {
  return std::exp(std::lgamma(x + k) - std::lgamma(x));
}

}  // namespace detail

// Lemma "Expectation of transformed Beta variable I":
// E[xi^k / (1+s xi)^a] = (alpha)_k/(alpha+beta)_k 2F1(a, alpha+k; alpha+beta+k; -s).
inline double beta_expectation_I(double k, double a, double s, double alpha, double beta) {
  if (!(s > -1.0)) throw std::domain_error("beta_expectation_I: s > -1 required");
  if (!(k > -alpha)) throw std::domain_error("beta_expectation_I: k > -alpha required");
  if (beta > 0.0) {
    auto r = specfun::hyp2f1(a, alpha + k, alpha + beta + k, -s);
    if (r.converged) {
      const double ratio = std::exp(std::lgamma(alpha + k) - std::lgamma(alpha) +
                                    std::lgamma(alpha + beta) - std::lgamma(alpha + beta + k));
      return ratio * r.value;
    }
  }
  return detail::beta_expectation_quad(
      k, alpha, beta, [&](double x, double) { return -a * std::log1p(s * x); });
}

// Lemma "Expectation of transformed Beta variable II":
// E[xi^k / (1+s sqrt(xi))^a] via the even/odd 3F2 split for s^2 < 1 and
// direct quadrature otherwise.
inline double beta_expectation_II(double k, double a, double s, double alpha, double beta) {
  if (!(s > -1.0)) throw std::domain_error("beta_expectation_II: s > -1 required");
  if (!(k > -alpha)) throw std::domain_error("beta_expectation_II: k > -alpha required");
  if (s * s < 1.0 && beta > 0.0) {
    auto even = specfun::hyp3f2(0.5 * a, 0.5 * (a + 1.0), alpha + k, 0.5, alpha + beta + k,
                                s * s);
    auto odd = specfun::hyp3f2(0.5 * (a + 1.0), 0.5 * (a + 2.0), alpha + k + 0.5, 1.5,
                               alpha + beta + k + 0.5, s * s);
    if (even.converged && odd.converged) {
      const double ratio = std::exp(std::lgamma(alpha + k) - std::lgamma(alpha) +
                                    std::lgamma(alpha + beta) - std::lgamma(alpha + beta + k));
      const double half_ratio = detail::poch_ratio(alpha + k, 0.5) /
                                detail::poch_ratio(alpha + beta + k, 0.5);
      return ratio * (even.value - s * a * half_ratio * odd.value);
    }
  }
  return detail::beta_expectation_quad(
      k, alpha, beta, [&](double x, double) { return -a * std::log1p(s * std::sqrt(x)); });
}

// Horseshoe kappa prior (local scale half-Cauchy), Piironen-Vehtari form.
inline double horseshoe_kappa_density(double kappa_val, double z,
                                      double one_minus_kappa = -1.0) {
  const double omk = (one_minus_kappa >= 0.0) ? one_minus_kappa : 1.0 - kappa_val;
  detail::check_open_unit(kappa_val, omk);
  return (z / M_PI) / (z * z * kappa_val + omk) / std::sqrt(kappa_val * omk);
}

// Lemma "A priori distribution of shrinkage factor for Student-t local
// scale"; nu = 1 reduces to the horseshoe density.
inline double student_kappa_density(double kappa_val, double z, double nu,
                                    double one_minus_kappa = -1.0) {
  const double omk = (one_minus_kappa >= 0.0) ? one_minus_kappa : 1.0 - kappa_val;
  detail::check_open_unit(kappa_val, omk);
  const double s = kappa_val * nu * z * z / omk;
  const double ln_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * M_PI) + 0.5 * (nu + 1.0) * std::log(nu) +
                      nu * std::log(z);
  const double ln_val = ln_c + (0.5 * nu - 1.0) * std::log(kappa_val) -
                        (0.5 * nu + 1.0) * std::log(omk) - 0.5 * (nu + 1.0) * std::log1p(s);
  return std::exp(ln_val);
}

// Theorem "marginal prior distribution of kappa" for the DSM prior:
// C(nu,z) (alpha)_{nu/2}/(p alpha)_{nu/2} kappa^{nu/2-1} (1-kappa)^{-nu/2-1}
//   2F1((nu+1)/2, alpha+nu/2; p alpha+nu/2; -kappa nu z^2/(1-kappa)).
// The hypergeometric factor equals E[xi^{nu/2} (1+s xi)^{-(nu+1)/2}] up to
// the Pochhammer ratio; when the series region fails the expectation is
// computed by Beta quadrature instead.
inline double dsm_kappa_density(double kappa_val, const ShrinkageContext& ctx,
                                double one_minus_kappa = -1.0) {
  ctx.validate();
  const double omk = (one_minus_kappa >= 0.0) ? one_minus_kappa : 1.0 - kappa_val;
  detail::check_open_unit(kappa_val, omk);
  const double nu = ctx.nu, z = ctx.z, alpha = ctx.alpha;
  const double pa = static_cast<double>(ctx.p) * alpha;
  const double s = kappa_val * nu * z * z / omk;
  const double ln_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * M_PI) + 0.5 * (nu + 1.0) * std::log(nu) +
                      nu * std::log(z);
  const double ln_shape =
      (0.5 * nu - 1.0) * std::log(kappa_val) - (0.5 * nu + 1.0) * std::log(omk);

  // log of E[xi^{nu/2} (1+s xi)^{-(nu+1)/2}]; the expectation underflows in
  // linear space deep in the kappa -> 1 tail, so the s^{-a} factor is pulled
  // out on that route
  const double a_exp = 0.5 * (nu + 1.0);
  double ln_expectation = std::numeric_limits<double>::quiet_NaN();
  if (std::isfinite(s)) {
    auto r = specfun::hyp2f1(a_exp, alpha + 0.5 * nu, pa + 0.5 * nu, -s);
    if (r.converged && r.value > 0.0 && std::isfinite(r.value)) {
      ln_expectation = std::lgamma(alpha + 0.5 * nu) - std::lgamma(alpha) + std::lgamma(pa) -
                       std::lgamma(pa + 0.5 * nu) + std::log(r.value);
    }
  }
  if (!std::isfinite(ln_expectation)) {
    if (std::isfinite(s) && s < 1e12) {
      const double e = detail::beta_expectation_quad(
          0.5 * nu, alpha, ctx.beta(),
          [&](double x, double) { return -a_exp * std::log1p(s * x); });
      ln_expectation = std::log(e);
    } else {
      const double inv_s = std::isfinite(s) ? 1.0 / s : 0.0;
      const double scaled = detail::beta_expectation_quad(
          0.5 * nu, alpha, ctx.beta(),
          [&](double x, double) { return -a_exp * std::log(inv_s + x); });
      ln_expectation = std::log(scaled) - a_exp * std::log(s);
    }
  }
  return std::exp(ln_c + ln_shape + ln_expectation);
}

// E[kappa] for the Dirichlet horseshoe (nu = 1): two-term 2F1 form inside
// the unit disc, Beta quadrature of E[1/(1+z sqrt(xi))] otherwise.
inline double dsm_kappa_mean(const ShrinkageContext& ctx) {
  ctx.validate();
  if (ctx.nu != 1.0) throw std::domain_error("dsm_kappa_mean: closed form requires nu = 1");
  const double z = ctx.z, alpha = ctx.alpha;
  const double pa = static_cast<double>(ctx.p) * alpha;
  if (z < 1.0 && ctx.p > 1) {
    auto f1 = specfun::hyp2f1(1.0, alpha, pa, z * z);
    auto f2 = specfun::hyp2f1(1.0, alpha + 0.5, pa + 0.5, z * z);
    if (f1.converged && f2.converged) {
      const double ratio = detail::poch_ratio(alpha, 0.5) / detail::poch_ratio(pa, 0.5);
      return f1.value - z * ratio * f2.value;
    }
  }
  return detail::beta_expectation_quad(
      0.0, alpha, ctx.beta(),
      [&](double x, double) { return -std::log1p(z * std::sqrt(x)); });
}

// Var[kappa] for nu = 1, by the proof's decomposition
//   Var = (z/2) E[sqrt(xi)/(1+z sqrt(xi))^2] + E[1/(1+z sqrt(xi))^2] - mean^2,
// with each expectation evaluated by the transformed-Beta lemma.
inline double dsm_kappa_variance(const ShrinkageContext& ctx) {
  ctx.validate();
  if (ctx.nu != 1.0) throw std::domain_error("dsm_kappa_variance: closed form requires nu = 1");
  const double z = ctx.z, alpha = ctx.alpha, beta = ctx.beta();
  const double e_half = beta_expectation_II(0.5, 2.0, z, alpha, beta);
  const double e_zero = beta_expectation_II(0.0, 2.0, z, alpha, beta);
  const double mean = dsm_kappa_mean(ctx);
  return 0.5 * z * e_half + e_zero - mean * mean;
}

// ---- dependence structure of the variance components ----

struct DependenceInputs {
  int p = 2;
  double alpha = 1.0;
  double mean_lambda_sq = 1.0;  // E[lambda_tilde^2]
  double var_lambda_sq = 0.0;   // Var(lambda_tilde^2)

  void validate() const {
    if (p < 1 || !(alpha > 0.0) || var_lambda_sq < 0.0)
      throw std::domain_error("DependenceInputs: invalid");
  }
};

struct DependenceResult {
  double covariance = 0.0;
  double cv_sq = 0.0;       // Var / E^2
  double threshold = 0.0;   // 1/(p alpha)
  int sign = 0;             // -1, 0, +1
};

// Cov(V_jk, V_jl) = (p alpha Var - E^2) / (p^2 (p alpha + 1)); the sign
// flips where CV^2 crosses 1/(p alpha).
inline DependenceResult variance_component_covariance(const DependenceInputs& in) {
  in.validate();
  const double pa = static_cast<double>(in.p) * in.alpha;
  const double p2 = static_cast<double>(in.p) * static_cast<double>(in.p);
  DependenceResult r;
  r.covariance =
      (pa * in.var_lambda_sq - in.mean_lambda_sq * in.mean_lambda_sq) / (p2 * (pa + 1.0));
  r.cv_sq = in.var_lambda_sq / (in.mean_lambda_sq * in.mean_lambda_sq);
  r.threshold = 1.0 / pa;
  const double diff = r.cv_sq - r.threshold;
  r.sign = (diff > 0.0) - (diff < 0.0);
  return r;
}

struct CvSqEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double mean = 0.0;  // E[lambda_tilde^2]
  double var = 0.0;   // Var(lambda_tilde^2)
};

// Monte Carlo dispersion ratio CV^2(lambda_tilde^2) at fixed (c^2, tau).
// scale_sampler draws the raw local scale lambda.
inline CvSqEstimate cv_squared_mc(const std::function<double(Rng&)>& scale_sampler,
                                  double c_sq_value, double tau_value, long draws,
                                  std::uint64_t seed = 1) {
  if (draws < 10000) throw std::domain_error("cv_squared_mc: need at least 1e4 draws");
  Rng rng(seed);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  const double t2 = tau_value * tau_value;
  for (long i = 0; i < draws; ++i) {
    const double lam = scale_sampler(rng);
    const double l2 = lam * lam;
    const double v = c_sq_value * l2 / (c_sq_value + t2 * l2);
    m1 += v;
    m2 += v * v;
    m3 += v * v * v;
    m4 += v * v * v * v;
  }
  const auto n = static_cast<double>(draws);
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  CvSqEstimate e;
  e.mean = m1;
  e.var = m2 - m1 * m1;
  e.value = e.var / (m1 * m1);
  // delta method on g(m1, m2) = m2/m1^2 - 1
  const double g1 = -2.0 * m2 / (m1 * m1 * m1);
  const double g2 = 1.0 / (m1 * m1);
  const double v11 = (m2 - m1 * m1) / n;
  const double v22 = (m4 - m2 * m2) / n;
  const double v12 = (m3 - m1 * m2) / n;
  e.std_error = std::sqrt(std::max(0.0, g1 * g1 * v11 + 2.0 * g1 * g2 * v12 + g2 * g2 * v22));
  return e;
}

}  // namespace dsm::shrinkage
