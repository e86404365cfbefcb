#pragma once

// Single-hidden-layer network and Bayesian linear regression on a flat
// unconstrained parameter vector: layout, non-centred weight assembly,
// forward pass, likelihoods, joint log prior with all change-of-variable
// terms, and the exact reverse-mode gradient used by the sampler.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsm/distributions.hpp"
#include "dsm/priors.hpp"
#include "dsm/rng.hpp"
#include "dsm/transforms.hpp"

namespace dsm {

enum class Task { regression, binary_classification };
enum class ModelKind { bnn, linear };

struct NetworkShape {
  int p = 1;  // input dimension
  int H = 16; // hidden width
  int d = 1;  // output dimension (single head throughout)

  void validate() const {
    if (p < 1 || H < 1 || d < 1) throw std::invalid_argument("NetworkShape: dims must be >= 1");
    if (d != 1) throw std::invalid_argument("NetworkShape: only d = 1 is supported");
  }
};

struct Block {
  int offset = 0;
  int size = 0;
  bool present() const { return size > 0; }
};

// Index map from named parameter blocks into the flat unconstrained vector.
// The layout is a pure function of (kind, task, spec, shape).
struct Layout {
  ModelKind kind = ModelKind::bnn;
  Task task = Task::regression;
  PriorFamily family = PriorFamily::DHS;
  int p = 0, H = 0;
  int n_weights = 0;   // first-layer weights: H*p (bnn) or p (linear)
  int n_groups = 0;    // local scales: H (bnn) or p (linear)
  int n_simplex = 0;   // Dirichlet vectors: H (bnn), 1 (linear), 0 otherwise
  Block z_w, b1, w_out, b_out, log_tau, log_lambda, xi, log_c_sq, log_sigma;
  int dim = 0;

  static Layout make(ModelKind kind, Task task, const PriorSpec& spec,
                     const NetworkShape& shape) {
    shape.validate();
    spec.validate(shape.p);
    Layout l;
    l.kind = kind;
    l.task = task;
    l.family = spec.family;
    l.p = shape.p;
    l.H = (kind == ModelKind::bnn) ? shape.H : 1;
    l.n_weights = (kind == ModelKind::bnn) ? shape.H * shape.p : shape.p;
    l.n_groups = (kind == ModelKind::bnn) ? shape.H : shape.p;
    l.n_simplex = spec.has_simplex() ? ((kind == ModelKind::bnn) ? shape.H : 1) : 0;

    int off = 0;
    auto put = [&off](Block& b, int size) {
      b.offset = off;
      b.size = size;
      off += size;
    };
    put(l.z_w, l.n_weights);
    put(l.b1, kind == ModelKind::bnn ? shape.H : 0);
    put(l.w_out, kind == ModelKind::bnn ? shape.H : 0);
    put(l.b_out, 1);
    const bool scales = spec.has_scales();
    put(l.log_tau, scales ? 1 : 0);
    put(l.log_lambda, scales ? l.n_groups : 0);
    if (spec.has_simplex())
      put(l.xi, l.n_simplex * (l.p - 1));
    else if (spec.has_beta_xi())
      put(l.xi, l.n_weights);
    else
      put(l.xi, 0);
    put(l.log_c_sq, scales ? l.n_groups : 0);
    put(l.log_sigma, task == Task::regression ? 1 : 0);
    l.dim = off;
    return l;
  }

  // group/component bookkeeping for first-layer weight i
  int group_of(int i) const { return (kind == ModelKind::bnn) ? i / p : i; }
  int simplex_of(int i) const { return (kind == ModelKind::bnn) ? i / p : 0; }
  int component_of(int i) const { return (kind == ModelKind::bnn) ? i % p : i; }

  std::vector<std::string> coord_names() const {
    std::vector<std::string> names(dim);
    auto fill = [&](const Block& b, const std::string& base, int inner) {
      for (int i = 0; i < b.size; ++i) {
        std::string n = base;
        if (b.size > 1 || inner > 0) {
          if (inner > 1)
            n += "." + std::to_string(i / inner) + "." + std::to_string(i % inner);
          else
            n += "." + std::to_string(i);
        }
        names[b.offset + i] = n;
      }
    };
    fill(z_w, "z_w1", kind == ModelKind::bnn ? p : 1);
    fill(b1, "b1", 0);
    fill(w_out, "w_out", 0);
    fill(b_out, "b_out", 0);
    fill(log_tau, "log_tau", 0);
    fill(log_lambda, "log_lambda", 0);
    if (n_simplex > 0)
      fill(xi, "xi_unc", p - 1);
    else
      fill(xi, "xi_unc", kind == ModelKind::bnn ? p : 1);
    fill(log_c_sq, "log_c_sq", 0);
    fill(log_sigma, "log_sigma", 0);
    return names;
  }
};

// Constrained scales assembled from one unconstrained state, with the
// intermediates the backward pass reuses.
struct ScaleAssembly {
  double tau = 1.0;
  double sigma = 1.0;
  Eigen::VectorXd lambda;           // per group
  Eigen::VectorXd lambda_tilde_sq;  // per group, floored at 1e-12
  Eigen::VectorXd c_sq;             // per group
  Eigen::VectorXd xi;               // per weight; identically 1 for RHS/Gaussian
  Eigen::VectorXd log_xi;           // finite even where xi underflows
  Eigen::VectorXd log_one_minus_xi;  // Beta variants only
  std::vector<transforms::StickBreak> sticks;
  Eigen::VectorXd w1;    // assembled first-layer weights, layout order
  Eigen::VectorXd sdev;  // per-weight stddev multiplying the z-score
  std::vector<bool> sdev_floored;   // fmax(1e-12, .) guard active
  std::vector<bool> lts_floored;
  bool finite = true;
};

namespace model_detail {

inline double floor12(double x) { return std::max(x, 1e-12); }

}  // namespace model_detail

class Posterior {
 public:
  Posterior(ModelKind kind, Task task, PriorSpec spec, NetworkShape shape,
            Eigen::MatrixXd X, Eigen::VectorXd y)
      : spec_(std::move(spec)),
        shape_(shape),
        layout_(Layout::make(kind, task, spec_, shape_)),
        X_(std::move(X)),
        y_(std::move(y)) {
    if (X_.cols() != shape_.p) throw std::invalid_argument("Posterior: X column mismatch");
    if (X_.rows() != y_.size()) throw std::invalid_argument("Posterior: X/y row mismatch");
    if (spec_.has_scales() && !std::isfinite(spec_.tau0))
      spec_.tau0 = tau0(spec_.p0, shape_.p, 1.0, std::max<long>(1, X_.rows()));
  }

  const Layout& layout() const { return layout_; }
  const PriorSpec& spec() const { return spec_; }
  const NetworkShape& shape() const { return shape_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }

  ScaleAssembly assemble(const Eigen::VectorXd& theta) const {
    const Layout& L = layout_;
    ScaleAssembly a;
    const double inv_sqrt_p =
        (L.kind == ModelKind::bnn && spec_.scale_by_sqrt_p) ? 1.0 / std::sqrt(double(L.p)) : 1.0;
    a.xi = Eigen::VectorXd::Ones(L.n_weights);
    a.log_xi = Eigen::VectorXd::Zero(L.n_weights);
    a.sdev = Eigen::VectorXd::Constant(L.n_weights, inv_sqrt_p);
    if (L.log_sigma.present()) a.sigma = std::exp(theta[L.log_sigma.offset]);
    if (!spec_.has_scales()) {
      a.w1 = theta.segment(L.z_w.offset, L.z_w.size) * inv_sqrt_p;
      return a;
    }
    a.tau = std::exp(theta[L.log_tau.offset]);
    a.lambda = theta.segment(L.log_lambda.offset, L.n_groups).array().exp();
    a.c_sq = theta.segment(L.log_c_sq.offset, L.n_groups).array().exp();
    a.lambda_tilde_sq.resize(L.n_groups);
    a.lts_floored.assign(L.n_groups, false);
    for (int j = 0; j < L.n_groups; ++j) {
      const double raw = regularized_scale(a.lambda[j], a.tau, a.c_sq[j]);
      a.lts_floored[j] = raw < 1e-12;
      a.lambda_tilde_sq[j] = model_detail::floor12(raw);
    }
    if (spec_.has_simplex()) {
      a.sticks.reserve(L.n_simplex);
      for (int s = 0; s < L.n_simplex; ++s) {
        Eigen::VectorXd u = theta.segment(L.xi.offset + s * (L.p - 1), L.p - 1);
        a.sticks.push_back(transforms::simplex_from_unconstrained(u));
        for (int k = 0; k < L.p; ++k) {
          const int i = (L.kind == ModelKind::bnn) ? s * L.p + k : k;
          a.xi[i] = a.sticks.back().x[k];
          a.log_xi[i] = a.sticks.back().log_x[k];
        }
      }
    } else if (spec_.has_beta_xi()) {
      a.log_one_minus_xi.resize(L.n_weights);
      for (int i = 0; i < L.n_weights; ++i) {
        const double u = theta[L.xi.offset + i];
        a.log_xi[i] = transforms::log_unit_from_unconstrained(u);
        a.log_one_minus_xi[i] = transforms::log_unit_complement(u);
        a.xi[i] = std::exp(a.log_xi[i]);
      }
    }
    a.w1.resize(L.n_weights);
    a.sdev_floored.assign(L.n_weights, false);
    for (int i = 0; i < L.n_weights; ++i) {
      const int g = L.group_of(i);
      const double raw = a.tau * std::exp(0.5 * (std::log(a.lambda_tilde_sq[g]) + a.log_xi[i]));
      a.sdev_floored[i] = raw < 1e-12;
      a.sdev[i] = model_detail::floor12(raw) * inv_sqrt_p;
      a.w1[i] = a.sdev[i] * theta[L.z_w.offset + i];
    }
    return a;
  }

  // First-layer weight matrix (H x p); for the linear model a 1 x p row.
  Eigen::MatrixXd assemble_first_layer(const Eigen::VectorXd& theta) const {
    const ScaleAssembly a = assemble(theta);
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(a.w1.data(), layout_.H, layout_.p);
  }

  Eigen::VectorXd output_weights(const Eigen::VectorXd& theta) const {
    if (layout_.kind != ModelKind::bnn) throw std::logic_error("output_weights: bnn only");
    return theta.segment(layout_.w_out.offset, layout_.H);
  }
  double output_bias(const Eigen::VectorXd& theta) const { return theta[layout_.b_out.offset]; }
  Eigen::VectorXd hidden_bias(const Eigen::VectorXd& theta) const {
    return layout_.b1.present() ? theta.segment(layout_.b1.offset, layout_.H)
                                : Eigen::VectorXd();
  }
  double sigma_of(const Eigen::VectorXd& theta) const {
    return layout_.log_sigma.present() ? std::exp(theta[layout_.log_sigma.offset]) : 1.0;
  }

  // tanh hidden layer then affine output, row-wise over Xq.
  static Eigen::VectorXd predict_with_weights(const Eigen::MatrixXd& Xq,
                                              const Eigen::MatrixXd& W1,
                                              const Eigen::VectorXd& b1,
                                              const Eigen::VectorXd& w_out, double b_out) {
    Eigen::MatrixXd A = Xq * W1.transpose();
    A.rowwise() += b1.transpose();
    return (A.array().tanh().matrix() * w_out).array() + b_out;
  }

  Eigen::VectorXd predict(const Eigen::VectorXd& theta, const Eigen::MatrixXd& Xq) const {
    const ScaleAssembly a = assemble(theta);
    if (layout_.kind == ModelKind::linear) {
      return (Xq * a.w1).array() + theta[layout_.b_out.offset];
    }
    return predict_with_weights(
        Xq,
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            a.w1.data(), layout_.H, layout_.p),
        theta.segment(layout_.b1.offset, layout_.H), theta.segment(layout_.w_out.offset, layout_.H),
        theta[layout_.b_out.offset]);
  }

  double log_likelihood(const Eigen::VectorXd& theta) const {
    if (X_.rows() == 0) return 0.0;
    const Eigen::VectorXd f = predict(theta, X_);
    return log_likelihood_of_outputs(f, sigma_of(theta));
  }

  double log_likelihood_of_outputs(const Eigen::VectorXd& f, double sigma) const {
    const auto N = static_cast<double>(X_.rows());
    if (layout_.task == Task::regression) {
      const double ssr = (y_ - f).squaredNorm();
      return -0.5 * N * dist::kLnTwoPi - N * std::log(sigma) - 0.5 * ssr / (sigma * sigma);
    }
    double ll = 0.0;
    for (int i = 0; i < f.size(); ++i) ll += y_[i] * f[i] - dist::log1p_exp(f[i]);
    return ll;
  }

  double log_prior(const Eigen::VectorXd& theta) const {
    const ScaleAssembly a = assemble(theta);
    return log_prior_given(theta, a);
  }

  double log_posterior(const Eigen::VectorXd& theta) const {
    return log_prior(theta) + log_likelihood(theta);
  }

  // Log posterior and its exact gradient on unconstrained space.
  double value_grad(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    const Layout& L = layout_;
    grad.setZero(L.dim);
    const ScaleAssembly a = assemble(theta);
    if (!a.finite) return -std::numeric_limits<double>::infinity();

    const auto N = X_.rows();
    double logp = log_prior_given(theta, a);
    if (!std::isfinite(logp)) return -std::numeric_limits<double>::infinity();

    // --- likelihood forward + gradient w.r.t. outputs ---
    Eigen::VectorXd f, df;  // df = d loglik / d f
    Eigen::MatrixXd phi;    // hidden activations, reused by the backward pass
    double ssr = 0.0;
    if (N > 0) {
      if (L.kind == ModelKind::linear)
        f = (X_ * a.w1).array() + theta[L.b_out.offset];
      else {
        Eigen::MatrixXd A =
            X_ * Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(a.w1.data(), L.H, L.p)
                     .transpose();
        A.rowwise() += theta.segment(L.b1.offset, L.H).transpose();
        phi = A.array().tanh();
        f = phi * theta.segment(L.w_out.offset, L.H);
        f.array() += theta[L.b_out.offset];
      }
      if (L.task == Task::regression) {
        const double s2 = a.sigma * a.sigma;
        Eigen::VectorXd r = y_ - f;
        ssr = r.squaredNorm();
        logp += -0.5 * double(N) * dist::kLnTwoPi - double(N) * std::log(a.sigma) -
                0.5 * ssr / s2;
        df = r / s2;
      } else {
        df.resize(N);
        for (int i = 0; i < N; ++i) {
          logp += y_[i] * f[i] - dist::log1p_exp(f[i]);
          df[i] = y_[i] - dist::sigmoid(f[i]);
        }
      }
      if (!std::isfinite(logp)) return -std::numeric_limits<double>::infinity();
    }

    // --- backward through the network / linear map ---
    Eigen::VectorXd dW1 = Eigen::VectorXd::Zero(L.n_weights);  // d loglik / d w1
    if (N > 0) {
      if (L.kind == ModelKind::linear) {
        dW1 = X_.transpose() * df;
        grad[L.b_out.offset] += df.sum();
      } else {
        const auto wL = theta.segment(L.w_out.offset, L.H);
        grad.segment(L.w_out.offset, L.H) += phi.transpose() * df;
        grad[L.b_out.offset] += df.sum();
        Eigen::MatrixXd dA =
            (df * wL.transpose()).cwiseProduct((1.0 - phi.array().square()).matrix());
        grad.segment(L.b1.offset, L.H) += dA.colwise().sum().transpose();
        Eigen::MatrixXd dW1m = dA.transpose() * X_;  // H x p
        for (int i = 0; i < L.n_weights; ++i) dW1[i] = dW1m(i / L.p, i % L.p);
      }
    }

    // --- z blocks: likelihood chain + standard-normal prior ---
    for (int i = 0; i < L.n_weights; ++i)
      grad[L.z_w.offset + i] += dW1[i] * a.sdev[i] - theta[L.z_w.offset + i];
    if (L.b1.present())
      grad.segment(L.b1.offset, L.b1.size) -= theta.segment(L.b1.offset, L.b1.size);
    if (L.w_out.present())
      grad.segment(L.w_out.offset, L.w_out.size) -= theta.segment(L.w_out.offset, L.w_out.size);
    grad[L.b_out.offset] -= theta[L.b_out.offset];

    // --- noise scale ---
    if (L.log_sigma.present()) {
      const double s2 = a.sigma * a.sigma;
      double g = -2.0 * spec_.sigma_a + 2.0 * spec_.sigma_b / s2;  // prior + jacobian
      if (N > 0 && L.task == Task::regression) g += -double(N) + ssr / s2;
      grad[L.log_sigma.offset] += g;
    }

    if (!spec_.has_scales()) return logp;

    // --- scale chains: d loglik / d sdev_i, routed through tau, lambda, c, xi ---
    // ds_i = (d loglik / d sdev_i) * sdev_i, zeroed where the fmax guard cut
    // the dependence on the scales
    Eigen::VectorXd ds(L.n_weights);
    for (int i = 0; i < L.n_weights; ++i)
      ds[i] = a.sdev_floored[i] ? 0.0 : dW1[i] * theta[L.z_w.offset + i] * a.sdev[i];

    Eigen::VectorXd g_lts = Eigen::VectorXd::Zero(L.n_groups);  // d/d lambda_tilde_sq * lts
    double g_tau_direct = 0.0;
    for (int i = 0; i < L.n_weights; ++i) {
      g_lts[L.group_of(i)] += 0.5 * ds[i];
      g_tau_direct += ds[i];
    }

    const double tau2 = a.tau * a.tau;
    double g_utau = g_tau_direct;
    const double nu = spec_.local_df();
    for (int j = 0; j < L.n_groups; ++j) {
      const double l2 = a.lambda[j] * a.lambda[j];
      if (!a.lts_floored[j]) {
        const double D = a.c_sq[j] + tau2 * l2;
        const double lts = a.lambda_tilde_sq[j];
        // d lts / d {lambda^2, c^2, tau^2} over lts, times the exp-map factors
        const double via_l2 = (a.c_sq[j] * a.c_sq[j] / (D * D)) / lts;
        const double via_c2 = (tau2 * l2 * l2 / (D * D)) / lts;
        const double via_t2 = -(a.c_sq[j] * l2 * l2 / (D * D)) / lts;
        grad[L.log_lambda.offset + j] += g_lts[j] * via_l2 * 2.0 * l2;
        grad[L.log_c_sq.offset + j] += g_lts[j] * via_c2 * a.c_sq[j];
        g_utau += g_lts[j] * via_t2 * 2.0 * tau2;
      }
      // half-t prior on lambda with log-jacobian
      grad[L.log_lambda.offset + j] += -(nu + 1.0) * l2 / (nu + l2) + 1.0;
      // InvGamma prior on c^2 with log-jacobian
      grad[L.log_c_sq.offset + j] += -spec_.c_sq_shape() + spec_.c_sq_rate() / a.c_sq[j];
    }
    // half-Cauchy prior on tau with log-jacobian
    g_utau += 1.0 - 2.0 * tau2 / (spec_.tau0 * spec_.tau0 + tau2);
    grad[L.log_tau.offset] += g_utau;

    if (spec_.has_simplex()) {
      for (int s = 0; s < L.n_simplex; ++s) {
        // q_k = xi_k * dL/dxi_k stays finite at the simplex corners
        Eigen::VectorXd q(L.p);
        for (int k = 0; k < L.p; ++k) {
          const int i = (L.kind == ModelKind::bnn) ? s * L.p + k : k;
          q[k] = 0.5 * ds[i] + (spec_.alpha - 1.0);
        }
        grad.segment(L.xi.offset + s * (L.p - 1), L.p - 1) +=
            transforms::stick_break_vjp(a.sticks[s], q, true);
      }
    } else if (spec_.has_beta_xi()) {
      const double beta_b = (double(L.p) - 1.0) * spec_.alpha;
      for (int i = 0; i < L.n_weights; ++i) {
        const double x = a.xi[i];
        const double omx = std::exp(a.log_one_minus_xi[i]);
        grad[L.xi.offset + i] += (0.5 * ds[i] + spec_.alpha - 1.0) * omx -
                                 (beta_b - 1.0) * x + (1.0 - 2.0 * x);
      }
    }
    return logp;
  }

  // Draw from the full hierarchy, returned on the unconstrained scale.
  Eigen::VectorXd sample_prior(Rng& rng) const {
    const Layout& L = layout_;
    Eigen::VectorXd theta(L.dim);
    for (int i = 0; i < L.z_w.size; ++i) theta[L.z_w.offset + i] = rng.normal();
    for (int i = 0; i < L.b1.size; ++i) theta[L.b1.offset + i] = rng.normal();
    for (int i = 0; i < L.w_out.size; ++i) theta[L.w_out.offset + i] = rng.normal();
    theta[L.b_out.offset] = rng.normal();
    if (spec_.has_scales()) {
      theta[L.log_tau.offset] = std::log(rng.half_cauchy(spec_.tau0));
      for (int j = 0; j < L.n_groups; ++j) {
        theta[L.log_lambda.offset + j] = std::log(rng.half_student_t(spec_.local_df()));
        theta[L.log_c_sq.offset + j] =
            std::log(rng.inv_gamma(spec_.c_sq_shape(), spec_.c_sq_rate()));
      }
      if (spec_.has_simplex()) {
        for (int s = 0; s < L.n_simplex; ++s) {
          Eigen::VectorXd x = rng.dirichlet(L.p, spec_.alpha);
          theta.segment(L.xi.offset + s * (L.p - 1), L.p - 1) =
              transforms::unconstrained_from_simplex(x);
        }
      } else if (spec_.has_beta_xi()) {
        const double b = (double(L.p) - 1.0) * spec_.alpha;
        for (int i = 0; i < L.n_weights; ++i) {
          const double x = rng.beta(spec_.alpha, b);
          theta[L.xi.offset + i] = std::log(x / (1.0 - x));
        }
      }
    }
    if (L.log_sigma.present())
      theta[L.log_sigma.offset] = 0.5 * std::log(rng.inv_gamma(spec_.sigma_a, spec_.sigma_b));
    return theta;
  }

 private:
  double log_prior_given(const Eigen::VectorXd& theta, const ScaleAssembly& a) const {
    const Layout& L = layout_;
    if (!a.finite) return -std::numeric_limits<double>::infinity();
    double lp = 0.0;
    for (int i = 0; i < L.z_w.size; ++i) lp += dist::log_std_normal(theta[L.z_w.offset + i]);
    for (int i = 0; i < L.b1.size; ++i) lp += dist::log_std_normal(theta[L.b1.offset + i]);
    for (int i = 0; i < L.w_out.size; ++i) lp += dist::log_std_normal(theta[L.w_out.offset + i]);
    lp += dist::log_std_normal(theta[L.b_out.offset]);
    if (spec_.has_scales()) {
      lp += dist::log_half_cauchy(a.tau, spec_.tau0) + theta[L.log_tau.offset];
      const double nu = spec_.local_df();
      for (int j = 0; j < L.n_groups; ++j) {
        lp += dist::log_half_student_t(a.lambda[j], nu) + theta[L.log_lambda.offset + j];
        lp += dist::log_inv_gamma(a.c_sq[j], spec_.c_sq_shape(), spec_.c_sq_rate()) +
              theta[L.log_c_sq.offset + j];
      }
      if (spec_.has_simplex()) {
        const double dir_norm =
            std::lgamma(L.p * spec_.alpha) - L.p * std::lgamma(spec_.alpha);
        for (const auto& s : a.sticks)
          lp += (spec_.alpha - 1.0) * s.log_x.sum() + dir_norm + s.log_jac;
      } else if (spec_.has_beta_xi()) {
        const double b = (double(L.p) - 1.0) * spec_.alpha;
        const double beta_norm =
            std::lgamma(spec_.alpha + b) - std::lgamma(spec_.alpha) - std::lgamma(b);
        for (int i = 0; i < L.n_weights; ++i)
          lp += spec_.alpha * a.log_xi[i] + b * a.log_one_minus_xi[i] + beta_norm;
      }
    }
    if (L.log_sigma.present()) {
      const double s2 = a.sigma * a.sigma;
      lp += dist::log_inv_gamma(s2, spec_.sigma_a, spec_.sigma_b) + std::log(2.0) +
            2.0 * theta[L.log_sigma.offset];
    }
    return lp;
  }

  PriorSpec spec_;
  NetworkShape shape_;
  Layout layout_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
};

}  // namespace dsm
