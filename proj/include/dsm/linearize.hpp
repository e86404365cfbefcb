#pragma once

// First-order linearization of the single-hidden-layer network at a
// reference parameter point, and the matrix shrinkage theory built on it:
// K = (P+S)^{-1} S, its whitened spectrum, mode-wise shrinkage factors,
// sample-size bounds, and the per-draw effective model size.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dsm/bnn.hpp"
#include "dsm/nuts.hpp"
#include "dsm/parallel.hpp"

namespace dsm::linearize {

struct Linearization {
  Eigen::MatrixXd J_w;      // N x pH Jacobian w.r.t. vectorized first-layer weights
  Eigen::MatrixXd J_b;      // N x H Jacobian w.r.t. hidden biases
  Eigen::MatrixXd Phi0;     // N x H hidden activations at the reference point
  Eigen::MatrixXd Q;        // [J_b Phi0 1], the marginalized-parameter design
  Eigen::MatrixXd Sigma_y;  // N x N marginal covariance of the linearized likelihood
  Eigen::MatrixXd S;        // J_w^T Sigma_y^{-1} J_w
  Eigen::VectorXd P;        // diagonal of tau^{-2} Psi^{-1}
  Eigen::VectorXd Psi;      // diagonal prior covariance over tau^2
  double tau = 1.0;
  double sigma = 1.0;
};

// Jacobian block structure: J_w = [diag(R_1) X ... diag(R_H) X] with
// R_h = w_{L,h} phi'(A0) column h.  Sigma_y = J_b J_b^T + Phi0 Phi0^T
// + 11^T + sigma^2 I after integrating out biases and output weights.
inline Linearization build_linearization(const Posterior& post, const Eigen::VectorXd& theta,
                                         const Eigen::MatrixXd& X, double sigma_override = -1.0) {
  const Layout& L = post.layout();
  if (L.kind != ModelKind::bnn)
    throw std::invalid_argument("build_linearization: network models only");
  const auto N = X.rows();
  const int H = L.H, p = L.p;

  const ScaleAssembly a = post.assemble(theta);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      W1(a.w1.data(), H, p);
  const Eigen::VectorXd b1 = theta.segment(L.b1.offset, H);
  const Eigen::VectorXd wL = theta.segment(L.w_out.offset, H);

  Linearization lz;
  lz.tau = a.tau;
  lz.sigma = (sigma_override > 0.0) ? sigma_override : a.sigma;

  Eigen::MatrixXd A0 = X * W1.transpose();
  A0.rowwise() += b1.transpose();
  lz.Phi0 = A0.array().tanh();
  const Eigen::MatrixXd dphi = 1.0 - lz.Phi0.array().square();
  lz.J_b = dphi * wL.asDiagonal();  // R, one column per hidden unit

  lz.J_w.resize(N, p * H);
  for (int h = 0; h < H; ++h)
    lz.J_w.middleCols(h * p, p) = lz.J_b.col(h).asDiagonal() * X;

  lz.Q.resize(N, 2 * H + 1);
  lz.Q << lz.J_b, lz.Phi0, Eigen::VectorXd::Ones(N);

  lz.Sigma_y = lz.Q * lz.Q.transpose();
  lz.Sigma_y.diagonal().array() += lz.sigma * lz.sigma;

  // prior covariance diagonal matching the sampled weight construction
  const double invp = (post.spec().scale_by_sqrt_p) ? 1.0 / static_cast<double>(p) : 1.0;
  lz.Psi.resize(p * H);
  for (int i = 0; i < p * H; ++i) {
    double v = invp;
    if (post.spec().has_scales()) v *= a.lambda_tilde_sq[L.group_of(i)] * a.xi[i];
    lz.Psi[i] = std::max(v, 1e-12);
  }
  lz.P = (lz.Psi * lz.tau * lz.tau).cwiseInverse();

  if (N <= 2000) {
    lz.S = lz.J_w.transpose() * lz.Sigma_y.llt().solve(lz.J_w);
  } else {
    // Woodbury: Sigma_y^{-1} = s^{-2} (I - Q (s^2 I + Q^T Q)^{-1} Q^T)
    const double s2 = lz.sigma * lz.sigma;
    Eigen::MatrixXd inner = lz.Q.transpose() * lz.Q;
    inner.diagonal().array() += s2;
    const Eigen::MatrixXd JtQ = lz.J_w.transpose() * lz.Q;
    lz.S = (lz.J_w.transpose() * lz.J_w - JtQ * inner.llt().solve(JtQ.transpose())) / s2;
  }
  lz.S = 0.5 * (lz.S + lz.S.transpose());
  return lz;
}

// K = (P+S)^{-1} S, via a symmetric solve.  Equals I - (P+S)^{-1} P.
inline Eigen::MatrixXd shrinkage_matrix(const Eigen::VectorXd& P, const Eigen::MatrixXd& S) {
  if (P.size() != S.rows() || S.rows() != S.cols())
    throw std::invalid_argument("shrinkage_matrix: dimension mismatch");
  Eigen::MatrixXd PS = S;
  PS.diagonal() += P;
  Eigen::LDLT<Eigen::MatrixXd> solver(PS);
  if (solver.info() != Eigen::Success) throw std::runtime_error("shrinkage_matrix: solve failed");
  return solver.solve(S);
}

// eigenvalues of G = P^{-1/2} S P^{-1/2}, descending, clamped at zero
inline Eigen::VectorXd whitened_spectrum(const Eigen::VectorXd& P, const Eigen::MatrixXd& S) {
  const Eigen::VectorXd d = P.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd G = d.asDiagonal() * S * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  return w.reverse();
}

// tr((P+S)^{-1} S) = sum_j omega_j / (1 + omega_j)
inline double m_eff_trace(const Eigen::VectorXd& P, const Eigen::MatrixXd& S) {
  return shrinkage_matrix(P, S).trace();
}

struct ModeShrinkage {
  double kappa_u = 1.0;
  double psi_eff_sq = 0.0;
};

// kappa(u) = 1 / (1 + tau^2 psi_eff^2(u) u^T S u), psi_eff^2 = (u^T Psi^{-1} u)^{-1}
inline ModeShrinkage mode_shrinkage(const Eigen::VectorXd& u, const Eigen::MatrixXd& S,
                                    double tau, const Eigen::VectorXd& Psi) {
  if (std::abs(u.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("mode_shrinkage: u must be a unit vector");
  ModeShrinkage m;
  m.psi_eff_sq = 1.0 / u.dot(Psi.cwiseInverse().cwiseProduct(u));
  const double uSu = u.dot(S * u);
  m.kappa_u = 1.0 / (1.0 + tau * tau * m.psi_eff_sq * uSu);
  return m;
}

struct ShrinkageBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Sandwich on 1 - kappa(u) from the spectral envelope of Sigma_y^{-1}:
// ||J_w u||^2/(sigma^2 + ||Q||_2^2) <= u^T S u <= ||J_w u||^2 / sigma^2.
inline ShrinkageBounds shrinkage_bounds(const Linearization& lz, const Eigen::VectorXd& u,
                                        double tau) {
  const double psi_eff_sq = 1.0 / u.dot(lz.Psi.cwiseInverse().cwiseProduct(u));
  const double jwu_sq = (lz.J_w * u).squaredNorm();
  double q_norm_sq = 0.0;
  if (lz.Q.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lz.Q.transpose() * lz.Q,
                                                      Eigen::EigenvaluesOnly);
    q_norm_sq = std::max(0.0, es.eigenvalues().maxCoeff());
  }
  const double s2 = lz.sigma * lz.sigma;
  ShrinkageBounds b;
  b.lower = 1.0 - 1.0 / (1.0 + psi_eff_sq * tau * tau * jwu_sq / (s2 + q_norm_sq));
  b.upper = 1.0 - 1.0 / (1.0 + psi_eff_sq * tau * tau * jwu_sq / s2);
  return b;
}

struct MeffSeries {
  Eigen::VectorXd values;  // one entry per usable draw, chains concatenated
  long skipped = 0;        // draws with non-finite linearization
};

// m_eff at every posterior draw used as the reference point.
inline MeffSeries posterior_m_eff_trace(const Posterior& post, const Trace& trace,
                                        int thin = 1, int threads = 1) {
  const auto& X = post.X();
  std::vector<Eigen::VectorXd> refs;
  for (int c = 0; c < trace.n_chains(); ++c)
    for (int i = 0; i < trace.n_draws(); i += std::max(1, thin))
      refs.push_back(trace.draws[c].row(i).transpose());

  Eigen::VectorXd vals(refs.size());
  std::vector<std::uint8_t> ok(refs.size(), 0);
  parallel_for(static_cast<long>(refs.size()), threads, [&](long i) {
    auto lz = build_linearization(post, refs[i], X);
    const double m = m_eff_trace(lz.P, lz.S);
    if (std::isfinite(m)) {
      vals[i] = m;
      ok[i] = 1;
    }
  });
  MeffSeries out;
  std::vector<double> kept;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (ok[i])
      kept.push_back(vals[i]);
    else
      ++out.skipped;
  }
  out.values = Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<long>(kept.size()));
  return out;
}

}  // namespace dsm::linearize
