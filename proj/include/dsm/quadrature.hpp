#pragma once

// Adaptive quadrature wrappers.  tanh-sinh handles the integrable endpoint
// singularities of the kappa and Beta densities; Gauss-Kronrod covers smooth
// finite ranges.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace dsm::quadrature {

// Integral over (0, 1).  f is called as f(x, xc) with xc the distance to
// the nearer endpoint, so integrands can avoid cancellation near 1.
template <typename F>
double integrate_01(const F& f, double tol = 1e-10, double* err_out = nullptr) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  const double v = integrator.integrate(f, 0.0, 1.0, tol, &err, &l1);
  if (err_out) *err_out = err * l1;
  return v;
}

template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-10, double* err_out = nullptr) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, tol, &err);
  if (err_out) *err_out = err;
  return v;
}

}  // namespace dsm::quadrature
