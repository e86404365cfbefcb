#pragma once

// Seeded RNG with the draw types the prior hierarchy needs.  Streams for
// parallel chains are derived with splitmix64 so that (seed, index) pairs
// give independent, reproducible generators.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dsm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

  double uniform() { return unif_(engine_); }
  double uniform(double a, double b) { return a + (b - a) * unif_(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mu, double sd) { return mu + sd * normal_(engine_); }
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(engine_);
  }
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }
  double beta(double a, double b) {
    const double x = gamma(a, 1.0), y = gamma(b, 1.0);
    return x / (x + y);
  }
  double student_t(double nu) {
    std::student_t_distribution<double> d(nu);
    return d(engine_);
  }
  double half_student_t(double nu) { return std::abs(student_t(nu)); }
  double half_cauchy(double scale) {
    // inverse CDF keeps the draw a single engine call
    return scale * std::tan(0.5 * M_PI * unif_(engine_));
  }
  Eigen::VectorXd dirichlet(int p, double alpha) {
    Eigen::VectorXd g(p);
    // floor keeps small-alpha draws away from exact zero
    for (int i = 0; i < p; ++i) g[i] = std::max(gamma(alpha, 1.0), 1e-290);
    const double s = g.sum();
    return g / s;
  }
  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  std::uint64_t raw() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dsm
