#pragma once

// Prior family specification and the scale plumbing shared by the linear
// and network models.  The joint log prior and prior sampling live with the
// parameter layout in bnn.hpp.

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace dsm {

enum class PriorFamily { Gaussian, RHS, DHS, DST, BHS, BST };

inline std::string to_string(PriorFamily f) {
  switch (f) {
    case PriorFamily::Gaussian: return "gaussian";
    case PriorFamily::RHS: return "rhs";
    case PriorFamily::DHS: return "dhs";
    case PriorFamily::DST: return "dst";
    case PriorFamily::BHS: return "bhs";
    case PriorFamily::BST: return "bst";
  }
  return "?";
}

inline PriorFamily prior_family_from_string(const std::string& s) {
  if (s == "gaussian") return PriorFamily::Gaussian;
  if (s == "rhs") return PriorFamily::RHS;
  if (s == "dhs") return PriorFamily::DHS;
  if (s == "dst") return PriorFamily::DST;
  if (s == "bhs") return PriorFamily::BHS;
  if (s == "bst") return PriorFamily::BST;
  throw std::invalid_argument("unknown prior family: " + s);
}

struct PriorSpec {
  PriorFamily family = PriorFamily::DHS;
  double nu = 1.0;             // Student-t df for the group scales (DST/BST)
  double alpha = 0.1;          // Dirichlet / Beta concentration
  int p0 = 4;                  // prior guess of relevant inputs
  double slab_df = 4.0;        // nu_{c^2}
  double slab_scale_sq = 2.0;  // s^2
  double sigma_a = 3.0;        // InvGamma shape on sigma^2
  double sigma_b = 2.0;        // InvGamma rate on sigma^2
  bool scale_by_sqrt_p = true;  // reference-code 1/sqrt(p) factor on W1
  double tau0 = std::numeric_limits<double>::quiet_NaN();  // resolved from data

  bool has_scales() const { return family != PriorFamily::Gaussian; }
  bool has_simplex() const { return family == PriorFamily::DHS || family == PriorFamily::DST; }
  bool has_beta_xi() const { return family == PriorFamily::BHS || family == PriorFamily::BST; }
  bool has_xi() const { return has_simplex() || has_beta_xi(); }

  // Horseshoe-type members are half-t with one degree of freedom.
  double local_df() const {
    return (family == PriorFamily::DST || family == PriorFamily::BST) ? nu : 1.0;
  }
  // InvGamma(a, b) on c^2 inducing a half-t slab with scale s.
  double c_sq_shape() const { return 0.5 * slab_df; }
  double c_sq_rate() const { return 0.5 * slab_df * slab_scale_sq; }

  void validate(int p) const {
    if (alpha <= 0.0 && has_scales()) throw std::invalid_argument("PriorSpec: alpha must be > 0");
    if (nu <= 0.0) throw std::invalid_argument("PriorSpec: nu must be > 0");
    if (p0 <= 0 || p0 >= p) throw std::invalid_argument("PriorSpec: require 0 < p0 < p");
  }
};

// Piironen-Vehtari global scale tau_0 = p0/(p-p0) * sigma / sqrt(N).
inline double tau0(int p0, int p, double sigma_guess, long N) {
  if (p0 <= 0 || p0 >= p) throw std::domain_error("tau0: require 0 < p0 < p");
  if (N < 1) throw std::domain_error("tau0: require N >= 1");
  return static_cast<double>(p0) / static_cast<double>(p - p0) * sigma_guess /
         std::sqrt(static_cast<double>(N));
}

// Soft-truncated local scale, squared: c^2 l^2 / (c^2 + tau^2 l^2) < c^2/tau^2.
inline double regularized_scale(double lambda, double tau, double c_sq) {
  const double l2 = lambda * lambda;
  return c_sq * l2 / (c_sq + tau * tau * l2);
}

inline void to_json(nlohmann::json& j, const PriorSpec& s) {
  j = nlohmann::json{{"family", to_string(s.family)},
                     {"nu", s.nu},
                     {"alpha", s.alpha},
                     {"p0", s.p0},
                     {"slab_df", s.slab_df},
                     {"slab_scale_sq", s.slab_scale_sq},
                     {"sigma_a", s.sigma_a},
                     {"sigma_b", s.sigma_b}};
  if (!s.scale_by_sqrt_p) j["scale_by_sqrt_p"] = false;
}

inline void from_json(const nlohmann::json& j, PriorSpec& s) {
  s.family = prior_family_from_string(j.at("family").get<std::string>());
  s.nu = j.value("nu", s.family == PriorFamily::DST || s.family == PriorFamily::BST ? 3.0 : 1.0);
  s.alpha = j.value("alpha", 0.1);
  s.p0 = j.value("p0", 4);
  s.slab_df = j.value("slab_df", 4.0);
  s.slab_scale_sq = j.value("slab_scale_sq", 2.0);
  s.sigma_a = j.value("sigma_a", 3.0);
  s.sigma_b = j.value("sigma_b", 2.0);
  s.scale_by_sqrt_p = j.value("scale_by_sqrt_p", true);
}

}  // namespace dsm
