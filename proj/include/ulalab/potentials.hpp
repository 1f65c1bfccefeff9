#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ulalab/vec.hpp"

namespace ula {

// Declared regularity of a potential: gradient growth/Hoelder structure,
// optional Hessian structure, and dissipativity constants. The certifiers
// below test these claims statistically; nothing here is assumed correct.
struct RegularityMeta {
  // ||grad U(x) - grad U(y)|| <= (1 + ||x||^lg + ||y||^lg) * sum_i Lg_i ||x-y||^ag_i
  std::vector<double> smooth_exponents;  // ag_i in (0,1], ascending
  std::vector<double> smooth_consts;     // Lg_i > 0
  double local_power = 0.0;              // lg >= 0

  // Same shape for the Hessian in operator norm; empty when undeclared.
  std::vector<double> hessian_exponents;  // ah_i in [0,1], ascending
  std::vector<double> hessian_consts;     // Lh_i > 0
  double hessian_local_power = 0.0;

  // <grad U(x), x> >= a ||x||^beta - b
  double dissipativity_beta = 0.0;
  double dissipativity_a = 0.0;
  double dissipativity_b = 0.0;

  std::optional<double> poincare_gamma;
  bool stationary_at_zero = true;

  // Free-text provenance of the constants; copied into certificate reports.
  std::string notes;

  void validate() const;  // throws ConfigError

  bool has_smoothness() const { return !smooth_exponents.empty(); }
  bool has_hessian_smoothness() const { return !hessian_exponents.empty(); }
  bool has_dissipativity() const { return dissipativity_beta > 0.0 && dissipativity_a > 0.0; }

  std::size_t num_terms() const { return smooth_exponents.size(); }
  // L = 1 v max_i Lg_i, the constant the smoothing bounds use.
  double smoothing_const() const;
  double max_smooth_const() const;
  double min_smooth_exponent() const { return smooth_exponents.front(); }
  double max_smooth_exponent() const { return smooth_exponents.back(); }
};

struct PotentialSpec {
  int dim = 0;
  std::string name;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  // Allocation-free gradient for tight sampling loops; factories always set
  // it, hand-built specs may leave it empty and pay for the copy.
  std::function<void(const Vec&, Vec&)> grad_into;
  // Optional Hessian action (x, v) -> H(x) v. Certifiers fall back to central
  // differences of grad when absent.
  std::function<Vec(const Vec&, const Vec&)> hessian_vec;
  RegularityMeta regularity;

  bool has_hessian_action() const { return static_cast<bool>(hessian_vec); }
  void gradient_into(const Vec& x, Vec& out) const {
    if (grad_into) {
      grad_into(x, out);
    } else {
      out = grad(x);
    }
  }
};

// U(x) = sum_i L_i ||x||^alpha_i with alpha_i in (2,3].
PotentialSpec make_mixture_norm(const std::vector<std::pair<double, double>>& terms,
                                int dim);

// U(x) = sum_i (1 + ||x||^(1+alpha_i))^(1/(1+alpha_i)) with alpha_i >= 1.
PotentialSpec make_linear_tail(const std::vector<double>& alphas, int dim);

// U(x) = a ||x||^2 / 2. Closed-form target N(0, I/a).
PotentialSpec make_quadratic(double a, int dim);

// U == 0 (free diffusion). No stationary law; used by tests and guard paths.
PotentialSpec make_zero(int dim);

// Evaluates energy and gradient together, validating the dimension.
std::pair<double, Vec> eval_grad(const PotentialSpec& p, const Vec& x);

// ---------------------------------------------------------------------------
// Statistical certifiers. Points are drawn uniformly in the ball of the given
// radius, with 20% of trials forced into the radius*(0.9..1.0) shell to
// stress the local-power factor. Deterministic given the seed.
// ---------------------------------------------------------------------------

struct CertificateReport {
  std::string check;
  bool passed = false;
  std::size_t trials = 0;
  // min over trials of (rhs - lhs): positive slack means the bound held.
  double worst_slack = 0.0;
  double worst_violation = 0.0;  // max(0, lhs - rhs) at the worst trial
  std::size_t witness_trial = 0;
  Vec witness_x, witness_y, witness_v;
  bool used_fd_hessian = false;
  std::string notes;
};

struct SmoothnessClaim {
  std::vector<double> exponents;
  std::vector<double> consts;
  double local_power = 0.0;
};

struct DissipativityClaim {
  double beta = 0.0;
  double a = 0.0;
  double b = 0.0;
};

CertificateReport certify_mixture_smooth(const PotentialSpec& p,
                                         const SmoothnessClaim& claim,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed);
// Claim taken from p.regularity; throws ConfigError when undeclared.
CertificateReport certify_mixture_smooth(const PotentialSpec& p,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed);

CertificateReport certify_dissipative(const PotentialSpec& p,
                                      const DissipativityClaim& claim,
                                      std::size_t trials, double radius_max,
                                      std::uint64_t rng_seed);
CertificateReport certify_dissipative(const PotentialSpec& p, std::size_t trials,
                                      double radius_max, std::uint64_t rng_seed);

CertificateReport certify_hessian_smooth(const PotentialSpec& p,
                                         const SmoothnessClaim& claim,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed);
CertificateReport certify_hessian_smooth(const PotentialSpec& p,
                                         std::size_t trials, double radius,
                                         std::uint64_t rng_seed);

// ||grad U(x)|| <= 2 N Lg (1 + ||x||^(lg + ag_N)) checked on random points.
CertificateReport certify_gradient_growth(const PotentialSpec& p,
                                          std::size_t trials, double radius,
                                          std::uint64_t rng_seed);

// U(y) <= U(x) + <grad U(x), y-x>
//        + (2 Lg / (1+ag_1)) (1 + ||x||^lg + ||y||^lg) sum_i ||x-y||^(1+ag_i)
CertificateReport certify_descent_bound(const PotentialSpec& p,
                                        std::size_t trials, double radius,
                                        std::uint64_t rng_seed);

// Central-difference Hessian action, used when hessian_vec is absent.
Vec fd_hessian_vec(const PotentialSpec& p, const Vec& x, const Vec& v,
                   double step = 1e-4);

}  // namespace ula
