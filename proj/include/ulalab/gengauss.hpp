#pragma once

#include <cstdint>
#include <vector>

#include "ulalab/potentials.hpp"
#include "ulalab/rng.hpp"
#include "ulalab/vec.hpp"

namespace ula {

// N_p(0, I_d): independent coordinates with density proportional to
// exp(-|z|^p / p). A coordinate is sign * (p*G)^(1/p) with G ~ Gamma(1/p, 1),
// since |Z|^p / p is Gamma(1/p, 1) distributed.
class GenGaussSampler {
 public:
  GenGaussSampler(double p, int dim, std::uint64_t seed);

  double shape() const { return p_; }
  int dim() const { return dim_; }

  // Derived, non-overlapping stream for ensemble use.
  GenGaussSampler clone_stream(std::uint64_t stream_index) const;

  double sample_coord();
  void sample_into(Vec& out);
  Vec sample_one();
  Matrix sample(std::size_t n);

 private:
  double p_;
  int dim_;
  std::uint64_t seed_;
  RngStream rng_;
};

// kappa = integral of exp(-||xi||_p^p / p) over R^d
//       = 2^d Gamma(1/p)^d / p^(d - d/p), computed in log space.
struct KappaResult {
  double log_value;
  double value;  // +inf when it overflows
};
KappaResult kappa(double p, int d);

// E ||xi||_p^n in closed form: p^(n/p) Gamma((d+n)/p) / Gamma(d/p).
double pnorm_moment_closed_form(double p, int d, double n);

// d (d+1) ... (d+k-1)
double rising_product(int d, int k);

struct MomentCheck {
  double estimate = 0.0;
  double stderr_ = 0.0;
  // bracket: d^floor(n/p) <= E <= (d + n/2)^(n/p), tested within 3 SE
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool bracket_pass = false;
  // when n = k*p with integer k, the estimate is compared against the
  // rising product d(d+1)...(d+k-1) within 3 SE
  bool exact_applicable = false;
  int exact_k = 0;
  double exact_reference = 0.0;
  bool exact_pass = false;
};

// Monte Carlo moment of the p-norm with bracket and exact-value verdicts.
MomentCheck moment_pnorm(GenGaussSampler& g, double n, std::size_t mc_samples);

struct SmoothingConfig {
  double mu = 0.0;
  double p = 2.0;
  std::size_t mc_samples = 1024;

  void validate() const;
};

struct ScalarEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct GradientEstimate {
  Vec mean;
  double cov_trace = 0.0;  // trace of the sample covariance of the draws
  double stderr_ = 0.0;    // sqrt(cov_trace / mc_samples)
};

// U_mu(x) = E_xi U(x + mu xi), Monte Carlo mean with standard error.
// mu = 0 returns (U(x), 0) without consuming randomness.
ScalarEstimate smoothed_potential(const PotentialSpec& u, const SmoothingConfig& cfg,
                                  const Vec& x, GenGaussSampler& xi);

// grad U_mu(x) as the Monte Carlo mean of grad U(x + mu xi).
GradientEstimate smoothed_gradient(const PotentialSpec& u, const SmoothingConfig& cfg,
                                   const Vec& x, GenGaussSampler& xi);

// One-draw estimator g_mu(x, xi) = grad U(x + mu xi); unbiased for grad U_mu.
Vec stochastic_gradient(const PotentialSpec& u, const SmoothingConfig& cfg,
                        const Vec& x, GenGaussSampler& xi);

// Weak-smoothness summary (N, L, alpha) feeding the smoothing bounds:
// N = number of mixture terms, L = 1 v max L_i, alpha = smallest exponent.
struct WeakSmoothness {
  double n_terms = 1.0;
  double L = 1.0;
  double alpha = 1.0;

  static WeakSmoothness from_meta(const RegularityMeta& m);
};

// |U_mu - U| <= N L mu^(1+a)/(1+a) * d^(2/min(2,p))
double smoothing_bias_bound(const WeakSmoothness& w, double mu, double p, int d);

// ||grad U_mu - grad U|| <= N L mu^(1+a)/(1+a) * (p<=2 ? d^(3/p) : d^(5/2))
double smoothing_gradient_bias_bound(const WeakSmoothness& w, double mu, double p,
                                     int d);

// Var[g_mu] <= 4 N^2 L^2 mu^(2a) d^(2a/p)
double stochastic_gradient_variance_bound(const WeakSmoothness& w, double mu,
                                          double p, int d);

}  // namespace ula
