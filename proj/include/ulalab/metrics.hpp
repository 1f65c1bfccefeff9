#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ulalab/potentials.hpp"
#include "ulalab/rng.hpp"
#include "ulalab/vec.hpp"

namespace ula {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Normalized target density, either tabulated on a 1D/2D grid (quadrature
// oracle for arbitrary potentials) or a closed-form diagonal Gaussian.
class ReferenceDensity {
 public:
  enum class Kind { Grid, Gaussian };

  static ReferenceDensity gaussian(Vec mean, Vec var_diag);

  // Tabulates exp(-U)/Z on [lo,hi]^d with `resolution` cells per axis
  // (rounded up to even). The normalizer is integrated by composite Simpson
  // and cross-checked once at doubled resolution (must agree to 1e-6).
  // Tail mass outside the box is bounded through the dissipativity lower
  // bound on U; more than 1e-6 of relative tail mass throws
  // EnlargeBoundsError with suggested bounds.
  static ReferenceDensity build_grid(const PotentialSpec& u, const Vec& lo,
                                     const Vec& hi, std::size_t resolution);
  static ReferenceDensity build_grid(const PotentialSpec& u, double half_width,
                                     std::size_t resolution);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double log_normalizer() const { return log_normalizer_; }
  double tail_fraction() const { return tail_fraction_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const Vec& mean() const { return mean_; }
  const Vec& var_diag() const { return var_diag_; }

  // Normalized density, evaluated exactly (Gaussian form or stored energy).
  double density(const Vec& x) const;

  // Probability mass of each of `bins`^d histogram cells over the reference
  // domain, plus the leftover mass assigned to the out-of-domain cell.
  std::vector<double> bin_masses(std::size_t bins) const;
  double out_of_domain_mass(std::size_t bins) const;

  // Domain the histogram estimators bin over. Equals the grid box for grid
  // references and mean +- 10 sd for Gaussians.
  void histogram_domain(Vec& lo, Vec& hi) const;

  // i.i.d. draws: inverse CDF in 1D, categorical cell + uniform in-cell
  // jitter in 2D, exact for Gaussians.
  void draw(RngStream& rng, Vec& out) const;
  Matrix draw_matrix(RngStream& rng, std::size_t n) const;

  // Expected (1+||x||^2)^(s/2) under the reference (quadrature or closed
  // form unavailable -> grid quadrature only).
  double moment_functional(double s) const;

 private:
  ReferenceDensity() = default;
  void build_sampling_tables();

  Kind kind_ = Kind::Gaussian;
  int dim_ = 0;
  Vec mean_, var_diag_;

  Vec lo_, hi_;
  std::size_t res_ = 0;
  std::vector<double> log_density_;  // nodes, row-major, unnormalized -U
  double log_normalizer_ = 0.0;
  double tail_fraction_ = 0.0;
  std::function<double(const Vec&)> energy_;
  std::vector<double> cell_cdf_;  // sampling tables (cells, cumulative)
};

// Histogram bin count per axis: ceil(M^(1/3)) clamped to [64, 1024].
std::size_t default_bin_count(std::size_t n_samples);

struct EstimatorOptions {
  std::size_t bins = 0;       // 0: default rule
  std::size_t bootstrap = 100;
  std::uint64_t seed = 0;
};

// KL(p||ref). Histogram plug-in against grid references (d <= 2); Gaussian
// moment matching against Gaussian references (any d). Bins that are empty
// in the sample contribute zero. Fewer than 100 samples is an error.
Estimate estimate_kl(const Matrix& samples, const ReferenceDensity& ref,
                     const EstimatorOptions& opts = {});

// Histogram plug-in KL regardless of the reference kind; Gaussian references
// contribute analytic bin masses. This is the partition-consistent companion
// of estimate_tv, used by the Pinsker cross-check.
Estimate estimate_kl_histogram(const Matrix& samples, const ReferenceDensity& ref,
                               const EstimatorOptions& opts = {});

// Total variation as half the L1 distance between the sample histogram and
// the reference masses on the same bins.
Estimate estimate_tv(const Matrix& samples, const ReferenceDensity& ref,
                     const EstimatorOptions& opts = {});

// Closed-form KL( N(mean1, cov1) || N(mean0, diag(var0)) ). cov1 is dense
// row-major d x d.
double gaussian_kl_closed_form(const Vec& mean1, const std::vector<double>& cov1,
                               const Vec& mean0, const Vec& var0);

struct WassersteinOptions {
  std::size_t bootstrap = 100;
  std::uint64_t seed = 0;
  std::size_t assignment_cap = 2048;  // 2D exact assignment size limit
};

struct WassersteinResult {
  double value = 0.0;
  double se = 0.0;
  bool subsampled = false;  // 2D input exceeded the cap and was subsampled
};

// W_beta between equal-size samples: sorted coupling in 1D (exact), minimum
// cost assignment in 2D (exact up to the size cap).
WassersteinResult wasserstein_beta(const Matrix& a, const Matrix& b, double beta,
                                   const WassersteinOptions& opts = {});

// W_beta between samples and a reference, through reference draws of equal
// count.
WassersteinResult wasserstein_beta(const Matrix& samples, const ReferenceDensity& ref,
                                   double beta, const WassersteinOptions& opts = {});

// Exact minimum-cost assignment value (Jonker-Volgenant, dense costs). Used
// as the 2D route and as the cross-check oracle for the 1D sorted coupling.
double assignment_cost(const std::vector<double>& cost, std::size_t n);

struct InequalityVerdict {
  enum class State { Pass, Fail, Skipped };
  State state = State::Skipped;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string detail;

  bool passed() const { return state != State::Fail; }
};

// TV <= sqrt(KL/2), evaluated SE-aware as
//   tv <= sqrt((kl + 3 se_kl)/2) + 3 se_tv.
// Both estimates must come from the same bin partition for the comparison to
// be a consistency check.
InequalityVerdict pinsker_check(const Estimate& kl, const Estimate& tv);

struct BolleyVillaniInputs {
  double a = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double U0 = 0.0;              // energy at the origin
  std::vector<double> alphas;   // smoothness exponents
  double L = 0.0;               // max smoothness constant
  int dim = 0;
};

// The transport bound evaluated at a given KL:
//   W_beta <= 2 [ (a/(4 beta)) (1.5 + d~ + c~) ]^(1/beta) (H^(1/beta) + H^(1/(2 beta)))
// with c~ evaluated at smoothing radius zero.
double bolley_villani_bound(double kl, const BolleyVillaniInputs& in);

// Verdict that the measured W_beta respects the bound at the measured KL.
// Refuses beta < 1; missing constants are reported as skipped.
InequalityVerdict bolley_villani_check(const Estimate& kl, const Estimate& w,
                                       const BolleyVillaniInputs& in);

BolleyVillaniInputs bolley_villani_inputs(const PotentialSpec& p);

struct MetricReport {
  std::optional<Estimate> kl;
  std::string kl_estimator;  // "gaussian_fit" or "histogram"
  std::optional<Estimate> tv;
  std::optional<Estimate> w_beta;
  double beta = 0.0;
  bool w_subsampled = false;
  std::map<int, Estimate> moments;  // s -> M_s estimate
  InequalityVerdict pinsker;
  std::optional<double> pinsker_partition_kl;  // histogram KL used by pinsker
  InequalityVerdict bolley_villani;

  bool all_verdicts_pass() const {
    return pinsker.passed() && bolley_villani.passed();
  }
  // Serialized shape is documented in the README (schema keys kl, kl_se, tv,
  // tv_se, w_beta, w_beta_se, beta, moments, verdicts).
  std::string to_json_string(int indent = -1) const;
};

// Sample moment functional M_s = mean of (1+||x||^2)^(s/2) with its SE.
Estimate sample_moment_functional(const Matrix& samples, double s);

}  // namespace ula
