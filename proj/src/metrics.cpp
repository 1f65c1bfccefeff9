#include "ulalab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "ulalab/errors.hpp"

namespace ula {

namespace {

constexpr double kTailBudget = 1e-6;
constexpr double kMinMass = 1e-300;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Composite Simpson over [a,b] with n (even) intervals.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i)
    s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// log of the Simpson integral of exp(logf) over the stored grid.
double log_simpson_grid_1d(const std::vector<double>& logf, double h) {
  const std::size_t n = logf.size() - 1;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logf) mx = std::max(mx, v);
  double s = std::exp(logf[0] - mx) + std::exp(logf[n] - mx);
  for (std::size_t i = 1; i < n; ++i)
    s += std::exp(logf[i] - mx) * (i % 2 ? 4.0 : 2.0);
  return mx + std::log(s * h / 3.0);
}

double log_simpson_grid_2d(const std::vector<double>& logf, std::size_t nodes,
                           double hx, double hy) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logf) mx = std::max(mx, v);
  const std::size_t n = nodes - 1;
  auto w = [n](std::size_t i) -> double {
    if (i == 0 || i == n) return 1.0;
    return i % 2 ? 4.0 : 2.0;
  };
  double s = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < nodes; ++j)
      row += w(j) * std::exp(logf[i * nodes + j] - mx);
    s += w(i) * row;
  }
  return mx + std::log(s * hx * hy / 9.0);
}

// Upper bound on the target mass outside the centered ball of radius R,
// using the dissipativity lower bound on U.
double tail_mass_upper(const PotentialSpec& u, double R) {
  const auto& m = u.regularity;
  if (!m.has_dissipativity() || !m.has_smoothness())
    throw ConfigError("tail-mass bound needs dissipativity and smoothness metadata");
  const double a = m.dissipativity_a, b = m.dissipativity_b, beta = m.dissipativity_beta;
  const double L = m.max_smooth_const();
  const double alpha1 = m.min_smooth_exponent();
  const double U0 = u.eval(Vec(u.dim, 0.0));
  const double R0 = b > 0.0 ? std::pow(2.0 * b / a, 1.0 / beta) : 0.0;
  double sumR0 = 0.0;
  for (double ai : m.smooth_exponents) sumR0 += std::pow(R0, 1.0 + ai);
  const double logC = -U0 + L / (1.0 + alpha1) * sumR0 + b / beta;
  const double s = a / (2.0 * beta);
  // integrate r^(d-1) exp(-s r^beta) from R out to where the integrand dies
  const double r_hi = std::max(R * 1.5, std::pow(760.0 / s, 1.0 / beta) + R + 1.0);
  const int d = u.dim;
  auto integrand = [&](double r) {
    const double e = -s * std::pow(r, beta);
    if (e < -745.0) return 0.0;
    return std::pow(r, d - 1) * std::exp(e);
  };
  const double integral = simpson(integrand, R, r_hi, 8192);
  const double surface = d == 1 ? 2.0 : 2.0 * M_PI;
  return std::exp(logC) * surface * integral;
}

struct HistogramDomain {
  Vec lo, hi;
  std::size_t bins = 0;
};

// -1 marks out-of-domain samples.
std::vector<int> bin_indices(const Matrix& samples, const HistogramDomain& dom) {
  const std::size_t d = samples.cols;
  const std::size_t B = dom.bins;
  std::vector<int> idx(samples.rows);
  for (std::size_t r = 0; r < samples.rows; ++r) {
    const double* x = samples.row(r);
    long flat = 0;
    bool inside = true;
    for (std::size_t k = 0; k < d; ++k) {
      const double w = (dom.hi[k] - dom.lo[k]) / static_cast<double>(B);
      const double t = (x[k] - dom.lo[k]) / w;
      if (t < 0.0 || t >= static_cast<double>(B)) {
        inside = false;
        break;
      }
      flat = flat * static_cast<long>(B) + static_cast<long>(t);
    }
    idx[r] = inside ? static_cast<int>(flat) : -1;
  }
  return idx;
}

double plugin_kl(const std::vector<double>& counts, double n,
                 const std::vector<double>& q, double q_out, double out_count) {
  double kl = 0.0;
  for (std::size_t b = 0; b < q.size(); ++b) {
    if (counts[b] <= 0.0) continue;  // empty sample bins contribute zero
    const double p = counts[b] / n;
    kl += p * std::log(p / std::max(q[b], kMinMass));
  }
  if (out_count > 0.0) {
    const double p = out_count / n;
    kl += p * std::log(p / std::max(q_out, kMinMass));
  }
  return kl;
}

double plugin_tv(const std::vector<double>& counts, double n,
                 const std::vector<double>& q, double q_out, double out_count) {
  double tv = 0.0;
  for (std::size_t b = 0; b < q.size(); ++b) tv += std::abs(counts[b] / n - q[b]);
  tv += std::abs(out_count / n - q_out);
  return 0.5 * tv;
}

struct BinnedData {
  std::vector<int> idx;
  std::vector<double> counts;
  double out_count = 0.0;
  std::vector<double> q;
  double q_out = 0.0;
  std::size_t bins = 0;
};

BinnedData bin_samples(const Matrix& samples, const ReferenceDensity& ref,
                       std::size_t bins) {
  if (samples.rows < 100)
    throw InsufficientDataError("histogram estimators need at least 100 samples");
  if (static_cast<int>(samples.cols) != ref.dim())
    throw InvalidArgumentError("sample dimension does not match the reference");
  BinnedData bd;
  bd.bins = bins == 0 ? default_bin_count(samples.rows) : bins;
  HistogramDomain dom;
  ref.histogram_domain(dom.lo, dom.hi);
  dom.bins = bd.bins;
  bd.idx = bin_indices(samples, dom);
  std::size_t cells = 1;
  for (std::size_t k = 0; k < samples.cols; ++k) cells *= bd.bins;
  bd.counts.assign(cells, 0.0);
  for (int i : bd.idx) {
    if (i < 0) {
      bd.out_count += 1.0;
    } else {
      bd.counts[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  bd.q = ref.bin_masses(bd.bins);
  bd.q_out = std::max(ref.out_of_domain_mass(bd.bins), kMinMass);
  return bd;
}

// Bootstrap over samples: resample the precomputed bin indices.
template <typename Stat>
double bootstrap_se_binned(const BinnedData& bd, std::size_t replicates,
                           std::uint64_t seed, Stat&& stat) {
  if (replicates < 2) return 0.0;
  RngStream rng(seed);
  const std::size_t n = bd.idx.size();
  std::vector<double> counts(bd.counts.size());
  std::vector<double> vals;
  vals.reserve(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    std::fill(counts.begin(), counts.end(), 0.0);
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int j = bd.idx[rng.next_u64() % n];
      if (j < 0) {
        out += 1.0;
      } else {
        counts[static_cast<std::size_t>(j)] += 1.0;
      }
    }
    vals.push_back(stat(counts, out));
  }
  double m = 0.0;
  for (double v : vals) m += v;
  m /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - m) * (v - m);
  return std::sqrt(var / static_cast<double>(vals.size() - 1));
}

struct GaussianMoments {
  Vec mean;
  std::vector<double> cov;  // dense row-major
};

GaussianMoments sample_moments(const Matrix& samples,
                               const std::vector<std::size_t>* pick = nullptr) {
  const std::size_t d = samples.cols;
  const std::size_t n = pick ? pick->size() : samples.rows;
  GaussianMoments gm;
  gm.mean.assign(d, 0.0);
  gm.cov.assign(d * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = samples.row(pick ? (*pick)[r] : r);
    for (std::size_t k = 0; k < d; ++k) gm.mean[k] += x[k];
  }
  for (std::size_t k = 0; k < d; ++k) gm.mean[k] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = samples.row(pick ? (*pick)[r] : r);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t l = k; l < d; ++l)
        gm.cov[k * d + l] += (x[k] - gm.mean[k]) * (x[l] - gm.mean[l]);
  }
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = k; l < d; ++l) {
      gm.cov[k * d + l] /= static_cast<double>(n - 1);
      gm.cov[l * d + k] = gm.cov[k * d + l];
    }
  return gm;
}

double logdet_spd(std::vector<double> a, std::size_t d) {
  // in-place Cholesky
  double logdet = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < i; ++k) s -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (s <= 0.0)
          throw InvalidArgumentError("covariance is not positive definite");
        a[i * d + i] = std::sqrt(s);
        logdet += 2.0 * std::log(a[i * d + i]);
      } else {
        a[j * d + i] = s / a[i * d + i];
      }
    }
  }
  return logdet;
}

}  // namespace

std::size_t default_bin_count(std::size_t n_samples) {
  const double b = std::ceil(std::cbrt(static_cast<double>(n_samples)));
  return static_cast<std::size_t>(std::clamp(b, 64.0, 1024.0));
}

// ---------------------------------------------------------------------------
// ReferenceDensity
// ---------------------------------------------------------------------------

ReferenceDensity ReferenceDensity::gaussian(Vec mean, Vec var_diag) {
  if (mean.empty() || mean.size() != var_diag.size())
    throw InvalidArgumentError("gaussian reference needs matching mean/variance");
  for (double v : var_diag)
    if (v <= 0.0) throw InvalidArgumentError("variances must be positive");
  ReferenceDensity r;
  r.kind_ = Kind::Gaussian;
  r.dim_ = static_cast<int>(mean.size());
  r.mean_ = std::move(mean);
  r.var_diag_ = std::move(var_diag);
  double logz = 0.0;
  for (double v : r.var_diag_) logz += 0.5 * std::log(2.0 * M_PI * v);
  r.log_normalizer_ = logz;
  r.tail_fraction_ = 0.0;
  return r;
}

ReferenceDensity ReferenceDensity::build_grid(const PotentialSpec& u,
                                              double half_width,
                                              std::size_t resolution) {
  if (half_width <= 0.0) throw InvalidArgumentError("half width must be positive");
  return build_grid(u, Vec(u.dim, -half_width), Vec(u.dim, half_width), resolution);
}

ReferenceDensity ReferenceDensity::build_grid(const PotentialSpec& u, const Vec& lo,
                                              const Vec& hi, std::size_t resolution) {
  if (u.dim < 1 || u.dim > 2)
    throw InvalidArgumentError("grid references support d <= 2");
  if (static_cast<int>(lo.size()) != u.dim || static_cast<int>(hi.size()) != u.dim)
    throw InvalidArgumentError("bounds have the wrong dimension");
  for (int k = 0; k < u.dim; ++k)
    if (!(lo[k] < 0.0 && hi[k] > 0.0))
      throw InvalidArgumentError("grid bounds must contain the origin");
  if (resolution < 8) throw InvalidArgumentError("resolution too small");
  if (resolution % 2) ++resolution;

  ReferenceDensity r;
  r.kind_ = Kind::Grid;
  r.dim_ = u.dim;
  r.lo_ = lo;
  r.hi_ = hi;
  r.res_ = resolution;
  r.energy_ = u.eval;

  auto tabulate = [&](std::size_t res, std::vector<double>& logf) {
    const std::size_t nodes = res + 1;
    if (u.dim == 1) {
      logf.resize(nodes);
      const double h = (hi[0] - lo[0]) / static_cast<double>(res);
      Vec x(1);
      for (std::size_t i = 0; i < nodes; ++i) {
        x[0] = lo[0] + h * static_cast<double>(i);
        logf[i] = -u.eval(x);
      }
      return log_simpson_grid_1d(logf, h);
    }
    logf.resize(nodes * nodes);
    const double hx = (hi[0] - lo[0]) / static_cast<double>(res);
    const double hy = (hi[1] - lo[1]) / static_cast<double>(res);
    Vec x(2);
    for (std::size_t i = 0; i < nodes; ++i) {
      x[0] = lo[0] + hx * static_cast<double>(i);
      for (std::size_t j = 0; j < nodes; ++j) {
        x[1] = lo[1] + hy * static_cast<double>(j);
        logf[i * nodes + j] = -u.eval(x);
      }
    }
    return log_simpson_grid_2d(logf, nodes, hx, hy);
  };

  std::vector<double> coarse_logf, fine_logf;
  const double logz_coarse = tabulate(resolution, coarse_logf);
  const double logz_fine = tabulate(2 * resolution, fine_logf);
  if (std::abs(std::expm1(logz_coarse - logz_fine)) > kTailBudget)
    throw ConfigError("grid normalizer did not stabilize; raise the resolution");
  r.log_density_ = std::move(coarse_logf);
  r.log_normalizer_ = logz_fine;

  // Tail gate through the dissipativity lower bound, relative to Z.
  double r_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < u.dim; ++k)
    r_min = std::min({r_min, -lo[k], hi[k]});
  const double z = std::exp(r.log_normalizer_);
  const double frac = tail_mass_upper(u, r_min) / z;
  r.tail_fraction_ = frac;
  if (frac > kTailBudget) {
    double rs = r_min;
    for (int it = 0; it < 200 && tail_mass_upper(u, rs) / z > 0.1 * kTailBudget; ++it)
      rs *= 1.25;
    throw EnlargeBoundsError(frac, Vec(u.dim, rs));
  }

  r.build_sampling_tables();
  return r;
}

void ReferenceDensity::build_sampling_tables() {
  const std::size_t nodes = res_ + 1;
  if (dim_ == 1) {
    const double h = (hi_[0] - lo_[0]) / static_cast<double>(res_);
    cell_cdf_.assign(res_, 0.0);
    double acc = 0.0;
    for (std::size_t c = 0; c < res_; ++c) {
      const double f0 = std::exp(log_density_[c] - log_normalizer_);
      const double f1 = std::exp(log_density_[c + 1] - log_normalizer_);
      acc += 0.5 * (f0 + f1) * h;
      cell_cdf_[c] = acc;
    }
  } else {
    const double hx = (hi_[0] - lo_[0]) / static_cast<double>(res_);
    const double hy = (hi_[1] - lo_[1]) / static_cast<double>(res_);
    cell_cdf_.assign(res_ * res_, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < res_; ++i) {
      for (std::size_t j = 0; j < res_; ++j) {
        const double f =
            0.25 * (std::exp(log_density_[i * nodes + j] - log_normalizer_) +
                    std::exp(log_density_[(i + 1) * nodes + j] - log_normalizer_) +
                    std::exp(log_density_[i * nodes + j + 1] - log_normalizer_) +
                    std::exp(log_density_[(i + 1) * nodes + j + 1] - log_normalizer_));
        acc += f * hx * hy;
        cell_cdf_[i * res_ + j] = acc;
      }
    }
  }
}

double ReferenceDensity::density(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw InvalidArgumentError("point has the wrong dimension");
  if (kind_ == Kind::Gaussian) {
    double logp = 0.0;
    for (int k = 0; k < dim_; ++k)
      logp += -0.5 * (x[k] - mean_[k]) * (x[k] - mean_[k]) / var_diag_[k];
    return std::exp(logp - log_normalizer_);
  }
  return std::exp(-energy_(x) - log_normalizer_);
}

void ReferenceDensity::histogram_domain(Vec& lo, Vec& hi) const {
  if (kind_ == Kind::Grid) {
    lo = lo_;
    hi = hi_;
    return;
  }
  lo.resize(dim_);
  hi.resize(dim_);
  for (int k = 0; k < dim_; ++k) {
    const double sd = std::sqrt(var_diag_[k]);
    lo[k] = mean_[k] - 10.0 * sd;
    hi[k] = mean_[k] + 10.0 * sd;
  }
}

std::vector<double> ReferenceDensity::bin_masses(std::size_t bins) const {
  Vec lo, hi;
  histogram_domain(lo, hi);
  if (kind_ == Kind::Gaussian) {
    // product of per-axis CDF increments
    std::vector<std::vector<double>> axis(dim_);
    for (int k = 0; k < dim_; ++k) {
      axis[k].resize(bins);
      const double w = (hi[k] - lo[k]) / static_cast<double>(bins);
      const double sd = std::sqrt(var_diag_[k]);
      for (std::size_t b = 0; b < bins; ++b) {
        const double a0 = (lo[k] + w * static_cast<double>(b) - mean_[k]) / sd;
        const double a1 = (lo[k] + w * static_cast<double>(b + 1) - mean_[k]) / sd;
        axis[k][b] = std_normal_cdf(a1) - std_normal_cdf(a0);
      }
    }
    if (dim_ == 1) return axis[0];
    std::vector<double> q(bins * bins);
    for (std::size_t i = 0; i < bins; ++i)
      for (std::size_t j = 0; j < bins; ++j) q[i * bins + j] = axis[0][i] * axis[1][j];
    return q;
  }

  // Grid: integrate the exact density over each bin with composite Simpson.
  constexpr std::size_t kSub = 16;
  if (dim_ == 1) {
    std::vector<double> q(bins);
    const double w = (hi[0] - lo[0]) / static_cast<double>(bins);
    Vec x(1);
    for (std::size_t b = 0; b < bins; ++b) {
      const double a0 = lo[0] + w * static_cast<double>(b);
      q[b] = simpson(
          [&](double t) {
            x[0] = t;
            return std::exp(-energy_(x) - log_normalizer_);
          },
          a0, a0 + w, kSub);
    }
    return q;
  }
  std::vector<double> q(bins * bins);
  const double wx = (hi[0] - lo[0]) / static_cast<double>(bins);
  const double wy = (hi[1] - lo[1]) / static_cast<double>(bins);
  Vec x(2);
  for (std::size_t i = 0; i < bins; ++i) {
    const double ax = lo[0] + wx * static_cast<double>(i);
    for (std::size_t j = 0; j < bins; ++j) {
      const double ay = lo[1] + wy * static_cast<double>(j);
      q[i * bins + j] = simpson(
          [&](double tx) {
            x[0] = tx;
            return simpson(
                [&](double ty) {
                  x[1] = ty;
                  return std::exp(-energy_(x) - log_normalizer_);
                },
                ay, ay + wy, 8);
          },
          ax, ax + wx, 8);
    }
  }
  return q;
}

double ReferenceDensity::out_of_domain_mass(std::size_t bins) const {
  if (kind_ == Kind::Grid) return std::max(tail_fraction_, kMinMass);
  const auto q = bin_masses(bins);
  double inside = 0.0;
  for (double v : q) inside += v;
  return std::max(1.0 - inside, kMinMass);
}

void ReferenceDensity::draw(RngStream& rng, Vec& out) const {
  out.resize(dim_);
  if (kind_ == Kind::Gaussian) {
    for (int k = 0; k < dim_; ++k)
      out[k] = mean_[k] + std::sqrt(var_diag_[k]) * rng.normal();
    return;
  }
  const double total = cell_cdf_.back();
  const double u = rng.uniform() * total;
  const std::size_t cell = static_cast<std::size_t>(
      std::lower_bound(cell_cdf_.begin(), cell_cdf_.end(), u) - cell_cdf_.begin());
  const std::size_t nodes = res_ + 1;
  if (dim_ == 1) {
    const double h = (hi_[0] - lo_[0]) / static_cast<double>(res_);
    const double prev = cell == 0 ? 0.0 : cell_cdf_[cell - 1];
    const double rem = u - prev;
    const double f0 = std::exp(log_density_[cell] - log_normalizer_);
    const double f1 = std::exp(log_density_[cell + 1] - log_normalizer_);
    // invert the piecewise-linear density within the cell
    const double a = 0.5 * (f1 - f0) / h;
    double t;
    if (std::abs(a) < 1e-14 * std::max(f0, 1e-30)) {
      t = f0 > 0.0 ? rem / f0 : 0.5 * h;
    } else {
      t = (-f0 + std::sqrt(std::max(0.0, f0 * f0 + 4.0 * a * rem))) / (2.0 * a);
    }
    out[0] = lo_[0] + h * static_cast<double>(cell) + std::clamp(t, 0.0, h);
    return;
  }
  const double hx = (hi_[0] - lo_[0]) / static_cast<double>(res_);
  const double hy = (hi_[1] - lo_[1]) / static_cast<double>(res_);
  const std::size_t ci = cell / res_;
  const std::size_t cj = cell % res_;
  (void)nodes;
  out[0] = lo_[0] + hx * (static_cast<double>(ci) + rng.uniform());
  out[1] = lo_[1] + hy * (static_cast<double>(cj) + rng.uniform());
}

Matrix ReferenceDensity::draw_matrix(RngStream& rng, std::size_t n) const {
  Matrix m(n, dim_);
  Vec x;
  for (std::size_t i = 0; i < n; ++i) {
    draw(rng, x);
    m.set_row(i, x);
  }
  return m;
}

double ReferenceDensity::moment_functional(double s) const {
  if (kind_ != Kind::Grid)
    throw CapabilityError("moment functional is computed on grid references");
  const std::size_t nodes = res_ + 1;
  if (dim_ == 1) {
    const double h = (hi_[0] - lo_[0]) / static_cast<double>(res_);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double x = lo_[0] + h * static_cast<double>(i);
      const double w = (i == 0 || i == res_) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::pow(1.0 + x * x, s / 2.0) *
             std::exp(log_density_[i] - log_normalizer_);
    }
    return acc * h / 3.0;
  }
  const double hx = (hi_[0] - lo_[0]) / static_cast<double>(res_);
  const double hy = (hi_[1] - lo_[1]) / static_cast<double>(res_);
  auto w = [this](std::size_t i) -> double {
    if (i == 0 || i == res_) return 1.0;
    return i % 2 ? 4.0 : 2.0;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x0 = lo_[0] + hx * static_cast<double>(i);
    for (std::size_t j = 0; j < nodes; ++j) {
      const double x1 = lo_[1] + hy * static_cast<double>(j);
      acc += w(i) * w(j) * std::pow(1.0 + x0 * x0 + x1 * x1, s / 2.0) *
             std::exp(log_density_[i * nodes + j] - log_normalizer_);
    }
  }
  return acc * hx * hy / 9.0;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

double gaussian_kl_closed_form(const Vec& mean1, const std::vector<double>& cov1,
                               const Vec& mean0, const Vec& var0) {
  const std::size_t d = mean1.size();
  if (mean0.size() != d || var0.size() != d || cov1.size() != d * d)
    throw InvalidArgumentError("dimension mismatch in gaussian KL");
  double tr = 0.0, quad = 0.0, logdet0 = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    tr += cov1[k * d + k] / var0[k];
    quad += (mean1[k] - mean0[k]) * (mean1[k] - mean0[k]) / var0[k];
    logdet0 += std::log(var0[k]);
  }
  const double logdet1 = logdet_spd(cov1, d);
  return 0.5 * (tr + quad - static_cast<double>(d) + logdet0 - logdet1);
}

Estimate estimate_kl(const Matrix& samples, const ReferenceDensity& ref,
                     const EstimatorOptions& opts) {
  if (samples.rows < 100)
    throw InsufficientDataError("KL estimation needs at least 100 samples");
  if (static_cast<int>(samples.cols) != ref.dim())
    throw InvalidArgumentError("sample dimension does not match the reference");

  if (ref.kind() == ReferenceDensity::Kind::Gaussian) {
    const auto gm = sample_moments(samples);
    Estimate est;
    est.value = gaussian_kl_closed_form(gm.mean, gm.cov, ref.mean(), ref.var_diag());
    if (opts.bootstrap >= 2) {
      RngStream rng(opts.seed);
      std::vector<double> vals;
      vals.reserve(opts.bootstrap);
      std::vector<std::size_t> pick(samples.rows);
      for (std::size_t b = 0; b < opts.bootstrap; ++b) {
        for (auto& i : pick) i = rng.next_u64() % samples.rows;
        const auto bm = sample_moments(samples, &pick);
        vals.push_back(
            gaussian_kl_closed_form(bm.mean, bm.cov, ref.mean(), ref.var_diag()));
      }
      double m = 0.0;
      for (double v : vals) m += v;
      m /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - m) * (v - m);
      est.se = std::sqrt(var / static_cast<double>(vals.size() - 1));
    }
    return est;
  }

  return estimate_kl_histogram(samples, ref, opts);
}

Estimate estimate_kl_histogram(const Matrix& samples, const ReferenceDensity& ref,
                               const EstimatorOptions& opts) {
  const auto bd = bin_samples(samples, ref, opts.bins);
  Estimate est;
  const double n = static_cast<double>(samples.rows);
  est.value = plugin_kl(bd.counts, n, bd.q, bd.q_out, bd.out_count);
  est.se = bootstrap_se_binned(bd, opts.bootstrap, opts.seed,
                               [&](const std::vector<double>& c, double out) {
                                 return plugin_kl(c, n, bd.q, bd.q_out, out);
                               });
  return est;
}

Estimate estimate_tv(const Matrix& samples, const ReferenceDensity& ref,
                     const EstimatorOptions& opts) {
  const auto bd = bin_samples(samples, ref, opts.bins);
  Estimate est;
  const double n = static_cast<double>(samples.rows);
  est.value = plugin_tv(bd.counts, n, bd.q, bd.q_out, bd.out_count);
  est.se = bootstrap_se_binned(bd, opts.bootstrap, opts.seed,
                               [&](const std::vector<double>& c, double out) {
                                 return plugin_tv(c, n, bd.q, bd.q_out, out);
                               });
  return est;
}

namespace {

double coupling_cost(const Matrix& a, const Matrix& b,
                     const std::vector<std::size_t>& ia,
                     const std::vector<std::size_t>& ib, double beta,
                     std::size_t cap, bool* subsampled, RngStream* sub_rng) {
  const std::size_t n = ia.size();
  const std::size_t d = a.cols;
  if (d == 1) {
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = a.row(ia[i])[0];
      ys[i] = b.row(ib[i])[0];
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += std::pow(std::abs(xs[i] - ys[i]), beta);
    return std::pow(acc / static_cast<double>(n), 1.0 / beta);
  }
  // 2D: exact assignment, subsampling above the cap
  std::vector<std::size_t> sa(ia), sb(ib);
  if (n > cap) {
    if (subsampled) *subsampled = true;
    for (std::size_t i = 0; i < cap; ++i) {
      std::swap(sa[i], sa[i + sub_rng->next_u64() % (n - i)]);
      std::swap(sb[i], sb[i + sub_rng->next_u64() % (n - i)]);
    }
    sa.resize(cap);
    sb.resize(cap);
  }
  const std::size_t m = sa.size();
  std::vector<double> cost(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.row(sa[i]);
    for (std::size_t j = 0; j < m; ++j) {
      const double* y = b.row(sb[j]);
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) sq += (x[k] - y[k]) * (x[k] - y[k]);
      cost[i * m + j] = std::pow(std::sqrt(sq), beta);
    }
  }
  return std::pow(assignment_cost(cost, m) / static_cast<double>(m), 1.0 / beta);
}

}  // namespace

WassersteinResult wasserstein_beta(const Matrix& a, const Matrix& b, double beta,
                                   const WassersteinOptions& opts) {
  if (beta <= 0.0) throw InvalidArgumentError("beta must be positive");
  if (a.cols != b.cols || a.cols < 1 || a.cols > 2)
    throw InvalidArgumentError("wasserstein supports matching 1D/2D samples");
  if (a.rows != b.rows)
    throw InvalidArgumentError("wasserstein needs equal-size sample sets");
  if (a.rows < 1) throw InvalidArgumentError("empty sample sets");

  const std::size_t n = a.rows;
  std::vector<std::size_t> ia(n), ib(n);
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);

  WassersteinResult res;
  RngStream sub_rng(opts.seed ^ 0x5DEECE66DULL);
  res.value = coupling_cost(a, b, ia, ib, beta, opts.assignment_cap,
                            &res.subsampled, &sub_rng);

  if (opts.bootstrap >= 2) {
    RngStream rng(opts.seed);
    std::vector<double> vals;
    vals.reserve(opts.bootstrap);
    std::vector<std::size_t> ra(n), rb(n);
    for (std::size_t rep = 0; rep < opts.bootstrap; ++rep) {
      for (std::size_t i = 0; i < n; ++i) {
        ra[i] = rng.next_u64() % n;
        rb[i] = rng.next_u64() % n;
      }
      vals.push_back(
          coupling_cost(a, b, ra, rb, beta, opts.assignment_cap, nullptr, &sub_rng));
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    res.se = std::sqrt(var / static_cast<double>(vals.size() - 1));
  }
  return res;
}

WassersteinResult wasserstein_beta(const Matrix& samples, const ReferenceDensity& ref,
                                   double beta, const WassersteinOptions& opts) {
  RngStream rng(opts.seed ^ 0xA02BDBF7BB3C0A7ULL);
  const Matrix ref_draws = ref.draw_matrix(rng, samples.rows);
  return wasserstein_beta(samples, ref_draws, beta, opts);
}

// ---------------------------------------------------------------------------
// Inequality verdicts
// ---------------------------------------------------------------------------

InequalityVerdict pinsker_check(const Estimate& kl, const Estimate& tv) {
  InequalityVerdict v;
  v.lhs = tv.value;
  v.rhs = std::sqrt(std::max(kl.value + 3.0 * kl.se, 0.0) / 2.0) + 3.0 * tv.se;
  v.state = v.lhs <= v.rhs ? InequalityVerdict::State::Pass
                           : InequalityVerdict::State::Fail;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "tv=%.6g vs sqrt((kl+3se)/2)+3se_tv=%.6g", v.lhs,
                v.rhs);
  v.detail = buf;
  return v;
}

double bolley_villani_bound(double kl, const BolleyVillaniInputs& in) {
  const double beta = in.beta;
  const double d = static_cast<double>(in.dim);
  const double dt = d / beta *
                    (0.5 * beta * std::log(M_PI) + std::log(4.0 * beta / in.a) +
                     (1.0 - 0.5 * beta) * std::log(d / (2.0 * M_E)));
  double sum = 0.0;
  for (double ai : in.alphas)
    sum += in.b > 0.0 ? std::pow(2.0 * in.b / in.a, (ai + 1.0) / beta) : 0.0;
  const double ct = 0.5 * std::log(2.0 / beta) +
                    in.L / (1.0 + in.alphas.front()) * sum + in.b / beta +
                    std::abs(in.U0);
  const double base = in.a / (4.0 * beta) * (1.5 + dt + ct);
  if (base <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double h = std::max(kl, 0.0);
  return 2.0 * std::pow(base, 1.0 / beta) *
         (std::pow(h, 1.0 / beta) + std::pow(h, 1.0 / (2.0 * beta)));
}

InequalityVerdict bolley_villani_check(const Estimate& kl, const Estimate& w,
                                       const BolleyVillaniInputs& in) {
  InequalityVerdict v;
  if (in.a <= 0.0 || in.beta <= 0.0 || in.alphas.empty() || in.L <= 0.0 ||
      in.dim < 1) {
    v.state = InequalityVerdict::State::Skipped;
    v.detail = "missing dissipativity or smoothness constants";
    return v;
  }
  if (in.beta < 1.0) {
    v.state = InequalityVerdict::State::Skipped;
    v.detail = "beta < 1 lies outside the bound's derivation range";
    return v;
  }
  const double rhs = bolley_villani_bound(kl.value + 3.0 * kl.se, in);
  if (!std::isfinite(rhs)) {
    v.state = InequalityVerdict::State::Skipped;
    v.detail = "bound constant is not positive";
    return v;
  }
  v.lhs = w.value - 3.0 * w.se;
  v.rhs = rhs;
  v.state = v.lhs <= v.rhs ? InequalityVerdict::State::Pass
                           : InequalityVerdict::State::Fail;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "w-3se=%.6g vs bound(kl+3se)=%.6g", v.lhs, v.rhs);
  v.detail = buf;
  return v;
}

BolleyVillaniInputs bolley_villani_inputs(const PotentialSpec& p) {
  BolleyVillaniInputs in;
  in.dim = p.dim;
  in.U0 = p.eval(Vec(p.dim, 0.0));
  const auto& m = p.regularity;
  in.a = m.dissipativity_a;
  in.b = m.dissipativity_b;
  in.beta = m.dissipativity_beta;
  in.alphas = m.smooth_exponents;
  in.L = m.max_smooth_const();
  return in;
}

Estimate sample_moment_functional(const Matrix& samples, double s) {
  if (samples.rows < 2) throw InsufficientDataError("need at least 2 samples");
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t r = 0; r < samples.rows; ++r) {
    double sq = 0.0;
    const double* x = samples.row(r);
    for (std::size_t k = 0; k < samples.cols; ++k) sq += x[k] * x[k];
    const double v = std::pow(1.0 + sq, s / 2.0);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(samples.rows);
  Estimate est;
  est.value = sum / n;
  const double var = std::max(0.0, sumsq / n - est.value * est.value);
  est.se = std::sqrt(var / (n - 1.0));
  return est;
}

namespace {

const char* verdict_name(InequalityVerdict::State s) {
  switch (s) {
    case InequalityVerdict::State::Pass:
      return "pass";
    case InequalityVerdict::State::Fail:
      return "fail";
    case InequalityVerdict::State::Skipped:
      return "skipped";
  }
  return "skipped";
}

nlohmann::ordered_json verdict_json(const InequalityVerdict& v) {
  nlohmann::ordered_json j;
  j["state"] = verdict_name(v.state);
  if (v.state != InequalityVerdict::State::Skipped) {
    j["lhs"] = v.lhs;
    j["rhs"] = v.rhs;
  }
  j["detail"] = v.detail;
  return j;
}

}  // namespace

std::string MetricReport::to_json_string(int indent) const {
  nlohmann::ordered_json j;
  if (kl) {
    j["kl"] = kl->value;
    j["kl_se"] = kl->se;
    j["kl_estimator"] = kl_estimator;
  }
  if (tv) {
    j["tv"] = tv->value;
    j["tv_se"] = tv->se;
  }
  if (w_beta) {
    j["w_beta"] = w_beta->value;
    j["w_beta_se"] = w_beta->se;
    j["beta"] = beta;
    j["w_subsampled"] = w_subsampled;
  }
  if (!moments.empty()) {
    nlohmann::ordered_json jm;
    for (const auto& [s, est] : moments) {
      nlohmann::ordered_json e;
      e["estimate"] = est.value;
      e["se"] = est.se;
      jm[std::to_string(s)] = e;
    }
    j["moments"] = jm;
  }
  nlohmann::ordered_json verdicts;
  verdicts["pinsker"] = verdict_json(pinsker);
  if (pinsker_partition_kl) verdicts["pinsker"]["partition_kl"] = *pinsker_partition_kl;
  verdicts["bolley_villani"] = verdict_json(bolley_villani);
  j["verdicts"] = verdicts;
  return j.dump(indent);
}

}  // namespace ula
