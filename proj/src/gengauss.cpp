#include "ulalab/gengauss.hpp"

#include <cmath>
#include <limits>

#include "ulalab/errors.hpp"

namespace ula {

GenGaussSampler::GenGaussSampler(double p, int dim, std::uint64_t seed)
    : p_(p), dim_(dim), seed_(seed), rng_(seed) {
  if (!(p > 1.0)) throw InvalidArgumentError("shape p must be > 1");
  if (dim < 1) throw InvalidArgumentError("dim must be >= 1");
}

GenGaussSampler GenGaussSampler::clone_stream(std::uint64_t stream_index) const {
  std::uint64_t sm = seed_;
  const std::uint64_t derived =
      splitmix64(sm) ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
  return GenGaussSampler(p_, dim_, derived);
}

double GenGaussSampler::sample_coord() {
  const double g = rng_.gamma(1.0 / p_);
  const double mag = std::pow(p_ * g, 1.0 / p_);
  return (rng_.next_u64() & 1u) ? mag : -mag;
}

void GenGaussSampler::sample_into(Vec& out) {
  out.resize(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = sample_coord();
}

Vec GenGaussSampler::sample_one() {
  Vec x(dim_);
  sample_into(x);
  return x;
}

Matrix GenGaussSampler::sample(std::size_t n) {
  if (n < 1) throw InvalidArgumentError("need n >= 1 draws");
  Matrix m(n, dim_);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < dim_; ++j) m.data[i * dim_ + j] = sample_coord();
  return m;
}

KappaResult kappa(double p, int d) {
  if (!(p > 1.0)) throw InvalidArgumentError("shape p must be > 1");
  if (d < 1) throw InvalidArgumentError("dim must be >= 1");
  const double per_dim =
      std::log(2.0) + std::lgamma(1.0 / p) - (1.0 - 1.0 / p) * std::log(p);
  const double logv = d * per_dim;
  double v = std::exp(logv);
  if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
  return {logv, v};
}

double pnorm_moment_closed_form(double p, int d, double n) {
  return std::pow(p, n / p) *
         std::exp(std::lgamma((d + n) / p) - std::lgamma(d / p));
}

double rising_product(int d, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= static_cast<double>(d + i);
  return v;
}

MomentCheck moment_pnorm(GenGaussSampler& g, double n, std::size_t mc_samples) {
  if (n < 2.0) throw InvalidArgumentError("moment order n must be >= 2");
  if (mc_samples < 2) throw InvalidArgumentError("need at least 2 samples");
  const double p = g.shape();
  const int d = g.dim();

  double sum = 0.0, sumsq = 0.0;
  Vec x;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    g.sample_into(x);
    double pn = 0.0;
    for (double c : x) pn += std::pow(std::abs(c), p);
    const double v = std::pow(pn, n / p);  // ||x||_p^n
    sum += v;
    sumsq += v * v;
  }
  MomentCheck mc;
  mc.estimate = sum / static_cast<double>(mc_samples);
  const double var =
      std::max(0.0, sumsq / static_cast<double>(mc_samples) - mc.estimate * mc.estimate);
  mc.stderr_ = std::sqrt(var / static_cast<double>(mc_samples));

  mc.bracket_lo = std::pow(static_cast<double>(d), std::floor(n / p));
  mc.bracket_hi = std::pow(static_cast<double>(d) + n / 2.0, n / p);
  mc.bracket_pass = (mc.estimate >= mc.bracket_lo - 3.0 * mc.stderr_) &&
                    (mc.estimate <= mc.bracket_hi + 3.0 * mc.stderr_);

  const double k_real = n / p;
  const int k = static_cast<int>(std::lround(k_real));
  if (k >= 1 && std::abs(k_real - k) < 1e-9) {
    mc.exact_applicable = true;
    mc.exact_k = k;
    mc.exact_reference = rising_product(d, k);
    mc.exact_pass = std::abs(mc.estimate - mc.exact_reference) <= 3.0 * mc.stderr_;
  }
  return mc;
}

void SmoothingConfig::validate() const {
  if (mu < 0.0) throw InvalidArgumentError("smoothing radius mu must be >= 0");
  if (!(p > 1.0)) throw InvalidArgumentError("shape p must be > 1");
  if (mc_samples < 1) throw InvalidArgumentError("mc_samples must be >= 1");
}

ScalarEstimate smoothed_potential(const PotentialSpec& u, const SmoothingConfig& cfg,
                                  const Vec& x, GenGaussSampler& xi) {
  cfg.validate();
  if (static_cast<int>(x.size()) != u.dim)
    throw InvalidArgumentError("point dimension mismatch");
  if (cfg.mu == 0.0) return {u.eval(x), 0.0};

  double sum = 0.0, sumsq = 0.0;
  Vec y(x.size()), z;
  for (std::size_t s = 0; s < cfg.mc_samples; ++s) {
    xi.sample_into(z);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + cfg.mu * z[i];
    const double v = u.eval(y);
    sum += v;
    sumsq += v * v;
  }
  const double m = sum / static_cast<double>(cfg.mc_samples);
  const double var =
      std::max(0.0, sumsq / static_cast<double>(cfg.mc_samples) - m * m);
  return {m, cfg.mc_samples > 1
                 ? std::sqrt(var / static_cast<double>(cfg.mc_samples - 1))
                 : 0.0};
}

GradientEstimate smoothed_gradient(const PotentialSpec& u, const SmoothingConfig& cfg,
                                   const Vec& x, GenGaussSampler& xi) {
  cfg.validate();
  if (static_cast<int>(x.size()) != u.dim)
    throw InvalidArgumentError("point dimension mismatch");
  GradientEstimate est;
  if (cfg.mu == 0.0) {
    est.mean = u.grad(x);
    return est;
  }
  const std::size_t m = cfg.mc_samples;
  Vec mean(x.size(), 0.0), sumsq(x.size(), 0.0);
  Vec y(x.size()), z;
  for (std::size_t s = 0; s < m; ++s) {
    xi.sample_into(z);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + cfg.mu * z[i];
    const Vec gr = u.grad(y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      mean[i] += gr[i];
      sumsq[i] += gr[i] * gr[i];
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean[i] /= static_cast<double>(m);
    trace += std::max(0.0, sumsq[i] / static_cast<double>(m) - mean[i] * mean[i]);
  }
  est.mean = std::move(mean);
  est.cov_trace = trace;
  est.stderr_ = std::sqrt(trace / static_cast<double>(m));
  return est;
}

Vec stochastic_gradient(const PotentialSpec& u, const SmoothingConfig& cfg,
                        const Vec& x, GenGaussSampler& xi) {
  cfg.validate();
  if (static_cast<int>(x.size()) != u.dim)
    throw InvalidArgumentError("point dimension mismatch");
  if (cfg.mu == 0.0) return u.grad(x);  // degenerate: no draw consumed
  Vec z;
  xi.sample_into(z);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + cfg.mu * z[i];
  return u.grad(y);
}

WeakSmoothness WeakSmoothness::from_meta(const RegularityMeta& m) {
  if (!m.has_smoothness()) throw ConfigError("no smoothness metadata declared");
  WeakSmoothness w;
  w.n_terms = static_cast<double>(m.num_terms());
  w.L = m.smoothing_const();
  w.alpha = m.min_smooth_exponent();
  return w;
}

double smoothing_bias_bound(const WeakSmoothness& w, double mu, double p, int d) {
  const double dim_factor = std::pow(d, 2.0 / std::min(2.0, p));
  return w.n_terms * w.L * std::pow(mu, 1.0 + w.alpha) / (1.0 + w.alpha) * dim_factor;
}

double smoothing_gradient_bias_bound(const WeakSmoothness& w, double mu, double p,
                                     int d) {
  const double dim_factor = p <= 2.0 ? std::pow(d, 3.0 / p) : std::pow(d, 2.5);
  return w.n_terms * w.L * std::pow(mu, 1.0 + w.alpha) / (1.0 + w.alpha) * dim_factor;
}

double stochastic_gradient_variance_bound(const WeakSmoothness& w, double mu,
                                          double p, int d) {
  return 4.0 * w.n_terms * w.n_terms * w.L * w.L * std::pow(mu, 2.0 * w.alpha) *
         std::pow(d, 2.0 * w.alpha / p);
}

}  // namespace ula
