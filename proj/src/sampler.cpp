#include "ulalab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ulalab/errors.hpp"

namespace ula {

std::uint64_t chain_seed(std::uint64_t master, std::uint64_t chain_index) {
  std::uint64_t sm = master;
  return splitmix64(sm) ^ (0x9E3779B97F4A7C15ULL * (chain_index + 1));
}

std::uint64_t substream_seed(std::uint64_t cseed, StreamRole role) {
  std::uint64_t sm = cseed;
  return splitmix64(sm) ^
         (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(role) + 1));
}

std::uint64_t chain_substream_seed(std::uint64_t master, std::uint64_t chain_index,
                                   StreamRole role) {
  return substream_seed(chain_seed(master, chain_index), role);
}

namespace {

Vec draw_init(const InitSpec& init, int dim, RngStream& rng) {
  switch (init.kind) {
    case InitSpec::Kind::GaussianOverL: {
      if (init.L <= 0.0) throw InvalidArgumentError("init L must be positive");
      Vec x(dim);
      const double sd = 1.0 / std::sqrt(init.L);
      for (int i = 0; i < dim; ++i) x[i] = sd * rng.normal();
      return x;
    }
    case InitSpec::Kind::Point: {
      if (static_cast<int>(init.x0.size()) != dim)
        throw InvalidArgumentError("init point has the wrong dimension");
      return init.x0;
    }
    case InitSpec::Kind::Custom: {
      if (!init.custom) throw InvalidArgumentError("custom init without generator");
      Vec x = init.custom(rng);
      if (static_cast<int>(x.size()) != dim)
        throw InvalidArgumentError("custom init produced the wrong dimension");
      return x;
    }
  }
  throw InvalidArgumentError("unknown init kind");
}

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                 double* se_out) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    if (se_out) *se_out = 0.0;
    return 0.0;
  }
  const double b = sxy / sxx;
  if (se_out) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - my - b * (xs[i] - mx);
      rss += r * r;
    }
    *se_out = n > 2 ? std::sqrt(rss / (static_cast<double>(n - 2) * sxx)) : 0.0;
  }
  return b;
}

}  // namespace

void ChainConfig::validate() const {
  if (potential.dim < 1 || !potential.eval || !potential.grad)
    throw ConfigError("chain config needs a complete potential");
  if (steps < 1) throw ConfigError("steps must be >= 1", "chain.steps");
  if (!(eta > 0.0 && eta <= 1.0))
    throw ConfigError("eta must lie in (0, 1]", "chain.eta");
  if (burnin >= steps && burnin != 0)
    throw ConfigError("burnin must be smaller than steps", "chain.burnin");
  gradient.smoothing.validate();
}

std::size_t ChainConfig::effective_thin() const {
  if (thin > 0) return thin;
  return std::max<std::size_t>(1, steps / 10000);
}

double ChainConfig::effective_mu() const {
  if (gradient.kind == GradientSourceKind::Stochastic && gradient.mu_from_eta)
    return std::sqrt(eta);
  return gradient.smoothing.mu;
}

Vec ula_step(const Vec& x, double eta, const Vec& grad, const Vec& noise,
             std::size_t step_index) {
  if (!(eta > 0.0)) throw InvalidArgumentError("eta must be positive");
  if (grad.size() != x.size() || noise.size() != x.size())
    throw InvalidArgumentError("dimension mismatch in ula_step");
  if (!all_finite(grad))
    throw DivergedChainError(step_index, "non-finite gradient");
  const double diff = std::sqrt(2.0 * eta);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] - eta * grad[i] + diff * noise[i];
  return y;
}

Vec interpolated_state(const Vec& x, double t, double eta, const Vec& grad,
                       const Vec& noise, std::size_t step_index) {
  if (t < 0.0 || t > eta)
    throw InvalidArgumentError("interpolation time must lie in [0, eta]");
  if (grad.size() != x.size() || noise.size() != x.size())
    throw InvalidArgumentError("dimension mismatch in interpolated_state");
  if (!all_finite(grad))
    throw DivergedChainError(step_index, "non-finite gradient");
  const double diff = std::sqrt(2.0 * t);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] - t * grad[i] + diff * noise[i];
  return y;
}

namespace {

// Shared chain driver. Observer is called after every committed step. On
// divergence the chain keeps the last good state as its final state.
template <typename Observer>
Trajectory drive_chain(const ChainConfig& cfg, std::uint64_t cseed, Observer&& observe) {
  const int dim = cfg.potential.dim;
  const std::size_t thin = cfg.effective_thin();
  const double mu = cfg.effective_mu();

  RngStream noise_rng(substream_seed(cseed, StreamRole::Noise));
  RngStream init_rng(substream_seed(cseed, StreamRole::Init));
  GenGaussSampler smooth_rng(cfg.gradient.smoothing.p, dim,
                             substream_seed(cseed, StreamRole::Smoothing));
  SmoothingConfig smoothing = cfg.gradient.smoothing;
  smoothing.mu = mu;
  const bool exact = cfg.gradient.kind == GradientSourceKind::Exact || mu == 0.0;
  const bool stochastic = cfg.gradient.kind == GradientSourceKind::Stochastic;

  Trajectory traj;
  traj.thin = thin;
  traj.summary.tail_mean.assign(dim, 0.0);

  Vec x = draw_init(cfg.init, dim, init_rng);
  Vec y(dim), g(dim);
  const double guard_sq = cfg.divergence_radius * cfg.divergence_radius;
  const double diff = std::sqrt(2.0 * cfg.eta);

  const auto& grad_fast = cfg.potential.grad_into;
  double max_sq = 0.0;
  std::size_t until_thin = thin;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    if (exact) {
      if (grad_fast) {
        grad_fast(x, g);
      } else {
        g = cfg.potential.grad(x);
      }
    } else if (stochastic) {
      g = stochastic_gradient(cfg.potential, smoothing, x, smooth_rng);
    } else {
      g = smoothed_gradient(cfg.potential, smoothing, x, smooth_rng).mean;
    }
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double xi = x[i] - cfg.eta * g[i] + diff * noise_rng.normal();
      y[i] = xi;
      sq += xi * xi;
    }
    // NaN fails this comparison too, so one guard covers non-finite
    // gradients, non-finite states, and the escape radius.
    if (!(sq <= guard_sq)) {
      traj.diverged = true;
      traj.diverged_step = k;
      break;
    }
    std::swap(x, y);

    traj.steps_run = k + 1;
    max_sq = std::max(max_sq, sq);
    if (k + 1 > cfg.burnin) {
      traj.summary.tail_count++;
      traj.summary.tail_sq_radius += sq;
      for (int i = 0; i < dim; ++i) traj.summary.tail_mean[i] += x[i];
    }
    if (--until_thin == 0) {
      until_thin = thin;
      traj.iterates.push_back(x);
      traj.grad_norms.push_back(norm2(g));
    }
    observe(k, x, sq);
  }
  traj.summary.max_radius = std::sqrt(max_sq);

  if (traj.summary.tail_count > 0) {
    traj.summary.tail_sq_radius /= static_cast<double>(traj.summary.tail_count);
    for (int i = 0; i < dim; ++i)
      traj.summary.tail_mean[i] /= static_cast<double>(traj.summary.tail_count);
  }
  traj.final_state = x;
  return traj;
}

}  // namespace

Trajectory run_chain(const ChainConfig& cfg) {
  cfg.validate();
  return drive_chain(cfg, chain_seed(cfg.seed, 0),
                     [](std::size_t, const Vec&, double) {});
}

EnsembleResult run_ensemble(const ChainConfig& cfg, std::size_t chains,
                            std::size_t workers, const MomentTrackRequest* track) {
  cfg.validate();
  if (chains < 1) throw InvalidArgumentError("need at least one chain");
  const int dim = cfg.potential.dim;

  EnsembleResult out;
  out.finals = Matrix(chains, dim);
  out.summaries.resize(chains);

  const std::size_t stride = track ? std::max<std::size_t>(1, track->stride) : 1;
  const std::size_t n_checkpoints = track ? cfg.steps / stride : 0;
  const std::size_t n_s = track ? track->s_values.size() : 0;
  // per-chain checkpoint rows, merged in chain order after the joins
  std::vector<std::vector<double>> chain_rows;
  if (track) chain_rows.assign(chains, std::vector<double>(n_s * n_checkpoints, 0.0));

  std::vector<DivergenceRecord> diverged;
  std::vector<char> diverged_flag(chains, 0);
  std::vector<std::size_t> diverged_step(chains, 0);

  auto run_block = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      auto observe = [&](std::size_t k, const Vec& x, double sq) {
        if (!track) return;
        (void)x;
        if ((k + 1) % stride != 0) return;
        const std::size_t cp = (k + 1) / stride - 1;
        if (cp >= n_checkpoints) return;
        for (std::size_t si = 0; si < n_s; ++si) {
          const double s = track->s_values[si];
          chain_rows[c][si * n_checkpoints + cp] = std::pow(1.0 + sq, s / 2.0);
        }
      };
      Trajectory t = drive_chain(cfg, chain_seed(cfg.seed, c), observe);
      out.finals.set_row(c, t.final_state);
      out.summaries[c] = t.summary;
      if (t.diverged) {
        diverged_flag[c] = 1;
        diverged_step[c] = t.diverged_step;
      }
    }
  };

  if (workers <= 1 || chains < 2) {
    run_block(0, chains);
  } else {
    const std::size_t n_workers = std::min(workers, chains);
    std::vector<std::thread> pool;
    const std::size_t block = (chains + n_workers - 1) / n_workers;
    for (std::size_t w = 0; w < n_workers; ++w) {
      const std::size_t lo = w * block;
      const std::size_t hi = std::min(chains, lo + block);
      if (lo >= hi) break;
      pool.emplace_back(run_block, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t c = 0; c < chains; ++c)
    if (diverged_flag[c]) diverged.push_back({c, diverged_step[c]});
  out.diverged = std::move(diverged);

  if (track) {
    for (std::size_t si = 0; si < n_s; ++si) {
      MomentTrack mt;
      mt.s = track->s_values[si];
      mt.stride = stride;
      mt.values.assign(n_checkpoints, 0.0);
      for (std::size_t c = 0; c < chains; ++c)
        for (std::size_t cp = 0; cp < n_checkpoints; ++cp)
          mt.values[cp] += chain_rows[c][si * n_checkpoints + cp];
      for (auto& v : mt.values) v /= static_cast<double>(chains);
      out.tracks.push_back(std::move(mt));
    }
  }
  return out;
}

double plan_step_size(const PlannerInput& in) {
  if (!(in.epsilon > 0.0 && in.horizon_T > 0.0 && in.discretization_D > 0.0 &&
        in.alpha > 0.0))
    throw InvalidArgumentError("planner inputs must all be positive");
  const double base = in.epsilon / (2.0 * in.horizon_T * in.discretization_D);
  return std::min(1.0, std::pow(base, 1.0 / in.alpha));
}

double log_sobolev_step_cap(double gamma, double n_terms, double L, double alpha) {
  if (!(gamma > 0.0 && n_terms > 0.0 && L > 0.0 && alpha > 0.0))
    throw InvalidArgumentError("cap inputs must all be positive");
  const double third = std::pow(gamma / (9.0 * std::pow(n_terms, 1.5) * L * L * L),
                                1.0 / alpha);
  return std::min({1.0, 1.0 / (4.0 * gamma), third});
}

double default_discretization_constant(int d, const RegularityMeta& meta) {
  if (!meta.has_smoothness() || !meta.has_dissipativity())
    throw ConfigError("need smoothness and dissipativity metadata for the default D");
  const double an = meta.max_smooth_exponent();
  const double expo = std::ceil(2.0 * an * an / meta.dissipativity_beta);
  return std::pow(static_cast<double>(d), expo);
}

MomentTrackReport analyze_moment_track(const MomentTrack& track, double eta) {
  MomentTrackReport rep;
  const std::size_t n = track.values.size();
  if (n < 4) throw InvalidArgumentError("moment track too short to analyze");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = eta * static_cast<double>((i + 1) * track.stride);

  rep.slope = ols_slope(t, track.values, &rep.slope_se);

  const std::size_t half = n / 2;
  std::vector<double> t1(t.begin(), t.begin() + half);
  std::vector<double> v1(track.values.begin(), track.values.begin() + half);
  std::vector<double> t2(t.begin() + half, t.end());
  std::vector<double> v2(track.values.begin() + half, track.values.end());
  double se1 = 0.0, se2 = 0.0;
  rep.first_half_slope = ols_slope(t1, v1, &se1);
  rep.second_half_slope = ols_slope(t2, v2, &se2);
  // Linear growth keeps the slope flat between halves; superlinear growth
  // steepens it beyond the joint noise level.
  const double noise = 3.0 * std::sqrt(se1 * se1 + se2 * se2);
  rep.at_most_linear =
      rep.second_half_slope - rep.first_half_slope <=
      noise + 1e-9 * (1.0 + std::abs(rep.first_half_slope));
  return rep;
}

}  // namespace ula
