#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ulalab/gengauss.hpp"
#include "ulalab/potentials.hpp"
#include "ulalab/rng.hpp"
#include "ulalab/vec.hpp"

namespace ula {

// Per-chain substreams: noise, gradient smoothing, and initialization draws
// never share a stream, so a mode change cannot shift another stream.
enum class StreamRole : std::uint64_t { Noise = 0, Smoothing = 1, Init = 2 };

std::uint64_t chain_seed(std::uint64_t master, std::uint64_t chain_index);
std::uint64_t chain_substream_seed(std::uint64_t master, std::uint64_t chain_index,
                                   StreamRole role);

struct InitSpec {
  enum class Kind { GaussianOverL, Point, Custom };
  Kind kind = Kind::GaussianOverL;
  double L = 1.0;  // covariance I/L
  Vec x0;
  std::function<Vec(RngStream&)> custom;

  static InitSpec gaussian_over_L(double L) {
    InitSpec s;
    s.kind = Kind::GaussianOverL;
    s.L = L;
    return s;
  }
  static InitSpec point(Vec x) {
    InitSpec s;
    s.kind = Kind::Point;
    s.x0 = std::move(x);
    return s;
  }
};

enum class GradientSourceKind { Exact, Smoothed, Stochastic };

struct GradientSource {
  GradientSourceKind kind = GradientSourceKind::Exact;
  SmoothingConfig smoothing;
  // When set, stochastic mode uses mu = sqrt(eta) instead of smoothing.mu.
  bool mu_from_eta = false;
};

struct ChainConfig {
  PotentialSpec potential;
  std::size_t steps = 1;
  double eta = 0.1;
  GradientSource gradient;
  InitSpec init;
  std::uint64_t seed = 0;
  std::size_t burnin = 0;
  std::size_t thin = 0;  // 0: auto, max(1, steps/10^4)
  double divergence_radius = 1e6;

  void validate() const;
  std::size_t effective_thin() const;
  double effective_mu() const;
};

// Post-burn-in running statistics for one chain.
struct ChainSummary {
  std::size_t tail_count = 0;
  double tail_sq_radius = 0.0;  // time average of ||x||^2
  Vec tail_mean;                // time average of x
  double max_radius = 0.0;
};

struct Trajectory {
  std::vector<Vec> iterates;        // thinned; iterates[j] is the state after
                                    // step (j+1)*thin
  std::vector<double> grad_norms;   // ||grad|| at the same checkpoints
  Vec final_state;
  std::size_t steps_run = 0;
  std::size_t thin = 1;
  bool diverged = false;
  std::size_t diverged_step = 0;
  ChainSummary summary;
};

// One Euler step: x - eta*grad + sqrt(2*eta)*noise.
// Throws DivergedChainError (carrying step_index) on a non-finite gradient.
Vec ula_step(const Vec& x, double eta, const Vec& grad, const Vec& noise,
             std::size_t step_index = 0);

// Within-step interpolation x - t*grad + sqrt(2t)*noise for t in [0, eta].
Vec interpolated_state(const Vec& x, double t, double eta, const Vec& grad,
                       const Vec& noise, std::size_t step_index = 0);

Trajectory run_chain(const ChainConfig& cfg);

// Requested ensemble moment track: per-checkpoint ensemble mean of
// (1 + ||x||^2)^(s/2) for each s. Checkpoints are every `stride` steps.
struct MomentTrackRequest {
  std::vector<double> s_values;
  std::size_t stride = 1;
};

struct MomentTrack {
  double s = 0.0;
  std::size_t stride = 1;
  std::vector<double> values;  // values[j] = ensemble mean at step (j+1)*stride
};

struct DivergenceRecord {
  std::size_t chain = 0;
  std::size_t step = 0;
};

struct EnsembleResult {
  Matrix finals;  // M x d
  std::vector<ChainSummary> summaries;
  std::vector<DivergenceRecord> diverged;
  std::vector<MomentTrack> tracks;
};

// M independent chains with per-chain streams derived from (seed, chain index).
// Results are merged in chain order, so worker count never changes the output.
EnsembleResult run_ensemble(const ChainConfig& cfg, std::size_t chains,
                            std::size_t workers = 1,
                            const MomentTrackRequest* track = nullptr);

// eta = min{ 1, (epsilon / (2 T D))^(1/alpha) }.
struct PlannerInput {
  double epsilon = 0.0;
  double horizon_T = 0.0;
  double discretization_D = 0.0;
  double alpha = 1.0;  // smoothness exponent, or hessian exponent + 1
};
double plan_step_size(const PlannerInput& in);

// Optional extra cap when a Poincare/log-Sobolev constant gamma is declared:
// eta <= 1 ^ 1/(4 gamma) ^ (gamma / (9 N^(3/2) L^3))^(1/alpha).
double log_sobolev_step_cap(double gamma, double n_terms, double L, double alpha);

// Heuristic default for the planner's D: d^ceil(2 a_N^2 / beta), unit constant.
double default_discretization_constant(int d, const RegularityMeta& meta);

// Linear-growth analysis of a moment track: OLS slope over k*eta, plus a
// first-half/second-half slope comparison as the superlinearity detector.
struct MomentTrackReport {
  double slope = 0.0;
  double slope_se = 0.0;
  double first_half_slope = 0.0;
  double second_half_slope = 0.0;
  bool at_most_linear = false;
};
MomentTrackReport analyze_moment_track(const MomentTrack& track, double eta);

}  // namespace ula
