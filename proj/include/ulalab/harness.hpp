#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ulalab/metrics.hpp"
#include "ulalab/potentials.hpp"
#include "ulalab/sampler.hpp"

namespace ula {

// Flat key=value configuration with dotted section keys. '#' starts a
// comment; values may be comma lists. Canonicalization sorts keys, which
// makes the run id a pure function of content + seed.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  std::string canonical() const;
  std::uint64_t content_hash() const;  // FNV-1a over the canonical form
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

PotentialSpec potential_from_config(const Config& cfg);

struct ExperimentConfig {
  std::string name = "run";
  ChainConfig chain;
  std::size_t chains = 1;
  std::size_t workers = 1;

  std::vector<std::string> metric_requests;  // subset of {kl, tv, w_beta}
  std::vector<int> moment_requests;

  std::string reference_kind = "auto";  // auto | gaussian | grid
  double reference_half_width = 10.0;
  std::size_t reference_resolution = 4096;
  std::optional<double> w_beta_override;

  std::size_t certify_trials = 10000;
  double certify_radius = 10.0;

  std::string sweep_axis;  // eta | d | mu | epsilon (empty: no sweep)
  std::vector<double> sweep_values;
  double planner_T = 1.0;
  double planner_D = 0.0;  // 0: default heuristic from the metadata
  double planner_alpha = 0.0;

  std::optional<double> track_moment_s;
  std::size_t track_stride = 0;

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  Config raw;

  static ExperimentConfig from_config(const Config& cfg);
  std::string run_id() const;
};

struct EnsembleStats {
  std::size_t tail_count = 0;
  double pooled_second_moment = 0.0;  // time-and-ensemble average of ||x||^2
  Vec pooled_mean;
  std::size_t diverged_chains = 0;
  double max_radius = 0.0;
};

struct ExperimentResult {
  std::string run_id;
  MetricReport metrics;
  EnsembleStats stats;
  std::vector<CertificateReport> certificates;
  std::optional<MomentTrackReport> moment_track;
  bool verdicts_ok = true;
  std::string json_path;
  std::string csv_path;
  std::string report_json;  // full report payload
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Certifier-only entry point (CLI `certify`).
ExperimentResult run_certify(const ExperimentConfig& cfg);

struct SweepRow {
  double axis_value = 0.0;
  double eta_used = 0.0;
  Estimate kl;
  Estimate tv;
  bool has_tv = false;
  bool pinsker_pass = true;
  bool gated_in = false;  // included in the slope fit
};

struct SweepResult {
  std::string run_id;
  std::string axis;
  std::vector<SweepRow> rows;
  double slope = 0.0;
  double slope_se = 0.0;
  bool identifiable = false;
  bool verdicts_ok = true;
  std::string json_path;
  std::string csv_path;
  std::string report_json;
};

SweepResult run_sweep(const ExperimentConfig& cfg);

// Inverse-variance weighted log-log slope over rows with kl > 3 se_kl.
// identifiable requires at least 3 gated rows.
void fit_loglog_slope(SweepResult& result);

}  // namespace ula
