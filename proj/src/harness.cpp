#include "ulalab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ulalab/errors.hpp"
#include "ulalab/gengauss.hpp"

namespace ula {

namespace {

using nlohmann::ordered_json;

// Fixed substream indices for everything the harness randomizes besides the
// chains themselves.
constexpr std::uint64_t kKlSeedTag = 0x6b6cULL;
constexpr std::uint64_t kTvSeedTag = 0x7476ULL;
constexpr std::uint64_t kWSeedTag = 0x7762ULL;
constexpr std::uint64_t kPartitionSeedTag = 0x706bULL;

std::uint64_t tagged_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t sm = master ^ (tag * 0x9E3779B97F4A7C15ULL);
  return splitmix64(sm);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Config Config::parse_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    c.kv_[key] = value;
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  kv_[trim(key)] = trim(value);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required key", key);
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + it->second + "'", key);
  }
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  if (v < 0.0 || v != std::floor(v))
    throw ConfigError("expected a non-negative integer", key);
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("not an unsigned integer: '" + it->second + "'", key);
  }
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_string_list(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: '" + s + "'", key);
    }
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t Config::content_hash() const { return fnv1a64(canonical()); }

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

PotentialSpec potential_from_config(const Config& cfg) {
  const std::string name = cfg.require_string("potential.name");
  const int dim = static_cast<int>(cfg.get_size("potential.dim", 1));
  if (name == "quadratic") {
    return make_quadratic(cfg.get_double("potential.a", 1.0), dim);
  }
  if (name == "mixture_norm") {
    std::vector<std::pair<double, double>> terms;
    for (const auto& t : cfg.get_string_list("potential.terms")) {
      const std::size_t colon = t.find(':');
      if (colon == std::string::npos)
        throw ConfigError("terms must be L:alpha pairs", "potential.terms");
      terms.emplace_back(std::stod(t.substr(0, colon)), std::stod(t.substr(colon + 1)));
    }
    if (terms.empty())
      throw ConfigError("mixture_norm needs potential.terms", "potential.terms");
    return make_mixture_norm(terms, dim);
  }
  if (name == "linear_tail") {
    auto alphas = cfg.get_list("potential.alphas");
    if (alphas.empty()) alphas = {1.0};
    return make_linear_tail(alphas, dim);
  }
  throw ConfigError("unknown potential '" + name + "'", "potential.name");
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig ec;
  ec.raw = cfg;
  ec.name = cfg.get_string("run.name", "run");
  ec.seed = cfg.get_u64("seed", 0);
  ec.out_dir = cfg.get_string("output.dir", "out");
  ec.workers = cfg.get_size("workers", 1);

  ec.chain.potential = potential_from_config(cfg);
  ec.chain.steps = cfg.get_size("chain.steps", 1000);
  ec.chain.burnin = cfg.get_size("chain.burnin", 0);
  ec.chain.eta = cfg.get_double("chain.eta", 0.1);
  ec.chain.seed = ec.seed;
  ec.chain.thin = cfg.get_size("chain.thin", 0);

  const std::string grad = cfg.get_string("chain.gradient", "exact");
  if (grad == "exact") {
    ec.chain.gradient.kind = GradientSourceKind::Exact;
  } else if (grad == "smoothed") {
    ec.chain.gradient.kind = GradientSourceKind::Smoothed;
  } else if (grad == "stochastic") {
    ec.chain.gradient.kind = GradientSourceKind::Stochastic;
  } else {
    throw ConfigError("unknown gradient source '" + grad + "'", "chain.gradient");
  }
  ec.chain.gradient.smoothing.p = cfg.get_double("smoothing.p", 2.0);
  ec.chain.gradient.smoothing.mc_samples = cfg.get_size("smoothing.mc_samples", 1024);
  if (cfg.has("smoothing.mu")) {
    ec.chain.gradient.smoothing.mu = cfg.get_double("smoothing.mu", 0.0);
  } else if (ec.chain.gradient.kind == GradientSourceKind::Stochastic) {
    ec.chain.gradient.mu_from_eta = true;  // mu = sqrt(eta)
  }

  const std::string init = cfg.get_string("init.kind", "gaussian_over_l");
  if (init == "gaussian_over_l") {
    ec.chain.init = InitSpec::gaussian_over_L(cfg.get_double("init.l", 1.0));
  } else if (init == "point") {
    Vec x0 = cfg.get_list("init.x0");
    if (x0.empty()) x0.assign(ec.chain.potential.dim, 0.0);
    ec.chain.init = InitSpec::point(std::move(x0));
  } else {
    throw ConfigError("unknown init kind '" + init + "'", "init.kind");
  }

  ec.chains = cfg.get_size("ensemble.chains", 1);
  ec.metric_requests = cfg.get_string_list("metrics.requests");
  for (double s : cfg.get_list("metrics.moments"))
    ec.moment_requests.push_back(static_cast<int>(s));

  ec.reference_kind = cfg.get_string("reference.kind", "auto");
  ec.reference_half_width = cfg.get_double("reference.bounds", 10.0);
  ec.reference_resolution = cfg.get_size("reference.resolution", 4096);
  if (cfg.has("wasserstein.beta"))
    ec.w_beta_override = cfg.get_double("wasserstein.beta", 0.0);

  ec.certify_trials = cfg.get_size("certify.trials", 10000);
  ec.certify_radius = cfg.get_double("certify.radius", 10.0);

  for (const char* axis : {"eta", "d", "mu", "epsilon"}) {
    const std::string key = std::string("sweep.") + axis;
    if (cfg.has(key)) {
      if (!ec.sweep_axis.empty())
        throw ConfigError("only one sweep axis per run", key);
      ec.sweep_axis = axis;
      ec.sweep_values = cfg.get_list(key);
      if (ec.sweep_values.empty()) throw ConfigError("sweep axis is empty", key);
    }
  }
  ec.planner_T = cfg.get_double("planner.t", 1.0);
  ec.planner_D = cfg.get_double("planner.bigd", 0.0);
  ec.planner_alpha = cfg.get_double("planner.alpha", 0.0);

  if (cfg.has("track.s")) {
    ec.track_moment_s = cfg.get_double("track.s", 4.0);
    ec.track_stride = cfg.get_size("track.stride", 0);
  }

  // validation with field paths
  ec.chain.validate();
  if (ec.chains < 1) throw ConfigError("need at least one chain", "ensemble.chains");
  for (const auto& m : ec.metric_requests)
    if (m != "kl" && m != "tv" && m != "w_beta")
      throw ConfigError("unknown metric '" + m + "'", "metrics.requests");
  const bool wants_grid_metrics =
      !ec.metric_requests.empty() && ec.reference_kind != "gaussian" &&
      ec.chain.potential.name != "quadratic";
  if (wants_grid_metrics && ec.chain.potential.dim > 2)
    throw ConfigError(
        "metrics with a grid reference need potential.dim <= 2; gaussian "
        "references cover higher dimension for quadratic targets only",
        "metrics.requests");
  return ec;
}

std::string ExperimentConfig::run_id() const {
  const std::uint64_t h =
      fnv1a64(raw.canonical() + "\nseed=" + std::to_string(seed));
  return name + "-" + hex16(h);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

ReferenceDensity make_reference(const ExperimentConfig& cfg) {
  const PotentialSpec& pot = cfg.chain.potential;
  std::string kind = cfg.reference_kind;
  if (kind == "auto") kind = pot.name == "quadratic" ? "gaussian" : "grid";
  if (kind == "gaussian") {
    if (pot.name != "quadratic")
      throw ConfigError("gaussian references require the quadratic potential",
                        "reference.kind");
    const double a = pot.regularity.dissipativity_a;
    return ReferenceDensity::gaussian(Vec(pot.dim, 0.0), Vec(pot.dim, 1.0 / a));
  }
  if (kind == "grid")
    return ReferenceDensity::build_grid(pot, cfg.reference_half_width,
                                        cfg.reference_resolution);
  throw ConfigError("unknown reference kind '" + kind + "'", "reference.kind");
}

bool requested(const ExperimentConfig& cfg, const char* what) {
  return std::find(cfg.metric_requests.begin(), cfg.metric_requests.end(), what) !=
         cfg.metric_requests.end();
}

EnsembleStats collect_stats(const EnsembleResult& ens, int dim) {
  EnsembleStats st;
  st.pooled_mean.assign(dim, 0.0);
  double weight = 0.0;
  for (const auto& s : ens.summaries) {
    if (s.tail_count == 0) continue;
    const double w = static_cast<double>(s.tail_count);
    st.tail_count += s.tail_count;
    st.pooled_second_moment += w * s.tail_sq_radius;
    for (int k = 0; k < dim; ++k) st.pooled_mean[k] += w * s.tail_mean[k];
    st.max_radius = std::max(st.max_radius, s.max_radius);
    weight += w;
  }
  if (weight > 0.0) {
    st.pooled_second_moment /= weight;
    for (int k = 0; k < dim; ++k) st.pooled_mean[k] /= weight;
  }
  st.diverged_chains = ens.diverged.size();
  return st;
}

MetricReport compute_metrics(const ExperimentConfig& cfg, const Matrix& finals,
                             const ReferenceDensity& ref) {
  MetricReport rep;
  const bool want_kl = requested(cfg, "kl");
  const bool want_tv = requested(cfg, "tv");
  const bool want_w = requested(cfg, "w_beta");

  EstimatorOptions kl_opts;
  kl_opts.seed = tagged_seed(cfg.seed, kKlSeedTag);
  EstimatorOptions tv_opts;
  tv_opts.seed = tagged_seed(cfg.seed, kTvSeedTag);

  if (want_kl) {
    rep.kl = estimate_kl(finals, ref, kl_opts);
    rep.kl_estimator =
        ref.kind() == ReferenceDensity::Kind::Gaussian ? "gaussian_fit" : "histogram";
  }
  if (want_tv) rep.tv = estimate_tv(finals, ref, tv_opts);

  if (want_kl && want_tv) {
    // The cross-estimator check compares TV against a KL computed on the same
    // bin partition; a Gaussian-fit KL would not be commensurable.
    Estimate partition_kl;
    if (rep.kl_estimator == "histogram") {
      partition_kl = *rep.kl;
    } else {
      EstimatorOptions pk_opts;
      pk_opts.seed = tagged_seed(cfg.seed, kPartitionSeedTag);
      partition_kl = estimate_kl_histogram(finals, ref, pk_opts);
      rep.pinsker_partition_kl = partition_kl.value;
    }
    rep.pinsker = pinsker_check(partition_kl, *rep.tv);
  }

  if (want_w) {
    const double beta = cfg.w_beta_override
                            ? *cfg.w_beta_override
                            : cfg.chain.potential.regularity.dissipativity_beta;
    rep.beta = beta;
    WassersteinOptions w_opts;
    w_opts.seed = tagged_seed(cfg.seed, kWSeedTag);
    if (cfg.chain.potential.dim == 2) w_opts.bootstrap = 20;
    const auto w = wasserstein_beta(finals, ref, beta, w_opts);
    rep.w_beta = Estimate{w.value, w.se};
    rep.w_subsampled = w.subsampled;
  }

  if (want_kl && want_w) {
    rep.bolley_villani = bolley_villani_check(
        *rep.kl, *rep.w_beta, bolley_villani_inputs(cfg.chain.potential));
  }

  for (int s : cfg.moment_requests)
    rep.moments[s] = sample_moment_functional(finals, static_cast<double>(s));
  return rep;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string finals_csv(const Matrix& finals) {
  std::string csv = "chain";
  for (std::size_t k = 0; k < finals.cols; ++k)
    csv += ",x" + std::to_string(k);
  csv += "\n";
  for (std::size_t r = 0; r < finals.rows; ++r) {
    csv += std::to_string(r);
    for (std::size_t k = 0; k < finals.cols; ++k)
      csv += "," + format_double(finals.row(r)[k]);
    csv += "\n";
  }
  return csv;
}

ordered_json certificate_json(const CertificateReport& c) {
  ordered_json j;
  j["check"] = c.check;
  j["passed"] = c.passed;
  j["trials"] = c.trials;
  j["worst_slack"] = c.worst_slack;
  j["worst_violation"] = c.worst_violation;
  j["witness_trial"] = c.witness_trial;
  j["witness_x"] = c.witness_x;
  j["witness_y"] = c.witness_y;
  if (!c.witness_v.empty()) j["witness_v"] = c.witness_v;
  j["used_fd_hessian"] = c.used_fd_hessian;
  if (!c.notes.empty()) j["notes"] = c.notes;
  return j;
}

ordered_json config_echo(const Config& cfg) {
  ordered_json j;
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

std::vector<CertificateReport> run_certifiers(const ExperimentConfig& cfg) {
  const auto& pot = cfg.chain.potential;
  std::vector<CertificateReport> out;
  const std::uint64_t base = tagged_seed(cfg.seed, 0xCE27ULL);
  if (pot.regularity.has_smoothness()) {
    out.push_back(
        certify_mixture_smooth(pot, cfg.certify_trials, cfg.certify_radius, base));
    out.push_back(certify_gradient_growth(pot, cfg.certify_trials, cfg.certify_radius,
                                          base + 1));
    out.push_back(certify_descent_bound(pot, cfg.certify_trials, cfg.certify_radius,
                                        base + 2));
  }
  if (pot.regularity.has_dissipativity())
    out.push_back(
        certify_dissipative(pot, cfg.certify_trials, cfg.certify_radius, base + 3));
  if (pot.regularity.has_hessian_smoothness())
    out.push_back(
        certify_hessian_smooth(pot, cfg.certify_trials, cfg.certify_radius, base + 4));
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.chain.validate();
  ExperimentResult res;
  res.run_id = cfg.run_id();

  std::optional<ReferenceDensity> ref;
  if (!cfg.metric_requests.empty()) ref = make_reference(cfg);

  MomentTrackRequest track;
  const MomentTrackRequest* track_ptr = nullptr;
  if (cfg.track_moment_s) {
    track.s_values = {*cfg.track_moment_s};
    track.stride =
        cfg.track_stride > 0 ? cfg.track_stride : cfg.chain.effective_thin();
    track_ptr = &track;
  }

  const EnsembleResult ens =
      run_ensemble(cfg.chain, cfg.chains, cfg.workers, track_ptr);
  res.stats = collect_stats(ens, cfg.chain.potential.dim);

  if (ref) res.metrics = compute_metrics(cfg, ens.finals, *ref);
  if (track_ptr && !ens.tracks.empty())
    res.moment_track = analyze_moment_track(ens.tracks.front(), cfg.chain.eta);

  res.verdicts_ok = res.metrics.all_verdicts_pass();

  ordered_json j;
  j["schema"] = 1;
  j["run_id"] = res.run_id;
  j["seed"] = cfg.seed;
  j["config"] = config_echo(cfg.raw);
  j["potential"] = {{"name", cfg.chain.potential.name},
                    {"dim", cfg.chain.potential.dim}};
  j["ensemble"] = {{"chains", cfg.chains},
                   {"diverged", res.stats.diverged_chains},
                   {"tail_count", res.stats.tail_count},
                   {"pooled_second_moment", res.stats.pooled_second_moment},
                   {"pooled_mean", res.stats.pooled_mean},
                   {"max_radius", res.stats.max_radius}};
  if (ref) j["metrics"] = nlohmann::ordered_json::parse(res.metrics.to_json_string());
  if (res.moment_track) {
    j["moment_track"] = {{"s", *cfg.track_moment_s},
                         {"slope", res.moment_track->slope},
                         {"slope_se", res.moment_track->slope_se},
                         {"at_most_linear", res.moment_track->at_most_linear}};
  }
  j["verdicts_ok"] = res.verdicts_ok;
  res.report_json = j.dump(2) + "\n";

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.out_dir) / cfg.name;
  fs::create_directories(dir);
  res.json_path = (dir / (res.run_id + ".json")).string();
  res.csv_path = (dir / (res.run_id + ".csv")).string();
  write_text_file(res.json_path, res.report_json);
  write_text_file(res.csv_path, finals_csv(ens.finals));
  return res;
}

ExperimentResult run_certify(const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.run_id = cfg.run_id();
  res.certificates = run_certifiers(cfg);
  res.verdicts_ok = true;
  for (const auto& c : res.certificates) res.verdicts_ok &= c.passed;

  ordered_json j;
  j["schema"] = 1;
  j["run_id"] = res.run_id;
  j["seed"] = cfg.seed;
  j["config"] = config_echo(cfg.raw);
  j["potential"] = {{"name", cfg.chain.potential.name},
                    {"dim", cfg.chain.potential.dim}};
  ordered_json certs = ordered_json::array();
  for (const auto& c : res.certificates) certs.push_back(certificate_json(c));
  j["certificates"] = certs;
  j["verdicts_ok"] = res.verdicts_ok;
  res.report_json = j.dump(2) + "\n";

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.out_dir) / cfg.name;
  fs::create_directories(dir);
  res.json_path = (dir / (res.run_id + "-certify.json")).string();
  write_text_file(res.json_path, res.report_json);
  return res;
}

void fit_loglog_slope(SweepResult& result) {
  std::vector<double> x, y, w;
  for (auto& row : result.rows) {
    row.gated_in = row.kl.value > 3.0 * row.kl.se && row.kl.value > 0.0 &&
                   row.axis_value > 0.0;
    if (!row.gated_in) continue;
    x.push_back(std::log(row.axis_value));
    y.push_back(std::log(row.kl.value));
    const double rel = row.kl.se / row.kl.value;
    w.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  if (x.size() < 3) {
    result.identifiable = false;
    result.slope = 0.0;
    result.slope_se = 0.0;
    return;
  }
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double mx = swx / sw, my = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  result.slope = sxy / sxx;
  result.slope_se = std::sqrt(1.0 / sxx);
  result.identifiable = true;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_axis.empty())
    throw ConfigError("sweep mode needs a sweep axis", "sweep");
  if (!requested(cfg, "kl"))
    throw ConfigError("sweeps fit the KL slope; request the kl metric",
                      "metrics.requests");

  SweepResult result;
  result.run_id = cfg.run_id();
  result.axis = cfg.sweep_axis;

  for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
    const double v = cfg.sweep_values[i];
    ExperimentConfig point = cfg;
    point.sweep_axis.clear();
    point.sweep_values.clear();
    point.track_moment_s.reset();
    point.seed = tagged_seed(cfg.seed, 0x9077ULL + i);
    point.chain.seed = point.seed;

    if (cfg.sweep_axis == "eta") {
      point.chain.eta = v;
    } else if (cfg.sweep_axis == "mu") {
      point.chain.gradient.smoothing.mu = v;
      point.chain.gradient.mu_from_eta = false;
    } else if (cfg.sweep_axis == "d") {
      Config mod = cfg.raw;
      mod.set("potential.dim", std::to_string(static_cast<int>(v)));
      point.chain.potential = potential_from_config(mod);
    } else if (cfg.sweep_axis == "epsilon") {
      PlannerInput pin;
      pin.epsilon = v;
      pin.horizon_T = cfg.planner_T;
      pin.discretization_D =
          cfg.planner_D > 0.0
              ? cfg.planner_D
              : default_discretization_constant(cfg.chain.potential.dim,
                                                cfg.chain.potential.regularity);
      pin.alpha = cfg.planner_alpha > 0.0
                      ? cfg.planner_alpha
                      : cfg.chain.potential.regularity.min_smooth_exponent();
      point.chain.eta = plan_step_size(pin);
    } else {
      throw ConfigError("unknown sweep axis '" + cfg.sweep_axis + "'", "sweep");
    }

    const ReferenceDensity ref = make_reference(point);
    const EnsembleResult ens = run_ensemble(point.chain, point.chains, point.workers);
    const MetricReport mr = compute_metrics(point, ens.finals, ref);

    SweepRow row;
    row.axis_value = v;
    row.eta_used = point.chain.eta;
    row.kl = mr.kl.value_or(Estimate{});
    if (mr.tv) {
      row.tv = *mr.tv;
      row.has_tv = true;
      row.pinsker_pass = mr.pinsker.passed();
    }
    result.rows.push_back(row);
    result.verdicts_ok &= row.pinsker_pass;
  }

  fit_loglog_slope(result);

  ordered_json j;
  j["schema"] = 1;
  j["run_id"] = result.run_id;
  j["seed"] = cfg.seed;
  j["config"] = config_echo(cfg.raw);
  j["axis"] = result.axis;
  ordered_json rows = ordered_json::array();
  for (const auto& row : result.rows) {
    ordered_json r;
    r["value"] = row.axis_value;
    r["eta"] = row.eta_used;
    r["kl"] = row.kl.value;
    r["kl_se"] = row.kl.se;
    if (row.has_tv) {
      r["tv"] = row.tv.value;
      r["tv_se"] = row.tv.se;
      r["pinsker_pass"] = row.pinsker_pass;
    }
    r["gated_in"] = row.gated_in;
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["slope"] = {{"identifiable", result.identifiable},
                {"value", result.slope},
                {"se", result.slope_se}};
  j["verdicts_ok"] = result.verdicts_ok;
  result.report_json = j.dump(2) + "\n";

  std::string csv = "axis,value,eta,kl,kl_se,tv,tv_se,pinsker_pass,gated_in\n";
  for (const auto& row : result.rows) {
    csv += result.axis + "," + format_double(row.axis_value) + "," +
           format_double(row.eta_used) + "," + format_double(row.kl.value) + "," +
           format_double(row.kl.se) + ",";
    if (row.has_tv)
      csv += format_double(row.tv.value) + "," + format_double(row.tv.se) + "," +
             (row.pinsker_pass ? "true" : "false");
    else
      csv += ",,";
    csv += std::string(",") + (row.gated_in ? "true" : "false") + "\n";
  }

  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.out_dir) / cfg.name;
  fs::create_directories(dir);
  result.json_path = (dir / (result.run_id + "-sweep.json")).string();
  result.csv_path = (dir / (result.run_id + "-sweep.csv")).string();
  write_text_file(result.json_path, result.report_json);
  write_text_file(result.csv_path, csv);
  return result;
}

}  // namespace ula
