// Command-line driver: runs experiments, sweeps, and certifier suites from
// flat key=value config files. The exit status is nonzero when a requested
// inequality verdict fails, so CI can gate on it directly.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ulalab/errors.hpp"
#include "ulalab/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string seed;
  std::string workers;
};

ula::ExperimentConfig load(const CommonArgs& args) {
  ula::Config cfg = ula::Config::parse_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ula::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.seed.empty()) cfg.set("seed", args.seed);
  if (!args.out_dir.empty()) cfg.set("output.dir", args.out_dir);
  if (!args.workers.empty()) cfg.set("workers", args.workers);
  return ula::ExperimentConfig::from_config(cfg);
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("config", args.config_path, "config file")->required();
  sub->add_option("--set", args.overrides, "override a config key (key=value)");
  sub->add_option("--seed", args.seed, "override the master seed");
  sub->add_option("--out-dir", args.out_dir, "override the output directory");
  sub->add_option("--workers", args.workers, "worker thread count");
}

const char* verdict_word(bool ok) { return ok ? "pass" : "FAIL"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ULA sampling experiments: run, sweep, certify"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, certify_args;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, run_args);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd, sweep_args);
  CLI::App* certify_cmd =
      app.add_subcommand("certify", "run the regularity certifiers only");
  add_common(certify_cmd, certify_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto res = ula::run_experiment(load(run_args));
      std::printf("run %s\n", res.run_id.c_str());
      if (res.metrics.kl)
        std::printf("  kl = %.6g +- %.2g (%s)\n", res.metrics.kl->value,
                    res.metrics.kl->se, res.metrics.kl_estimator.c_str());
      if (res.metrics.tv)
        std::printf("  tv = %.6g +- %.2g\n", res.metrics.tv->value,
                    res.metrics.tv->se);
      if (res.metrics.w_beta)
        std::printf("  w_%.3g = %.6g +- %.2g\n", res.metrics.beta,
                    res.metrics.w_beta->value, res.metrics.w_beta->se);
      std::printf("  verdicts: %s\n", verdict_word(res.verdicts_ok));
      std::printf("  report: %s\n", res.json_path.c_str());
      return res.verdicts_ok ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      const auto res = ula::run_sweep(load(sweep_args));
      std::printf("sweep %s over %s (%zu points)\n", res.run_id.c_str(),
                  res.axis.c_str(), res.rows.size());
      if (res.identifiable)
        std::printf("  log-log slope = %.4g +- %.2g\n", res.slope, res.slope_se);
      else
        std::printf("  slope: not identifiable (fewer than 3 rows above noise)\n");
      std::printf("  verdicts: %s\n", verdict_word(res.verdicts_ok));
      std::printf("  report: %s\n", res.json_path.c_str());
      return res.verdicts_ok ? 0 : 1;
    }
    const auto res = ula::run_certify(load(certify_args));
    std::printf("certify %s\n", res.run_id.c_str());
    for (const auto& c : res.certificates)
      std::printf("  %-16s %s (worst slack %.4g over %zu trials)\n", c.check.c_str(),
                  verdict_word(c.passed), c.worst_slack, c.trials);
    std::printf("  report: %s\n", res.json_path.c_str());
    return res.verdicts_ok ? 0 : 1;
  } catch (const ula::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
