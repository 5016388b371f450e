#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>

#include "roughmkv/config.hpp"
#include "roughmkv/errors.hpp"
#include "roughmkv/runner.hpp"

namespace {

// exit contract: 0 all checks pass, 2 checks failed, 3 runtime/parse error
constexpr int kOk = 0;
constexpr int kChecksFailed = 2;
constexpr int kError = 3;

void print_checks(const std::vector<roughmkv::CheckResult>& checks) {
  for (const auto& c : checks)
    std::printf("[%s] %-32s value=%-12.6g band: %s\n", c.pass ? "pass" : "FAIL",
                c.name.c_str(), c.value, c.band.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for rough-path regularised "
               "distribution-dependent SDEs"};
  app.require_subcommand(1);

  std::string config_arg, out_dir = "out", manifest_path = "out/manifest.json";
  std::string axis = "H", values_csv;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads = 0;
  double band_scale = 1.0;

  auto* run = app.add_subcommand("run", "run an experiment config end to end");
  run->add_option("--config", config_arg, "config file or builtin scenario name")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_override, "override the solver seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--threads", threads, "cap OpenMP worker count");

  auto* replay = app.add_subcommand("replay", "verify a finished run directory");
  replay->add_option("--manifest", manifest_path, "path to manifest.json")
      ->required();
  replay->add_option("--band-scale", band_scale,
                     "scale diagnostic tolerance bands");
  replay->add_option("--threads", threads, "cap OpenMP worker count");

  auto* sweep = app.add_subcommand("sweep", "run a parameter axis sweep");
  sweep->add_option("--config", config_arg, "config file or builtin scenario name")
      ->required();
  sweep->add_option("--axis", axis, "one of H, eps, N, dt, kernel_gamma")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")
      ->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seed", seed_override, "override the solver seed")
      ->each([&](const std::string&) { seed_given = true; });
  sweep->add_option("--threads", threads, "cap OpenMP worker count");

  auto* presets = app.add_subcommand("presets", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) roughmkv::set_max_threads(threads);

    if (presets->parsed()) {
      for (const auto& name : roughmkv::scenario_names()) {
        const auto cfg = roughmkv::scenario_config(name);
        std::printf("%-20s H=%-5g M=%-6zu N=%-6zu %s\n", name.c_str(),
                    cfg.driver.hurst, cfg.driver.steps, cfg.solver.particles,
                    cfg.gate.tag().c_str());
      }
      return kOk;
    }

    if (run->parsed()) {
      auto cfg = roughmkv::load_config(config_arg);
      if (seed_given) cfg.solver.seed = seed_override;
      if (out_dir == "out" && !cfg.output_dir.empty()) out_dir = cfg.output_dir;
      const auto manifest = roughmkv::run_experiment(cfg, out_dir);
      print_checks(manifest.checks);
      std::printf("%s: %s (artifacts in %s)\n", cfg.scenario.c_str(),
                  manifest.all_pass ? "all checks passed" : "CHECKS FAILED",
                  out_dir.c_str());
      return manifest.all_pass ? kOk : kChecksFailed;
    }

    if (replay->parsed()) {
      roughmkv::ReplayOptions options;
      options.band_scale = band_scale;
      const auto report = roughmkv::replay_run(manifest_path, options);
      print_checks(report.checks);
      std::printf("checksums verified; regenerated reports %s\n",
                  report.reports_match ? "match" : "DIFFER");
      return (report.all_pass && report.reports_match) ? kOk : kChecksFailed;
    }

    if (sweep->parsed()) {
      auto cfg = roughmkv::load_config(config_arg);
      if (seed_given) cfg.solver.seed = seed_override;
      std::vector<double> values;
      std::stringstream ss(values_csv);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
      }
      const auto file = roughmkv::sweep_experiments(cfg, axis, values, out_dir);
      std::printf("sweep table written to %s\n", file.string().c_str());
      return kOk;
    }
  } catch (const roughmkv::ConfigError& e) {
    std::cerr << "config error";
    if (e.line) std::cerr << " (line " << e.line << ")";
    std::cerr << ": " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
