#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roughmkv/config.hpp"
#include "roughmkv/parallel.hpp"

namespace roughmkv {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string band;
};

struct ArtifactEntry {
  std::string file;      // relative to the run directory
  std::string checksum;  // fnv1a64 hex
  std::string kind;      // "input" or "report"
};

struct RunManifest {
  std::string config_hash;
  std::string scenario;
  std::string hypothesis_tag;
  std::vector<ArtifactEntry> artifacts;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> timings;  // excluded from hashing
  bool all_pass = false;
};

// Full pipeline: driver -> local time -> germ scans -> epsilon sweep ->
// diagnostics; every numerical artifact lands in `outdir` and is listed in
// the returned manifest (also written as manifest.json).
RunManifest run_experiment(const ExperimentConfig& cfg,
                           const std::filesystem::path& outdir,
                           Parallelism par = Parallelism::kOpenMP);

void write_manifest(const std::filesystem::path& file, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& file);

struct ReplayOptions {
  double band_scale = 1.0;  // scales tolerance bands; inputs stay verified
};

struct ReplayReport {
  std::vector<CheckResult> checks;
  bool all_pass = false;
  bool reports_match = true;  // regenerated report bytes match the manifest
};

// Verifies every artifact checksum, reloads the persisted ensembles and
// re-runs the diagnostics. Missing or altered files raise
// ReproducibilityError naming the file.
ReplayReport replay_run(const std::filesystem::path& manifest_file,
                        const ReplayOptions& options = {});

// One run per axis value (axis in {H, eps, N, dt, kernel_gamma}), aggregated
// into sweep.csv with the headline statistics per row.
std::filesystem::path sweep_experiments(const ExperimentConfig& base,
                                        const std::string& axis,
                                        std::span<const double> values,
                                        const std::filesystem::path& outdir,
                                        Parallelism par = Parallelism::kOpenMP);

}  // namespace roughmkv
