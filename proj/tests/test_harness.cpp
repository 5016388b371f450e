#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "roughmkv/config.hpp"
#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/runner.hpp"

using namespace roughmkv;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.scenario = "tiny";
  cfg.driver = {0.5, 1, 128, 1.0, true, 0.05};
  cfg.local_time = {true, 64, 1.0, 0.0, 0.8, 0.5, 0.15};
  cfg.drift = {"constant", 0.2, 1.0, 0.0, 0.3, 0.01, 1.0, 0.0};
  cfg.diffusion = {"constant", 0.4, 1.0, 0.0, 0.3, 0.01, 1.0, 0.0};
  cfg.functional = "mean";
  cfg.solver = {64, {0.3, 0.15}, 5, 0.0, 2.0};
  cfg.sewing = {true, 8};
  cfg.diagnostics = {1.0, 2.0, true, true, true, true, false, {32, 128}, 2, 0.1, 0.35};
  cfg.gate = hypothesis_gate(cfg.driver.hurst, 1.0, 1.0, 1);
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config round-trips through emit and parse") {
  for (const auto& name : scenario_names()) {
    const ExperimentConfig cfg = scenario_config(name);
    const std::string text = emit_config(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(emit_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
  }
}

TEST_CASE("unknown fields are rejected with their line") {
  const std::string text = emit_config(scenario_config("smoke_bm"));
  const std::string bad = text + "\n[driver]\nhurstiness = 0.5\n";
  try {
    parse_config(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hurstiness") != std::string::npos);
    CHECK(e.line > 0);
  }
}

TEST_CASE("unknown sections are rejected") {
  const std::string text =
      emit_config(scenario_config("smoke_bm")) + "\n[plotting]\nstyle = fancy\n";
  CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("a config without a seed is rejected naming the field") {
  std::string text = emit_config(scenario_config("smoke_bm"));
  const auto pos = text.find("seed = 42\n");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, 10);
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
}

TEST_CASE("builtin scenarios embed the hypothesis gate at load") {
  const auto smoke = scenario_config("smoke_bm");
  CHECK(!smoke.gate.pass);  // BM driver sits outside the hypothesis
  CHECK(smoke.gate.tag() == "outside-hypothesis");
  const auto flock = scenario_config("flocking_singular");
  CHECK(flock.gate.pass);
  CHECK(flock.gate.tag() == "within-hypothesis");
}

TEST_CASE("config hash ignores the output directory") {
  auto cfg = scenario_config("smoke_bm");
  const auto h0 = config_hash(cfg);
  cfg.output_dir = "somewhere/else";
  CHECK(config_hash(cfg) == h0);
  CHECK(emit_config(cfg).find("somewhere/else") != std::string::npos);
}

TEST_CASE("run produces a manifest whose checksums match the files") {
  const auto dir = fresh_dir("roughmkv_run_a");
  const RunManifest manifest = run_experiment(tiny_config(), dir);
  CHECK(manifest.all_pass);
  CHECK(!manifest.artifacts.empty());
  for (const auto& a : manifest.artifacts) {
    CAPTURE(a.file);
    REQUIRE(fs::exists(dir / a.file));
    CHECK(io::hex64(io::file_checksum(dir / a.file)) == a.checksum);
  }
  CHECK(fs::exists(dir / "manifest.json"));
  const RunManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.config_hash == manifest.config_hash);
  CHECK(back.artifacts.size() == manifest.artifacts.size());
  fs::remove_all(dir);
}

TEST_CASE("identical runs yield byte-identical numerical artifacts") {
  const auto dir_a = fresh_dir("roughmkv_run_b1");
  const auto dir_b = fresh_dir("roughmkv_run_b2");
  const auto cfg = tiny_config();
  const RunManifest ma = run_experiment(cfg, dir_a);
  const RunManifest mb = run_experiment(cfg, dir_b);
  REQUIRE(ma.artifacts.size() == mb.artifacts.size());
  for (std::size_t i = 0; i < ma.artifacts.size(); ++i) {
    CAPTURE(ma.artifacts[i].file);
    CHECK(ma.artifacts[i].file == mb.artifacts[i].file);
    CHECK(ma.artifacts[i].checksum == mb.artifacts[i].checksum);
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("immediate replay verifies and reproduces every report") {
  const auto dir = fresh_dir("roughmkv_replay");
  run_experiment(tiny_config(), dir);
  const ReplayReport report = replay_run(dir / "manifest.json");
  CHECK(report.all_pass);
  CHECK(report.reports_match);
  fs::remove_all(dir);
}

TEST_CASE("replay with a deleted artifact names the missing file") {
  const auto dir = fresh_dir("roughmkv_replay_missing");
  run_experiment(tiny_config(), dir);
  fs::remove(dir / "holder.csv");
  try {
    replay_run(dir / "manifest.json");
    FAIL("expected ReproducibilityError");
  } catch (const ReproducibilityError& e) {
    CHECK(std::string(e.what()).find("holder.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("replay detects a corrupted artifact") {
  const auto dir = fresh_dir("roughmkv_replay_corrupt");
  run_experiment(tiny_config(), dir);
  {
    std::ofstream f(dir / "driver.csv", std::ios::app);
    f << "tampered\n";
  }
  try {
    replay_run(dir / "manifest.json");
    FAIL("expected ReproducibilityError");
  } catch (const ReproducibilityError& e) {
    CHECK(std::string(e.what()).find("driver.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("replay with scaled bands re-evaluates pass flags") {
  const auto dir = fresh_dir("roughmkv_replay_bands");
  const RunManifest manifest = run_experiment(tiny_config(), dir);
  ReplayOptions opts;
  opts.band_scale = 1e-6;  // collapse every tolerance band
  const ReplayReport tight = replay_run(dir / "manifest.json", opts);
  CHECK(tight.checks.size() == manifest.checks.size());
  CHECK(!tight.all_pass);  // zeta recovery cannot hit a 1e-6-wide band
  fs::remove_all(dir);
}

TEST_CASE("sweep over an empty axis writes a header-only table") {
  const auto dir = fresh_dir("roughmkv_sweep_empty");
  const auto file = sweep_experiments(tiny_config(), "eps", {}, dir);
  const auto rows = io::read_csv(file);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][0] == "axis");
  fs::remove_all(dir);
}

TEST_CASE("sweeping H across the tightness boundary flips the tag") {
  auto cfg = tiny_config();
  cfg.driver.check_nondeterminism = false;  // keep the sweep fast
  cfg.diagnostics.martingale = false;
  const auto dir = fresh_dir("roughmkv_sweep_h");
  const std::vector<double> values{0.26, 0.30};
  const auto file = sweep_experiments(cfg, "H", values, dir);
  const auto rows = io::read_csv(file);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][2] == "within-hypothesis");   // (2+3/2) 0.26 = 0.91 < 1
  CHECK(rows[2][2] == "outside-hypothesis");  // (2+3/2) 0.30 = 1.05 >= 1
  fs::remove_all(dir);
}

TEST_CASE("epsilon axis produces one row per value with a c2 column") {
  auto cfg = tiny_config();
  cfg.driver.check_nondeterminism = false;
  cfg.diagnostics.martingale = false;
  cfg.sewing.enabled = false;
  const auto dir = fresh_dir("roughmkv_sweep_eps");
  const std::vector<double> values{0.4, 0.2, 0.1, 0.05};
  const auto file = sweep_experiments(cfg, "eps", values, dir);
  const auto rows = io::read_csv(file);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][3] == "c2");
  for (std::size_t r = 1; r < rows.size(); ++r)
    CHECK(std::stod(rows[r][3]) > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("load_config resolves builtin names and rejects others") {
  CHECK(load_config("smoke_bm").scenario == "smoke_bm");
  CHECK_THROWS_AS(load_config("no_such_scenario"), ConfigError);
}
