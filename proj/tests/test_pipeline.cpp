#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slowvar/errors.hpp"
#include "slowvar/io.hpp"
#include "slowvar/pipeline.hpp"

using namespace slowvar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slowvar_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("configuration values and files") {
  PipelineConfig cfg;
  apply_config_value(cfg, "max-iters", "50");
  apply_config_value(cfg, "lc", "100, 500");
  apply_config_value(cfg, "k", "314");
  apply_config_value(cfg, "dt", "auto");
  CHECK(cfg.max_iters == 50);
  CHECK(cfg.lc_list == std::vector<std::uint64_t>{100, 500});
  CHECK(*cfg.k == 314u);
  CHECK_FALSE(cfg.dt.has_value());
  CHECK_THROWS_AS(apply_config_value(cfg, "nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "epsilon", "abc"), ConfigError);

  cfg.tol = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  const auto dir = scratch("cfg");
  std::ofstream(dir / "run.cfg") << "# comment\nsystem = cs2\nseed = 11\nrho = 3.5\n";
  PipelineConfig f;
  apply_config_file(f, dir / "run.cfg");
  CHECK(f.system == "cs2");
  CHECK(f.seed == 11u);
  CHECK(f.rho == 3.5);
}

TEST_CASE("config hash ignores the output location and the worker count") {
  PipelineConfig a, b;
  b.out_dir = "elsewhere";
  b.workers = 3;
  CHECK(a.hash() == b.hash());
  b.seed = 8;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("stages without their inputs name the missing stage") {
  PipelineConfig cfg;
  cfg.out_dir = scratch("missing");
  std::ostringstream log;
  try {
    run_stage("bin", cfg, log);
    FAIL("expected a missing prerequisite");
  } catch (const MissingPrerequisite& e) {
    CHECK(std::string(e.what()).find("spectrum") != std::string::npos);
  }
  CHECK_THROWS_AS(run_stage("nosuchstage", cfg, log), ConfigError);
}

TEST_CASE("end to end on a small network file") {
  const auto dir = scratch("e2e");
  std::ofstream(dir / "small.net") << R"(species = X1, X2
slow_weights = 0.5, 0.5
domain_lo = 30, 30
domain_hi = 62, 62
reaction = 0 -> X1 @ 45
reaction = X1 -> X2 @ 200
reaction = X2 -> X1 @ 200
reaction = X2 -> 0 @ 1
)";
  PipelineConfig cfg;
  cfg.system = (dir / "small.net").string();
  cfg.out_dir = dir / "out";
  cfg.lc_list = {50};
  cfg.sim_t_end = 0.05;
  cfg.spectrum_count = 5;
  std::ostringstream log;
  run_stage("all", cfg, log);
  for (const char* f : {"trajectory.csv", "covariance.csv", "graph.bin", "eigenvectors.csv", "spectrum.csv",
                        "partition.csv", "conditionals.csv", "pi.csv", "report.json", "manifest.json",
                        "cma_sweep.csv", "jaccard.csv"})
    CHECK(fs::exists(cfg.out_dir / f));
  for (const auto& e : fs::directory_iterator(cfg.out_dir))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);

  std::ifstream rin(cfg.out_dir / "report.json");
  const auto report = nlohmann::json::parse(rin);
  REQUIRE(report.size() == 2u);
  CHECK(report[0]["method"] == "ADM-CLE");
  CHECK(report[0]["jaccard_mean"].get<double>() == 1.0);
  CHECK(report[1]["method"] == "CMA");

  std::ifstream min(cfg.out_dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(min);
  CHECK(manifest["config_hash"] == cfg.hash());
  CHECK(manifest["stages"].contains("cma"));
  CHECK(manifest["stages"]["bin"]["inputs"].contains("eigenvectors.csv"));

  // Rerunning one stage with an override leaves the earlier artifacts alone.
  const auto before = fnv1a_file(cfg.out_dir / "graph.bin");
  cfg.k = 5;
  run_stage("bin", cfg, log);
  CHECK(fnv1a_file(cfg.out_dir / "graph.bin") == before);
  std::ifstream bin(cfg.out_dir / "binning.json");
  CHECK(nlohmann::json::parse(bin)["k"] == 5);
}
