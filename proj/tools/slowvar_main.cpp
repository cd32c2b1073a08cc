#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slowvar/errors.hpp"
#include "slowvar/pipeline.hpp"

namespace {

std::string join_stages() {
  std::string s;
  for (const auto& n : slowvar::stage_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow variable discovery for stochastic reaction networks"};
  app.set_version_flag("--version", std::string(SLOWVAR_VERSION));

  std::string stage;
  app.add_option("stage", stage, "Stage to run: " + join_stages())->required();

  // Flag values are collected as text and applied after the config file,
  // so that flags always win.
  std::map<std::string, std::string> flags;
  std::string config_path;
  app.add_option("--config", config_path, "Flat key = value configuration file");

  const std::pair<const char*, const char*> options[] = {
      {"system", "cs1, cs2 or a network definition file"},
      {"convention", "Volume scaling convention: stated or table"},
      {"seed", "Master seed"},
      {"epsilon", "Kernel width"},
      {"rho", "Neighborhood radius in kernel widths"},
      {"dt", "Covariance time step, or auto"},
      {"k", "Number of bins, or auto"},
      {"band", "Boundary truncation band, or auto"},
      {"tol", "Eigensolver tolerance"},
      {"max-iters", "Eigensolver iteration cap"},
      {"eigen-count", "Number of nontrivial eigenvectors to compute"},
      {"spectrum-count", "Number of combinatorial eigenvalues to export"},
      {"lc", "Comma separated CMA attempt counts"},
      {"cma-seeds", "Independent CMA replicates per L_c"},
      {"conditional", "Conditional estimator: projected or fast"},
      {"sim-t-end", "Trajectory length for the simulate stage"},
      {"sim-points", "Resampled trajectory length (0 writes every event)"},
      {"sim-x0", "Comma separated start state for the simulate stage"},
      {"out", "Output directory"},
      {"workers", "Worker threads (0 uses all cores)"},
  };
  for (const auto& [name, help] : options) {
    app.add_option_function<std::string>(
        std::string("--") + name, [&flags, key = std::string(name)](const std::string& v) { flags[key] = v; }, help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    slowvar::PipelineConfig cfg;
    if (!config_path.empty()) slowvar::apply_config_file(cfg, config_path);
    if (const char* env = std::getenv("SLOWVAR_OUT_DIR"); env && *env) cfg.out_dir = env;
    for (const auto& [k, v] : flags) slowvar::apply_config_value(cfg, k, v);
    cfg.validate();
    slowvar::run_stage(stage, cfg, std::cerr);
    return 0;
  } catch (const slowvar::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const slowvar::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const slowvar::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const slowvar::MissingPrerequisite& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
