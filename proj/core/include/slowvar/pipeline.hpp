#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slowvar/network.hpp"

namespace slowvar {

enum class ConditionalMethod { projected, fast };

struct PipelineConfig {
  std::string system = "cs1";  // cs1, cs2 or a network file path
  VolumeScaling convention = VolumeScaling::stated;
  double epsilon = 0.1;
  double rho = 4.0;               // ellipse radius in kernel widths
  std::optional<double> dt;       // calibrated when empty
  std::optional<std::size_t> k;   // largest-ratio rule when empty
  std::optional<int> band;        // ceil(rho * epsilon * sqrt(median lambda_min)) when empty
  double tol = 1e-10;
  int max_iters = 100000;
  int eigen_count = 1;
  int spectrum_count = 20;
  std::uint64_t seed = 7;
  std::vector<std::uint64_t> lc_list{100, 500, 2000, 5000, 10000, 20000};
  int cma_seeds = 1;
  ConditionalMethod conditional = ConditionalMethod::projected;
  double sim_t_end = 5.0;
  std::size_t sim_points = 20000;  // trajectory resampled on this many intervals; 0 keeps every event
  std::vector<int> sim_x0;  // domain centre when empty
  std::filesystem::path out_dir = "slowvar_out";
  int workers = 0;  // 0: all hardware threads

  // Throws ConfigError on invalid values.
  void validate() const;
  // Canonical text of every result-affecting field (excludes out_dir, workers).
  std::string canonical() const;
  std::string hash() const;
};

// Applies `key = value` lines (same names as the command-line flags).
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);
void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

const std::vector<std::string>& stage_names();

// Runs one stage (or `all`) and writes its artifacts under cfg.out_dir.
// Progress goes to `log`.
void run_stage(const std::string& stage, const PipelineConfig& cfg, std::ostream& log);

Model load_model(const PipelineConfig& cfg);

}  // namespace slowvar
