#pragma once

#include "symvi/linalg.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace symvi {

struct ExperimentConfig {
  std::string experiment;  // even-recovery | elliptical-recovery | sphere-threshold | sphere-contours | verify-all
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  int resolution = 101;
  std::optional<Vector> m;
  std::optional<Matrix> M;
  double lambda = 1.0;
  std::optional<double> eta;
  double kappa0 = 2.5;
  int d = 3;
  std::string divergence = "reverse-kl";
  std::string target = "mixture";  // even-recovery only: mixture | gaussian
  int threads = 1;
  int n_starts = 4;
  std::optional<double> quadrature_tolerance;  // verify-all only

  void validate() const;
};

/// Each runner writes its artifacts into cfg.output_dir and returns the
/// summary document it wrote.
nlohmann::json run_even_recovery(const ExperimentConfig& cfg);
nlohmann::json run_elliptical_recovery(const ExperimentConfig& cfg);
nlohmann::json run_sphere_threshold(const ExperimentConfig& cfg);
nlohmann::json run_sphere_contours(const ExperimentConfig& cfg);
/// Writes verification.json; "all_pass" in the returned report.
nlohmann::json run_verify_all(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment and maps the outcome to an exit code:
/// 0 success, 2 invalid config, 3 optimization failure, 4 verification failure.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace symvi
