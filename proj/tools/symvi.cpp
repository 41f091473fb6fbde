#include "symvi/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  symvi::ExperimentConfig cfg;
  if (const char* env = std::getenv("SYMVI_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "invalid configuration: SYMVI_SEED is not an unsigned integer\n";
      return 2;
    }
  }

  CLI::App app{"Symmetry-induced statistic recovery experiments"};
  app.add_option("experiment", cfg.experiment,
                 "even-recovery | elliptical-recovery | sphere-threshold | sphere-contours | verify-all")
      ->required();
  app.add_option("--seed", cfg.seed, "Random seed (default: $SYMVI_SEED or 0)");
  std::string out = ".";
  app.add_option("--out", out, "Output directory");
  app.add_option("--d", cfg.d, "Sphere dimension d (S^{d-1} in R^d)");
  app.add_option("--lambda", cfg.lambda, "Axial profile linear coefficient");
  double eta = 0.0;
  auto* eta_opt = app.add_option("--eta", eta, "Axial profile quadratic coefficient");
  app.add_option("--kappa0", cfg.kappa0, "Fixed vMF concentration");
  app.add_option("--divergence", cfg.divergence, "kl | reverse-kl | chi2 | tv | hellinger");
  app.add_option("--resolution", cfg.resolution, "Output grid nodes per axis (>= 32)");
  app.add_option("--threads", cfg.threads, "Worker threads for multi-start fits");
  app.add_option("--starts", cfg.n_starts, "Optimizer starts per fit");
  app.add_option("--target", cfg.target, "even-recovery target: mixture | gaussian");
  double quad_tol = 0.0;
  auto* quad_opt = app.add_option("--quad-tol", quad_tol, "verify-all: override quadrature check tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : 2;
  }
  cfg.output_dir = out;
  if (*eta_opt) cfg.eta = eta;
  if (*quad_opt) cfg.quadrature_tolerance = quad_tol;
  return symvi::run_experiment(cfg);
}
