#include <doctest.h>

#include "symvi/experiments.hpp"
#include "symvi/errors.hpp"
#include "symvi/sphere.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

using namespace symvi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("symvi_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const fs::path& p) {
  Csv csv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (csv.header.empty()) {
      csv.header = fields;
    } else {
      csv.rows.push_back(fields);
    }
  }
  return csv;
}

Vector vec(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

ExperimentConfig config(const std::string& experiment, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.output_dir = out;
  cfg.seed = 5;
  cfg.resolution = 40;
  return cfg;
}

}  // namespace

TEST_CASE("config validation maps to exit code 2") {
  const fs::path out = scratch("invalid");
  ExperimentConfig cfg = config("nonsense", out);
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(run_experiment(cfg) == 2);

  cfg = config("even-recovery", out);
  cfg.resolution = 10;
  CHECK(run_experiment(cfg) == 2);
  cfg = config("even-recovery", out);
  cfg.divergence = "renyi";
  CHECK(run_experiment(cfg) == 2);
  cfg = config("elliptical-recovery", out);
  cfg.M = Matrix::Identity(2, 2);
  (*cfg.M)(1, 1) = -1.0;
  CHECK(run_experiment(cfg) == 2);
  cfg = config("sphere-threshold", out);
  cfg.d = 2;
  CHECK(run_experiment(cfg) == 2);
  cfg = config("sphere-contours", out);
  cfg.d = 4;
  CHECK(run_experiment(cfg) == 2);
  cfg = config("sphere-threshold", out);
  cfg.eta = -1.0;
  CHECK(run_experiment(cfg) == 2);
  cfg = config("sphere-threshold", out);
  cfg.lambda = 0.0;
  CHECK(run_experiment(cfg) == 2);
  CHECK_FALSE(fs::exists(out / "summary.json"));
}

TEST_CASE("even recovery writes consistent artifacts") {
  const fs::path out = scratch("even");
  const nlohmann::json s = run_even_recovery(config("even-recovery", out));
  CHECK(s["mean_error"].get<double>() <= 1e-3);
  CHECK(s["mu_P_error"].get<double>() <= 1e-6);
  CHECK(s == read_json(out / "summary.json"));
  CHECK((vec(s["nu_star"]) - vec(s["m"])).norm() == doctest::Approx(s["mean_error"].get<double>()));

  for (const char* name : {"target_density.csv", "fit_density.csv"}) {
    const Csv csv = read_csv(out / name);
    CHECK(csv.header == std::vector<std::string>{"x", "y", "log_density"});
    CHECK(csv.rows.size() == 40u * 40u);
    std::set<std::string> xs, ys;
    for (const auto& r : csv.rows) {
      REQUIRE(r.size() == 3);
      xs.insert(r[0]);
      ys.insert(r[1]);
      CHECK(std::isfinite(std::stod(r[2])));
    }
    CHECK(xs.size() == 40u);
    CHECK(ys.size() == 40u);
  }

  const std::string first = slurp(out / "summary.json");
  const std::string csv_first = slurp(out / "fit_density.csv");
  run_even_recovery(config("even-recovery", out));
  CHECK(first == slurp(out / "summary.json"));
  CHECK(csv_first == slurp(out / "fit_density.csv"));
}

TEST_CASE("even recovery with a Gaussian target and a shifted centre") {
  ExperimentConfig cfg = config("even-recovery", scratch("even_gauss"));
  cfg.target = "gaussian";
  Vector m(2);
  m << -2.0, 0.75;
  cfg.m = m;
  cfg.n_starts = 2;
  const nlohmann::json s = run_even_recovery(cfg);
  CHECK(s["fit"]["objective"].get<double>() <= 1e-8);
  CHECK(s["mean_error"].get<double>() <= 1e-4);
}

TEST_CASE("elliptical recovery summary") {
  const fs::path out = scratch("elliptical");
  const nlohmann::json s = run_elliptical_recovery(config("elliptical-recovery", out));
  CHECK(s["residual_P"].get<double>() <= 1e-3);
  CHECK(s["residual_Q"].get<double>() <= 1e-3);
  CHECK(s["max_rho_gap_P_Q"].get<double>() <= 1e-3);
  CHECK(s["max_rho_gap_Q_M"].get<double>() <= 1e-3);
  CHECK(s["max_rho_gap_P_M"].get<double>() <= 1e-3);
  CHECK(s["lambda_hat_P"].get<double>() > 0.0);
  CHECK(s == read_json(out / "summary.json"));
  CHECK(fs::exists(out / "target_density.csv"));

  ExperimentConfig cfg = config("elliptical-recovery", scratch("elliptical_identity"));
  cfg.M = Matrix::Identity(2, 2);
  cfg.n_starts = 2;
  const nlohmann::json iso = run_elliptical_recovery(cfg);
  CHECK(iso["residual_Q"].get<double>() <= 1e-3);
  CHECK(std::abs(iso["rho_Q"][0][1].get<double>()) <= 1e-3);
}

TEST_CASE("sphere threshold sweep") {
  const fs::path out = scratch("threshold");
  ExperimentConfig cfg = config("sphere-threshold", out);
  cfg.eta = 1.5;
  const nlohmann::json s = run_sphere_threshold(cfg);
  CHECK(s == read_json(out / "threshold.json"));
  CHECK(s["eta_critical"].get<double>() == doctest::Approx(1.163296).epsilon(1e-6));
  const auto& rows = s["sweep"];
  CHECK(rows.size() == 23u);
  int figure_rows = 0;
  for (const auto& r : rows) {
    CHECK(r["gap"].get<double>() <= 1e-4);
    CHECK(r["axis_recovered"].get<bool>() == r["predicted_recovery"].get<bool>());
    if (r["source"] == "figure") {
      ++figure_rows;
      if (r["eta"].get<double>() == 2.0) CHECK(r["fitted_c"].get<double>() == doctest::Approx(0.5816).epsilon(2e-3));
      if (r["eta"].get<double>() == 1.0) CHECK(r["fitted_c"].get<double>() >= 1.0 - 1e-6);
    }
  }
  CHECK(figure_rows == 2);
  CHECK(rows.back()["source"] == "requested");

  cfg = config("sphere-threshold", scratch("threshold_d5"));
  cfg.d = 5;
  cfg.n_starts = 2;
  const nlohmann::json s5 = run_sphere_threshold(cfg);
  CHECK(s5["u"].size() == 5u);
  for (const auto& r : s5["sweep"]) CHECK(r["gap"].get<double>() <= 1e-4);
}

TEST_CASE("sphere contours") {
  for (double eta : {1.0, 2.0}) {
    CAPTURE(eta);
    const fs::path out = scratch("contours");
    ExperimentConfig cfg = config("sphere-contours", out);
    cfg.eta = eta;
    const nlohmann::json s = run_sphere_contours(cfg);
    CHECK(s == read_json(out / "summary.json"));
    const Csv csv = read_csv(out / "contours.csv");
    CHECK(csv.header == std::vector<std::string>{"kind", "i", "j", "X", "Y", "log_p", "log_q"});
    int grid = 0, center = 0, minimizers = 0, latitude = 0;
    std::set<std::pair<int, int>> nodes;
    for (const auto& r : csv.rows) {
      REQUIRE(r.size() == 7);
      for (int k = 3; k < 7; ++k) CHECK(std::isfinite(std::stod(r[k])));
      const double radius = std::hypot(std::stod(r[3]), std::stod(r[4]));
      CHECK(radius <= 2.0 + 1e-12);
      if (r[0] == "grid") {
        ++grid;
        nodes.emplace(std::stoi(r[1]), std::stoi(r[2]));
      } else if (r[0] == "center") {
        ++center;
        CHECK(radius == 0.0);
      } else if (r[0] == "minimizer") {
        ++minimizers;
      } else if (r[0] == "latitude") {
        ++latitude;
        CHECK(radius == doctest::Approx(s["predicted_radius"].get<double>()).epsilon(1e-12));
      }
    }
    CHECK(center == 1);
    CHECK(minimizers >= 8);
    CHECK(grid == s["grid_nodes_written"].get<int>());
    CHECK(grid + s["omitted_antipode_nodes"].get<int>() == 40 * 40);
    CHECK(nodes.size() == static_cast<std::size_t>(grid));
    CHECK(s["grid_spacing"].get<double>() == doctest::Approx(M_PI / 39.0));
    const double best = s["best_minimizer"]["radius"].get<double>();
    if (eta == 1.0) {
      CHECK_FALSE(s["latitude_circle"].get<bool>());
      CHECK(best <= 1e-4);
      CHECK(latitude == 0);
    } else {
      CHECK(s["latitude_circle"].get<bool>());
      CHECK(latitude > 0);
      for (const auto& mk : s["minimizers"]) {
        CHECK(mk["radius"].get<double>() == doctest::Approx(s["predicted_radius"].get<double>()).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("verify-all reports failure with an unattainable tolerance") {
  ExperimentConfig cfg = config("verify-all", scratch("verify"));
  cfg.quadrature_tolerance = 1e-15;
  CHECK(run_experiment(cfg) == 4);
  const nlohmann::json report = read_json(cfg.output_dir / "verification.json");
  CHECK_FALSE(report["all_pass"].get<bool>());
  CHECK(report["n_failed"].get<int>() >= 1);
  bool moments_failed = false;
  for (const auto& c : report["checks"]) {
    if (!c["pass"].get<bool>()) moments_failed = moments_failed || c["criterion"].get<int>() == 2;
  }
  CHECK(moments_failed);
}
