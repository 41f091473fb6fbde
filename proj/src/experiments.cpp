#include "symvi/experiments.hpp"

#include "symvi/divergence.hpp"
#include "symvi/errors.hpp"
#include "symvi/euclidean.hpp"
#include "symvi/optimize.hpp"
#include "symvi/sphere.hpp"
#include "symvi/verification.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

namespace symvi {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  static const char* known[] = {"even-recovery", "elliptical-recovery", "sphere-threshold", "sphere-contours",
                                "verify-all"};
  if (std::find(std::begin(known), std::end(known), experiment) == std::end(known)) {
    throw InvalidInput("unknown experiment '" + experiment + "'");
  }
  if (resolution < 32) throw InvalidInput("resolution must be >= 32");
  const bool sphere = experiment == "sphere-threshold" || experiment == "sphere-contours";
  if (sphere && d < 3) throw InvalidInput("sphere experiments need d >= 3");
  if (experiment == "sphere-contours" && d != 3) throw InvalidInput("sphere-contours needs d = 3");
  if (!(kappa0 > 0.0) || !std::isfinite(kappa0)) throw InvalidInput("kappa0 must be positive");
  if (lambda == 0.0 || !std::isfinite(lambda)) throw InvalidInput("lambda must be nonzero");
  if (eta && (!(*eta > 0.0) || !std::isfinite(*eta))) throw InvalidInput("eta must be positive");
  generator_by_name(divergence);
  if (target != "mixture" && target != "gaussian") throw InvalidInput("target must be mixture or gaussian");
  if (threads < 1) throw InvalidInput("threads must be >= 1");
  if (n_starts < 1) throw InvalidInput("n_starts must be >= 1");
  if (m && m->size() != 2) throw InvalidInput("m must have two entries");
  if (M) {
    if (M->rows() != 2 || M->cols() != 2) throw InvalidInput("M must be 2 x 2");
    require_spd(*M, "M");
  }
  if (quadrature_tolerance && !(*quadrature_tolerance > 0.0)) throw InvalidInput("quadrature tolerance must be positive");
}

namespace {

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

OptConfig fit_config(const ExperimentConfig& cfg) {
  OptConfig opt;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.n_starts = cfg.n_starts;
  return opt;
}

struct PlotWindow {
  Vector lower;
  Vector upper;
};

PlotWindow window_for(const Density& p) {
  const Vector sd = p.extent().covariance.diagonal().cwiseSqrt();
  return {p.extent().center - 4.0 * sd, p.extent().center + 4.0 * sd};
}

void write_density_grid(const fs::path& path, const Density& p, const PlotWindow& w, int resolution,
                        const std::string& label) {
  Matrix pts(2, resolution * resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double x = w.lower[0] + (w.upper[0] - w.lower[0]) * i / (resolution - 1.0);
      const double y = w.lower[1] + (w.upper[1] - w.lower[1]) * j / (resolution - 1.0);
      pts.col(i * resolution + j) << x, y;
    }
  }
  const Vector lp = p.log_density(pts);
  auto out = open_output(path);
  out << "# " << label << " log-density on a " << resolution << " x " << resolution << " grid\n"
      << "# columns: x, y, log_density (x varies slowest)\n"
      << "x,y,log_density\n";
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    out << num(pts(0, k)) << ',' << num(pts(1, k)) << ',' << num(lp[k]) << '\n';
  }
}

nlohmann::json window_json(const PlotWindow& w, int resolution) {
  return {{"resolution", resolution}, {"lower", to_json(w.lower)}, {"upper", to_json(w.upper)}};
}

nlohmann::json fit_json(const LocScaleFit& fit) {
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : fit.starts) {
    starts.push_back({{"objective", s.objective}, {"nu", to_json(s.params.nu)}, {"converged", s.converged}});
  }
  return {{"objective", fit.objective},
          {"converged", fit.converged},
          {"n_evals", fit.n_evals},
          {"start_dispersion", fit.start_dispersion},
          {"starts", starts}};
}

Vector last_axis(int d) { return Vector::Unit(d, d - 1); }

}  // namespace

nlohmann::json run_even_recovery(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  const Vector m = cfg.m ? *cfg.m : canonical_center();
  Density target = gaussian_density(m, canonical_even_components().front().covariance);
  if (cfg.target == "mixture") {
    auto comps = canonical_even_components();
    const Vector shift = m - canonical_center();
    for (auto& c : comps) c.mean += shift;
    target = make_even_target(m, comps);
  }
  const DivergenceGenerator g = generator_by_name(cfg.divergence);
  const LocScaleFamily family = gaussian_family(2);
  const LocScaleFit fit = fit_locscale(target, family, g, default_quadrature(target), fit_config(cfg));
  const Vector mu_p = mean(target);
  const PlotWindow w = window_for(target);
  write_density_grid(cfg.output_dir / "target_density.csv", target, w, cfg.resolution, "target");
  write_density_grid(cfg.output_dir / "fit_density.csv", member_density(family, fit.params), w, cfg.resolution,
                     "fitted variational");
  nlohmann::json summary = {{"experiment", "even-recovery"},
                            {"seed", cfg.seed},
                            {"divergence", g.name},
                            {"target", cfg.target},
                            {"m", to_json(m)},
                            {"mu_P", to_json(mu_p)},
                            {"nu_star", to_json(fit.params.nu)},
                            {"S_star", to_json(fit.params.S)},
                            {"mean_error", (fit.params.nu - m).norm()},
                            {"mu_P_error", (mu_p - m).norm()},
                            {"fit", fit_json(fit)},
                            {"grid", window_json(w, cfg.resolution)}};
  write_json(cfg.output_dir / "summary.json", summary);
  return summary;
}

nlohmann::json run_elliptical_recovery(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  EllipticalTargetSpec spec = canonical_elliptical_spec();
  if (cfg.m) spec.m = *cfg.m;
  if (cfg.M) spec.M = *cfg.M;
  const Density target = make_elliptical_target(spec);
  const DivergenceGenerator g = generator_by_name(cfg.divergence);
  const LocScaleFamily family = gaussian_family(2);
  const LocScaleFit fit = fit_locscale(target, family, g, default_quadrature(target), fit_config(cfg));
  const Matrix sigma_p = covariance(target);
  const Matrix sigma_q = fit.params.S;
  const FixedSetCheck fs_p = fixed_set_checks(sigma_p, spec.M);
  const FixedSetCheck fs_q = fixed_set_checks(sigma_q, spec.M);
  const Matrix rho_p = correlation_from_covariance(sigma_p);
  const Matrix rho_q = correlation_from_covariance(sigma_q);
  const Matrix rho_m = correlation_from_covariance(spec.M);
  const PlotWindow w = window_for(target);
  write_density_grid(cfg.output_dir / "target_density.csv", target, w, cfg.resolution, "target");
  write_density_grid(cfg.output_dir / "fit_density.csv", member_density(family, fit.params), w, cfg.resolution,
                     "fitted variational");
  nlohmann::json summary = {{"experiment", "elliptical-recovery"},
                            {"seed", cfg.seed},
                            {"divergence", g.name},
                            {"radial_profile", spec.radial_profile.name},
                            {"m", to_json(spec.m)},
                            {"M", to_json(spec.M)},
                            {"nu_star", to_json(fit.params.nu)},
                            {"S_star", to_json(fit.params.S)},
                            {"Sigma_P", to_json(sigma_p)},
                            {"Sigma_Q", to_json(sigma_q)},
                            {"lambda_hat_P", fs_p.lambda_hat},
                            {"lambda_hat_Q", fs_q.lambda_hat},
                            {"residual_P", fs_p.residual},
                            {"residual_Q", fs_q.residual},
                            {"rho_P", to_json(rho_p)},
                            {"rho_Q", to_json(rho_q)},
                            {"rho_M", to_json(rho_m)},
                            {"max_rho_gap_P_Q", (rho_p - rho_q).cwiseAbs().maxCoeff()},
                            {"max_rho_gap_P_M", (rho_p - rho_m).cwiseAbs().maxCoeff()},
                            {"max_rho_gap_Q_M", (rho_q - rho_m).cwiseAbs().maxCoeff()},
                            {"fit", fit_json(fit)},
                            {"grid", window_json(w, cfg.resolution)}};
  write_json(cfg.output_dir / "summary.json", summary);
  return summary;
}

namespace {

VmfFit fit_sphere(const ExperimentConfig& cfg, const AxialTarget& target, int n_starts) {
  OptConfig opt = fit_config(cfg);
  opt.n_starts = n_starts;
  const DivergenceGenerator g = generator_by_name(cfg.divergence);
  return fit_vmf(target, g, opt, cfg.kappa0, g.name == "reverse-kl");
}

}  // namespace

nlohmann::json run_sphere_threshold(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  const int d = cfg.d;
  const Vector u = last_axis(d);
  const SphereMoments mom = marginal_moments(d, cfg.kappa0);
  const double eta_c = eta_critical(d, cfg.lambda, cfg.kappa0);
  std::vector<std::pair<double, std::string>> etas;
  for (int k = 0; k < 20; ++k) etas.emplace_back((0.2 + 2.8 * k / 19.0) * eta_c, "sweep");
  etas.emplace_back(1.0, "figure");
  etas.emplace_back(2.0, "figure");
  if (cfg.eta) etas.emplace_back(*cfg.eta, "requested");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [eta, source] : etas) {
    const VmfFit fit = fit_sphere(cfg, AxialTarget{u, cfg.lambda, eta}, cfg.n_starts);
    const double c_fit = u.dot(fit.params.nu);
    const double c_pred = predicted_minimizer_c(d, cfg.lambda, eta, cfg.kappa0);
    rows.push_back({{"eta", eta},
                    {"source", source},
                    {"predicted_c", c_pred},
                    {"fitted_c", c_fit},
                    {"gap", std::abs(c_fit - c_pred)},
                    {"axis_recovered", Line(fit.params.nu).distance(Line(u)) <= 1e-3},
                    {"predicted_recovery", eta <= eta_c},
                    {"nu_star", to_json(fit.params.nu)},
                    {"objective", fit.objective},
                    {"start_dispersion", fit.start_dispersion},
                    {"converged", fit.converged}});
  }
  nlohmann::json summary = {{"experiment", "sphere-threshold"},
                            {"seed", cfg.seed},
                            {"divergence", cfg.divergence},
                            {"d", d},
                            {"lambda", cfg.lambda},
                            {"kappa0", cfg.kappa0},
                            {"u", to_json(u)},
                            {"A", mom.A},
                            {"m2", mom.m2},
                            {"B", mom.B},
                            {"eta_critical", eta_c},
                            {"sweep", rows}};
  write_json(cfg.output_dir / "threshold.json", summary);
  return summary;
}

nlohmann::json run_sphere_contours(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  const Vector u = last_axis(3);
  const double eta = cfg.eta ? *cfg.eta : 1.0;
  const AxialTarget target{u, cfg.lambda, eta};
  const VmfFit fit = fit_sphere(cfg, target, std::max(cfg.n_starts, 8));
  const Density p = axial_density(target);
  const Density q = vmf_density(VmfParams{fit.params.nu, cfg.kappa0});
  const double eta_c = eta_critical(3, cfg.lambda, cfg.kappa0);
  const double c_star = predicted_minimizer_c(3, cfg.lambda, eta, cfg.kappa0);

  auto out = open_output(cfg.output_dir / "contours.csv");
  const int n = cfg.resolution;
  out << "# Lambert azimuthal equal-area projection centred at the target axis u\n"
      << "# kind: grid (polar node i, azimuthal node j), center, minimizer (one per start), latitude\n"
      << "# marker rows carry i = j = -1; nodes at the antipode of u are omitted\n"
      << "kind,i,j,X,Y,log_p,log_q\n";
  auto row = [&](const char* kind, int i, int j, const Vector& x) {
    const Eigen::Vector2d xy = lambert_project(x, u);
    Matrix col = x;
    out << kind << ',' << i << ',' << j << ',' << num(xy.x()) << ',' << num(xy.y()) << ','
        << num(p.log_density(col)[0]) << ',' << num(q.log_density(col)[0]) << '\n';
    return xy;
  };
  const Matrix frame = orthonormal_complement(u);
  auto point = [&](double theta, double phi) -> Vector {
    return std::cos(theta) * u + std::sin(theta) * (std::cos(phi) * frame.col(0) + std::sin(phi) * frame.col(1));
  };
  int written = 0;
  int omitted = 0;
  for (int i = 0; i < n; ++i) {
    const double theta = std::numbers::pi * i / (n - 1.0);
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / n;
      try {
        row("grid", i, j, point(theta, phi));
        ++written;
      } catch (const ProjectionUndefined&) {
        ++omitted;
      }
    }
  }
  row("center", -1, -1, u);
  nlohmann::json markers = nlohmann::json::array();
  for (const auto& s : fit.starts) {
    const Eigen::Vector2d xy = row("minimizer", -1, -1, s.params.nu);
    markers.push_back({{"X", xy.x()}, {"Y", xy.y()}, {"radius", xy.norm()}, {"objective", s.objective}});
  }
  const bool circle = eta > eta_c;
  if (circle) {
    const double theta = std::acos(c_star);
    for (int j = 0; j < 360; ++j) row("latitude", -1, -1, point(theta, 2.0 * std::numbers::pi * j / 360.0));
  }
  const Eigen::Vector2d best = lambert_project(fit.params.nu, u);
  nlohmann::json summary = {{"experiment", "sphere-contours"},
                            {"seed", cfg.seed},
                            {"divergence", cfg.divergence},
                            {"lambda", cfg.lambda},
                            {"eta", eta},
                            {"kappa0", cfg.kappa0},
                            {"eta_critical", eta_c},
                            {"predicted_c", c_star},
                            {"predicted_radius", std::sqrt(2.0 * (1.0 - c_star))},
                            {"latitude_circle", circle},
                            {"best_minimizer", {{"X", best.x()}, {"Y", best.y()}, {"radius", best.norm()}}},
                            {"minimizers", markers},
                            {"resolution", n},
                            {"grid_spacing", std::numbers::pi / (n - 1.0)},
                            {"grid_nodes_written", written},
                            {"omitted_antipode_nodes", omitted}};
  write_json(cfg.output_dir / "summary.json", summary);
  return summary;
}

nlohmann::json run_verify_all(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_output(cfg.output_dir);
  VerifyOptions opts;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  opts.quadrature_tolerance = cfg.quadrature_tolerance;
  const auto checks = run_all_checks(opts);
  nlohmann::json entries = nlohmann::json::array();
  int failed = 0;
  for (const auto& c : checks) {
    entries.push_back(to_json(c));
    if (!c.pass) ++failed;
  }
  nlohmann::json report = {{"experiment", "verify-all"},
                           {"seed", cfg.seed},
                           {"all_pass", failed == 0},
                           {"n_checks", checks.size()},
                           {"n_failed", failed},
                           {"checks", entries}};
  write_json(cfg.output_dir / "verification.json", report);
  return report;
}

int run_experiment(const ExperimentConfig& cfg) {
  try {
    cfg.validate();
    if (cfg.experiment == "even-recovery") {
      run_even_recovery(cfg);
    } else if (cfg.experiment == "elliptical-recovery") {
      run_elliptical_recovery(cfg);
    } else if (cfg.experiment == "sphere-threshold") {
      run_sphere_threshold(cfg);
    } else if (cfg.experiment == "sphere-contours") {
      run_sphere_contours(cfg);
    } else {
      const auto report = run_verify_all(cfg);
      if (!report["all_pass"].get<bool>()) {
        for (const auto& c : report["checks"]) {
          if (!c["pass"].get<bool>()) std::cerr << "FAIL " << c["name"].get<std::string>() << '\n';
        }
        return 4;
      }
    }
    return 0;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const OptimizationFailed& e) {
    std::cerr << "optimization failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace symvi
