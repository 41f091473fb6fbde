#include "symvi/verification.hpp"

#include "symvi/divergence.hpp"
#include "symvi/euclidean.hpp"
#include "symvi/optimize.hpp"
#include "symvi/sphere.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

namespace symvi {

nlohmann::json to_json(const Matrix& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name},         {"criterion", r.criterion}, {"measured", r.measured},
          {"tolerance", r.tolerance}, {"pass", r.pass},         {"details", r.details}};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CheckResult result(std::string name, int criterion, double measured, double tolerance,
                   nlohmann::json details = nlohmann::json::object()) {
  CheckResult r;
  r.name = std::move(name);
  r.criterion = criterion;
  r.measured = measured;
  r.tolerance = tolerance;
  r.pass = std::isfinite(measured) && measured <= tolerance;
  r.details = std::move(details);
  return r;
}

double quad_tol(const VerifyOptions& opts, double fallback) {
  return opts.quadrature_tolerance ? *opts.quadrature_tolerance : fallback;
}

OptConfig sphere_config(const VerifyOptions& opts) {
  OptConfig cfg;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.n_starts = 4;
  return cfg;
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

// Per-generator cycle of Gaussian pairs with random means and covariances.
std::pair<Density, Density> random_gaussian_pair(int d, std::mt19937_64& rng) {
  const Vector m1 = random_normal_vector(d, rng);
  const Vector m2 = 0.7 * random_normal_vector(d, rng);
  return {gaussian_density(m1, random_spd(d, rng, 0.5, 2.0)), gaussian_density(m2, random_spd(d, rng, 0.5, 2.0))};
}

AffineMap random_affine(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector scales(d);
  for (int i = 0; i < d; ++i) scales[i] = std::exp(u(rng));
  const Matrix a = random_orthogonal(d, rng) * scales.asDiagonal() * random_orthogonal(d, rng);
  return AffineMap(a, random_normal_vector(d, rng));
}

}  // namespace

std::vector<CheckResult> check_sphere_constants(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  const SphereMoments mom = marginal_moments(3, 2.5);
  const double eta_c = eta_critical(3, 1.0, 2.5);
  std::vector<CheckResult> out;
  out.push_back(result("sphere_constant_A", 1, std::abs(mom.A - 0.6135), 5e-4, {{"value", mom.A}, {"reference", 0.6135}}));
  out.push_back(result("sphere_constant_B", 1, std::abs(mom.B - 0.2637), 5e-4, {{"value", mom.B}, {"reference", 0.2637}}));
  out.push_back(
      result("sphere_eta_critical", 1, std::abs(eta_c - 1.1632), 1e-3, {{"value", eta_c}, {"reference", 1.1632}}));
  Vector u(3);
  u << 0.0, 0.0, 1.0;
  const VmfFit fit = fit_vmf(AxialTarget{u, 1.0, 2.0}, reverse_kl(), sphere_config(opts), 2.5, true);
  const double c = u.dot(fit.params.nu);
  out.push_back(result("sphere_latitude_eta2", 1, std::abs(c - 0.5816), 1e-3,
                       {{"fitted_c", c},
                        {"predicted_c", predicted_minimizer_c(3, 1.0, 2.0, 2.5)},
                        {"reference", 0.5816},
                        {"nu_star", to_json(fit.params.nu)}}));
  const double secs = seconds_since(t0);
  for (auto& r : out) r.seconds = secs;
  return out;
}

std::vector<CheckResult> check_closed_form_moments(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (double kappa : {0.05, 0.1, 0.5, 1.0, 2.0, 2.5, 5.0, 10.0, 20.0, 50.0}) {
    const SphereMoments mom = marginal_moments(3, kappa);
    const double coth = 1.0 / std::tanh(kappa);
    const double a = coth - 1.0 / kappa;
    const double b = 1.0 - 3.0 / kappa * coth + 3.0 / (kappa * kappa);
    const double err = std::max(std::abs(mom.A - a), std::abs(mom.B - b));
    worst = std::max(worst, err);
    rows.push_back({{"kappa0", kappa}, {"A", mom.A}, {"A_closed", a}, {"B", mom.B}, {"B_closed", b}, {"error", err}});
  }
  CheckResult r = result("closed_form_moments_d3", 2, worst, quad_tol(opts, 1e-10), {{"rows", rows}});
  r.seconds = seconds_since(t0);
  return {r};
}

std::vector<CheckResult> check_phase_transition(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  const int d = 3;
  const double lambda = 1.0;
  const double kappa0 = 2.5;
  Vector u(3);
  u << 1.0, 2.0, 2.0;
  u /= 3.0;
  const double eta_c = eta_critical(d, lambda, kappa0);
  double worst_gap = 0.0;
  int mismatches = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k < 20; ++k) {
    const double eta = (0.2 + 2.8 * k / 19.0) * eta_c;
    const VmfFit fit = fit_vmf(AxialTarget{u, lambda, eta}, reverse_kl(), sphere_config(opts), kappa0, true);
    const double c_fit = u.dot(fit.params.nu);
    const double c_pred = predicted_minimizer_c(d, lambda, eta, kappa0);
    const bool recovered = Line(fit.params.nu).distance(Line(u)) <= 1e-3;
    const bool expected = eta <= eta_c;
    worst_gap = std::max(worst_gap, std::abs(c_fit - c_pred));
    if (recovered != expected) ++mismatches;
    rows.push_back({{"eta", eta},
                    {"predicted_c", c_pred},
                    {"fitted_c", c_fit},
                    {"gap", std::abs(c_fit - c_pred)},
                    {"axis_recovered", recovered},
                    {"expected_recovery", expected}});
  }
  CheckResult r = result("phase_transition_sweep", 3, worst_gap, 1e-4,
                         {{"eta_critical", eta_c}, {"recovery_mismatches", mismatches}, {"rows", rows}});
  r.pass = r.pass && mismatches == 0;
  r.seconds = seconds_since(t0);
  return {r};
}

std::vector<CheckResult> check_pushforward_suite(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(opts.seed + 11);
  const auto& gens = builtin_generators();
  double worst = 0.0;
  nlohmann::json per_generator = nlohmann::json::object();
  for (int trial = 0; trial < 50; ++trial) {
    const auto& g = gens[static_cast<std::size_t>(trial) % gens.size()];
    const int d = 1 + trial % 2;
    auto [p, q] = random_gaussian_pair(d, rng);
    const AffineMap map = random_affine(d, rng);
    const double gap = check_pushforward_invariance(g, p, q, map, default_quadrature(p, &q));
    worst = std::max(worst, gap);
    per_generator[g.name] = std::max(per_generator.value(g.name, 0.0), gap);
  }
  CheckResult r = result("pushforward_invariance", 4, worst, quad_tol(opts, 1e-5),
                         {{"trials", 50}, {"max_per_generator", per_generator}});
  r.seconds = seconds_since(t0);
  return {r};
}

std::vector<CheckResult> check_even_recovery(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  const Density target = canonical_even_target();
  const Vector m = canonical_center();
  const LocScaleFamily family = gaussian_family(2);
  for (const char* name : {"reverse-kl", "kl", "chi2"}) {
    const auto t0 = Clock::now();
    OptConfig cfg;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    const LocScaleFit fit = fit_locscale(target, family, generator_by_name(name), default_quadrature(target), cfg);
    CheckResult r = result(std::string("even_mean_recovery_") + name, 5, (fit.params.nu - m).norm(), 1e-3,
                           {{"divergence", name},
                            {"nu_star", to_json(fit.params.nu)},
                            {"S_star", to_json(fit.params.S)},
                            {"objective", fit.objective},
                            {"start_dispersion", fit.start_dispersion},
                            {"converged", fit.converged}});
    r.seconds = seconds_since(t0);
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> check_elliptical_recovery(const VerifyOptions& opts) {
  const auto t0 = Clock::now();
  const EllipticalTargetSpec spec = canonical_elliptical_spec();
  const Density target = make_elliptical_target(spec);
  OptConfig cfg;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  const LocScaleFit fit = fit_locscale(target, gaussian_family(2), reverse_kl(), default_quadrature(target), cfg);
  const Matrix sigma_q = fit.params.S;
  const FixedSetCheck fs = fixed_set_checks(sigma_q, spec.M);
  const Matrix rho_m = correlation_from_covariance(spec.M);
  const Matrix rho_q = correlation_from_covariance(sigma_q);
  const double corr_gap = (rho_q - rho_m).cwiseAbs().maxCoeff();
  nlohmann::json details = {{"Sigma_Q", to_json(sigma_q)},     {"M", to_json(spec.M)},
                            {"lambda_hat_Q", fs.lambda_hat},    {"rho_Q", to_json(rho_q)},
                            {"rho_M", to_json(rho_m)},          {"nu_star", to_json(fit.params.nu)},
                            {"objective", fit.objective},       {"converged", fit.converged}};
  std::vector<CheckResult> out;
  out.push_back(result("elliptical_proportionality", 6, fs.residual, 1e-3, details));
  out.push_back(result("elliptical_correlation", 6, corr_gap, 1e-3, details));
  const double secs = seconds_since(t0);
  for (auto& r : out) r.seconds = secs;
  return out;
}

std::vector<CheckResult> check_correlation_counterexample(const VerifyOptions&) {
  const auto t0 = Clock::now();
  const Vector zero = Vector::Zero(2);
  const Density pi1 = gaussian_density(zero, Matrix::Identity(2, 2));
  const Density pi2 = gaussian_density(zero, Eigen::Vector2d(1.0, 3.0).asDiagonal().toDenseMatrix());
  Matrix rot(2, 2);
  rot << 1.0, -1.0, 1.0, 1.0;
  rot /= std::numbers::sqrt2;
  const AffineMap map(rot, zero);
  const Matrix c1 = correlation(pi1);
  const Matrix c2 = correlation(pi2);
  const Matrix rc1 = correlation(pushforward(pi1, map));
  const Matrix rc2 = correlation(pushforward(pi2, map));
  Matrix expected(2, 2);
  expected << 1.0, -0.5, -0.5, 1.0;
  const Matrix eye = Matrix::Identity(2, 2);
  const double err = std::max({(c1 - eye).cwiseAbs().maxCoeff(), (c2 - eye).cwiseAbs().maxCoeff(),
                               (rc1 - eye).cwiseAbs().maxCoeff(), (rc2 - expected).cwiseAbs().maxCoeff()});
  CheckResult r = result("correlation_counterexample", 7, err, 1e-9,
                         {{"R", to_json(rot)},
                          {"corr_pi1", to_json(c1)},
                          {"corr_pi2", to_json(c2)},
                          {"corr_R_pi1", to_json(rc1)},
                          {"corr_R_pi2", to_json(rc2)}});
  r.seconds = seconds_since(t0);
  return {r};
}

std::vector<CheckResult> check_sampler_moments(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  const std::size_t n = 100000;
  std::mt19937_64 rng(opts.seed + 23);
  auto z_score = [](const Vector& values, double target) {
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / static_cast<double>(values.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(values.size()));
    return std::pair{std::abs(mean - target) / se, mean};
  };
  for (auto [d, kappa] : {std::pair{3, 2.5}, std::pair{5, 2.5}, std::pair{4, 10.0}}) {
    const auto t0 = Clock::now();
    Vector nu = random_normal_vector(d, rng);
    nu.normalize();
    const Vector u = orthonormal_complement(nu).col(0);
    const Matrix x = sample_vmf(VmfParams{nu, kappa}, n, rng.operator()());
    const SphereMoments mom = marginal_moments(d, kappa);
    const auto [z1, mean1] = z_score((nu.transpose() * x).transpose(), mom.A);
    const Vector proj = (u.transpose() * x).transpose();
    const double expected2 = (1.0 - mom.m2) / (d - 1.0);
    const auto [z2, mean2] = z_score(proj.array().square().matrix(), expected2);
    const double secs = seconds_since(t0);
    CheckResult a = result(fmt("vmf_sampler_mean_d%g_kappa%g", d, kappa), 8, z1, 4.0,
                           {{"n", n}, {"empirical", mean1}, {"A", mom.A}});
    CheckResult b = result(fmt("vmf_sampler_orthogonal_second_moment_d%g_kappa%g", d, kappa), 8, z2, 4.0,
                           {{"n", n}, {"empirical", mean2}, {"expected", expected2}});
    a.seconds = b.seconds = secs;
    out.push_back(a);
    out.push_back(b);
  }
  for (int d : {3, 5}) {
    const auto t0 = Clock::now();
    const Vector nu = Vector::Unit(d, 0);
    const Matrix x = sample_vmf(VmfParams{nu, 1e-6}, n, rng.operator()());
    const Vector t2 = (nu.transpose() * x).transpose().array().square().matrix();
    const auto [z, mean] = z_score(t2, 1.0 / d);
    CheckResult r = result(fmt("vmf_sampler_uniform_limit_d%g", d), 8, z, 4.0,
                           {{"n", n}, {"empirical", mean}, {"expected", 1.0 / d}});
    r.seconds = seconds_since(t0);
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> check_property_suites(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(opts.seed + 37);
  auto add = [&](CheckResult r, Clock::time_point t0) {
    r.seconds = seconds_since(t0);
    out.push_back(std::move(r));
  };

  {
    const auto t0 = Clock::now();
    double margin = kInf;
    nlohmann::json rows = nlohmann::json::array();
    for (int d : {3, 4, 5, 8}) {
      for (double kappa : {0.1, 1.0, 2.5, 10.0}) {
        const SphereMoments mom = marginal_moments(d, kappa);
        margin = std::min({margin, mom.m2 - 1.0 / d, mom.B, mom.A});
        rows.push_back({{"d", d}, {"kappa0", kappa}, {"A", mom.A}, {"m2", mom.m2}, {"B", mom.B}});
      }
    }
    CheckResult r = result("moment_bounds", 9, margin, 0.0, {{"rows", rows}});
    r.pass = margin > 0.0;
    add(r, t0);
  }

  {
    const auto t0 = Clock::now();
    const Density target = canonical_even_target();
    const LocScaleFamily family = gaussian_family(2);
    const std::vector<AffineMap> maps{AffineMap::reflection(canonical_center())};
    double on_objective_grid = 0.0;
    double independent = 0.0;
    for (int k = 0; k < 5; ++k) {
      const LocScaleParams params{canonical_center() + random_normal_vector(2, rng), random_spd(2, rng, 1.5, 3.0)};
      const Density q = member_density(family, params);
      for (const auto& g : builtin_generators()) {
        on_objective_grid = std::max(
            on_objective_grid, orbit_objective_check(target, family, g, params, maps, default_quadrature(target)));
        if (g.name == "tv") continue;
        independent =
            std::max(independent, orbit_objective_check(target, family, g, params, maps, default_quadrature(target, &q)));
      }
    }
    add(result("orbit_constancy_even", 9, on_objective_grid, quad_tol(opts, 1e-6), {{"params_drawn", 5}}), t0);
    add(result("orbit_constancy_even_independent_grids", 9, independent, quad_tol(opts, 1e-6),
               {{"params_drawn", 5}, {"generators", {"kl", "reverse-kl", "chi2", "hellinger"}}}),
        t0);
  }

  {
    const auto t0 = Clock::now();
    const EllipticalTargetSpec spec = canonical_elliptical_spec();
    const Density target = make_elliptical_target(spec);
    const LocScaleFamily family = gaussian_family(2);
    std::vector<AffineMap> maps;
    for (int k = 0; k < 5; ++k) maps.push_back(ellipsoid_symmetry(spec.m, spec.M, random_orthogonal(2, rng)));
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      const LocScaleParams params{spec.m + 0.5 * random_normal_vector(2, rng), random_spd(2, rng, 0.5, 2.0)};
      for (const char* name : {"reverse-kl", "kl", "hellinger"}) {
        worst = std::max(worst, orbit_objective_check(target, family, generator_by_name(name), params, maps,
                                                      default_quadrature(target)));
      }
    }
    add(result("orbit_constancy_elliptical", 9, worst, quad_tol(opts, 1e-5), {{"maps", 5}, {"params_drawn", 3}}), t0);
  }

  {
    const auto t0 = Clock::now();
    std::vector<Density> densities{gaussian_density(Vector::Constant(1, 0.3), Matrix::Constant(1, 1, 2.0)),
                                   canonical_even_target(), canonical_elliptical_target(),
                                   uniform_box_density(Box{Vector::Constant(2, -1.0), Vector::Constant(2, 2.0)}),
                                   vmf_density(VmfParams{Vector::Unit(3, 1), 2.5})};
    double worst = 0.0;
    for (const auto& p : densities) {
      for (const auto& g : builtin_generators()) worst = std::max(worst, std::abs(divergence_quadrature(g, p, p)));
    }
    add(result("self_divergence_zero", 9, worst, quad_tol(opts, 1e-9), {{"densities", densities.size()}}), t0);
  }

  {
    const auto t0 = Clock::now();
    double worst = 0.0;
    double lowest = kInf;
    for (int k = 0; k < 10; ++k) {
      auto [p, q] = random_gaussian_pair(1 + k % 2, rng);
      for (const auto& g : builtin_generators()) {
        const double forward = divergence_quadrature(g, p, q);
        const double swapped = divergence_quadrature(dual(g), q, p);
        worst = std::max(worst, std::abs(forward - swapped));
        lowest = std::min({lowest, forward, swapped});
      }
    }
    add(result("generator_duality", 9, worst, quad_tol(opts, 1e-8), {{"pairs", 10}}), t0);
    CheckResult nonneg = result("divergence_nonnegative", 9, std::max(0.0, -lowest), 1e-9, {{"min_value", lowest}});
    add(nonneg, t0);
  }

  {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int d = 3 + k % 4;
      Vector nu = random_normal_vector(d, rng).normalized();
      Vector x = random_normal_vector(d, rng).normalized();
      const Matrix rot = random_orthogonal(d, rng);
      const double a = vmf_log_density(VmfParams{nu, 3.0}, x);
      const double b = vmf_log_density(VmfParams{(rot * nu).normalized(), 3.0}, (rot * x).normalized());
      worst = std::max(worst, std::abs(a - b));
    }
    add(result("vmf_rotation_equivariance", 9, worst, 1e-12), t0);
  }

  {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int d = 3 + k % 4;
      const Vector u = random_normal_vector(d, rng).normalized();
      const Matrix perp = orthonormal_complement(u);
      const AxialTarget target{u, 1.0 + 0.1 * k, 0.5 + 0.2 * k};
      const double c = std::cos(0.15 * k);
      const double s = std::sin(0.15 * k);
      const Vector nu1 = c * u + s * perp.col(0);
      const Vector nu2 = c * u + s * perp.col(d - 2);
      worst = std::max(worst, std::abs(reverse_kl_objective(nu1, target, 2.5) - reverse_kl_objective(nu2, target, 2.5)));
    }
    add(result("reduced_objective_exactness", 9, worst, 1e-12), t0);
  }

  {
    const auto t0 = Clock::now();
    const std::vector<AffineMap> maps{AffineMap::reflection(canonical_center())};
    const double even = check_invariance(canonical_even_target(), maps, 200, opts.seed);
    const double ell = check_invariance(canonical_elliptical_target(), maps, 200, opts.seed);
    add(result("target_reflection_invariance", 9, std::max(even, ell), 1e-9,
               {{"even_target", even}, {"elliptical_target", ell}}),
        t0);
  }
  return out;
}

std::vector<CheckResult> run_all_checks(const VerifyOptions& opts) {
  std::vector<CheckResult> all;
  for (const auto& suite : {check_sphere_constants, check_closed_form_moments, check_phase_transition,
                            check_pushforward_suite, check_even_recovery, check_elliptical_recovery,
                            check_correlation_counterexample, check_sampler_moments, check_property_suites}) {
    auto part = suite(opts);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

}  // namespace symvi
