#include <doctest.h>

#include "symvi/divergence.hpp"
#include "symvi/errors.hpp"
#include "symvi/euclidean.hpp"
#include "symvi/linalg.hpp"

#include <cmath>
#include <numbers>

using namespace symvi;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
  const auto& rule = gauss_legendre(20);
  double integral = 0.0;
  for (int k = 0; k < 20; ++k) integral += rule.weights[k] * std::pow(rule.nodes[k], 10);
  CHECK(integral == doctest::Approx(2.0 / 11.0).epsilon(1e-14));
  CHECK(pairwise_sum(rule.weights.data(), rule.weights.size()) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("symmetric square roots") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    const Matrix s = random_spd(3, rng);
    const Matrix r = sym_sqrt(s);
    CHECK(max_abs(r * r - s) < 1e-12);
    CHECK(max_abs(r - r.transpose()) < 1e-14);
    CHECK(max_abs(sym_inv_sqrt(s) * r - Matrix::Identity(3, 3)) < 1e-12);
    const Matrix q = random_orthogonal(3, rng);
    CHECK(max_abs(q.transpose() * q - Matrix::Identity(3, 3)) < 1e-12);
  }
  CHECK_THROWS_AS(require_spd(mat2(1, 0, 0, -1), "test"), InvalidInput);
  CHECK_THROWS_AS(require_spd(mat2(1, 0.5, 0, 1), "test"), InvalidInput);
}

TEST_CASE("member densities") {
  const LocScaleFamily fam = gaussian_family(2);
  const Density std_normal = member_density(fam, {Vector::Zero(2), Matrix::Identity(2, 2)});
  CHECK(std_normal.log_density(Vector(Vector::Zero(2))) == doctest::Approx(-std::log(2 * std::numbers::pi)));
  const Vector nu = vec2(1, 2);
  const Matrix s = mat2(4, 0, 0, 9);
  const Density q = member_density(fam, {nu, s});
  const Density oracle = gaussian_density(nu, s);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const Vector x = 3.0 * random_normal_vector(2, rng);
    CHECK(q.log_density(x) == doctest::Approx(oracle.log_density(x)).epsilon(1e-12));
  }
  for (int k = 0; k < 5; ++k) {
    const Density m = member_density(fam, {random_normal_vector(2, rng), random_spd(2, rng)});
    CHECK(total_mass(m, default_quadrature(m)) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(member_density(fam, {nu, mat2(1, 0, 0, 0)}), InvalidInput);
}

TEST_CASE("pushforward parameters") {
  const Vector nu = vec2(0.3, -1.0);
  const Matrix s = mat2(2, 0.5, 0.5, 1);
  const auto fixed = pushforward_params({nu, s}, AffineMap::reflection(nu));
  CHECK(max_abs(fixed.nu - nu) < 1e-15);
  CHECK(max_abs(fixed.S - s) < 1e-15);
  const auto moved = pushforward_params({vec2(1, 0), Matrix::Identity(2, 2)}, AffineMap::reflection(Vector::Zero(2)));
  CHECK(max_abs(moved.nu - vec2(-1, 0)) < 1e-15);
  CHECK(max_abs(moved.S - Matrix::Identity(2, 2)) < 1e-15);

  const LocScaleFamily fam = gaussian_family(2);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const LocScaleParams params{random_normal_vector(2, rng), random_spd(2, rng)};
    const AffineMap g = ellipsoid_symmetry(random_normal_vector(2, rng), random_spd(2, rng), random_orthogonal(2, rng));
    const Density lhs = pushforward(member_density(fam, params), g);
    const Density rhs = member_density(fam, pushforward_params(params, g));
    for (int k = 0; k < 20; ++k) {
      const Vector x = 2.0 * random_normal_vector(2, rng);
      CHECK(std::abs(lhs.log_density(x) - rhs.log_density(x)) < 1e-8);
    }
  }
}

TEST_CASE("moments of Gaussians") {
  const Vector m = vec2(1, -2);
  const Matrix sigma = mat2(2, 0.7, 0.7, 1.5);
  const Density p = gaussian_density(m, sigma);
  CHECK(max_abs(mean(p) - m) < 1e-6);
  CHECK(max_abs(covariance(p) - sigma) < 1e-6);
  const Density tight = gaussian_density(m, 1e-6 * Matrix::Identity(2, 2));
  CHECK(max_abs(covariance(tight) - 1e-6 * Matrix::Identity(2, 2)) < 1e-9);
  CHECK(max_abs(correlation(gaussian_density(m, mat2(3, 0, 0, 0.2))) - Matrix::Identity(2, 2)) < 1e-9);
}

TEST_CASE("reflection and congruence actions") {
  const Density p = gaussian_density(vec2(0.5, 2), mat2(1, 0.2, 0.2, 0.5));
  const Vector m = vec2(-1, 1);
  CHECK(max_abs(mean(pushforward(p, AffineMap::reflection(m))) - (2 * m - mean(p))) < 1e-6);
  std::mt19937_64 rng(4);
  const Matrix a = random_orthogonal(2, rng) * mat2(1.5, 0, 0, 0.7);
  const AffineMap t(a, vec2(3, -1));
  CHECK(max_abs(covariance(pushforward(p, t)) - a * covariance(p) * a.transpose()) < 1e-6);
}

TEST_CASE("correlation") {
  CHECK(max_abs(correlation_from_covariance(mat2(2, -1, -1, 2)) - mat2(1, -0.5, -0.5, 1)) < 1e-15);
  std::mt19937_64 rng(6);
  const Matrix s = random_spd(3, rng);
  const Matrix r = correlation_from_covariance(s);
  for (int i = 0; i < 3; ++i) {
    CHECK(r(i, i) == 1.0);
    for (int j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(s(i, j) / std::sqrt(s(i, i) * s(j, j))).epsilon(1e-10));
  }
  CHECK(max_abs(correlation_from_covariance(7.5 * s) - r) < 1e-9);
  CHECK_THROWS_AS(correlation_from_covariance(mat2(1, 0, 0, 1e-13)), DegenerateStatistic);
}

TEST_CASE("counterexample for correlation") {
  const Density pi1 = gaussian_density(Vector::Zero(2), Matrix::Identity(2, 2));
  const Density pi2 = gaussian_density(Vector::Zero(2), mat2(1, 0, 0, 3));
  const AffineMap rot(mat2(1, -1, 1, 1) / std::numbers::sqrt2, Vector::Zero(2));
  CHECK(max_abs(correlation(pi1) - correlation(pi2)) < 1e-9);
  CHECK(max_abs(correlation(pushforward(pi2, rot)) - mat2(1, -0.5, -0.5, 1)) < 1e-9);
  CHECK(max_abs(correlation(pushforward(pi1, rot)) - Matrix::Identity(2, 2)) < 1e-9);
}

TEST_CASE("even targets") {
  const Density single = make_even_target(Vector::Zero(2), {{Vector::Zero(2), mat2(1, 0.3, 0.3, 1), 1.0}});
  CHECK(check_invariance(single, {AffineMap::reflection(Vector::Zero(2))}, 50, 1) < 1e-12);
  const Vector m = vec2(1, 1);
  const Density pair = make_even_target(m, {{m + vec2(2, 0), 0.3 * Matrix::Identity(2, 2), 0.5},
                                            {m - vec2(2, 0), 0.3 * Matrix::Identity(2, 2), 0.5}});
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Vector x = m + 3.0 * random_normal_vector(2, rng);
    CHECK(std::abs(pair.log_density(x) - pair.log_density(Vector(2 * m - x))) <= 1e-12);
  }
  CHECK(max_abs(mean(pair) - m) < 1e-6);
  CHECK(max_abs(mean(canonical_even_target()) - canonical_center()) < 1e-6);
  CHECK_THROWS_AS(make_even_target(m, {{m + vec2(2, 0), Matrix::Identity(2, 2), 1.0}}), InvalidInput);
  const Density shifted = gaussian_density(vec2(1, 0), Matrix::Identity(2, 2));
  CHECK(check_invariance(shifted, {AffineMap::reflection(Vector::Zero(2))}, 50, 2) > 0.1);
}

TEST_CASE("elliptical targets") {
  const Density gauss = make_elliptical_target({Vector::Zero(2), Matrix::Identity(2, 2), gaussian_profile()});
  const Density oracle = gaussian_density(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(gauss.log_density(vec2(0.3, -1.2)) == doctest::Approx(oracle.log_density(vec2(0.3, -1.2))).epsilon(1e-12));

  const EllipticalTargetSpec spec = canonical_elliptical_spec();
  const Density p = make_elliptical_target(spec);
  // multivariate t (5 dof) reference value
  CHECK(p.log_density(vec2(2.3, -0.4)) == doctest::Approx(-4.834904237977314).epsilon(1e-10));
  CHECK(total_mass(p, default_quadrature(p)) == doctest::Approx(1.0).epsilon(1e-6));

  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const AffineMap g = ellipsoid_symmetry(spec.m, spec.M, random_orthogonal(2, rng));
    const Vector x = spec.m + 2.0 * random_normal_vector(2, rng);
    CHECK(std::abs(p.log_density(g.apply(x)) - p.log_density(x)) <= 1e-10);
  }
  std::vector<AffineMap> maps;
  for (int k = 0; k < 10; ++k) maps.push_back(ellipsoid_symmetry(spec.m, spec.M, random_orthogonal(2, rng)));
  CHECK(check_invariance(p, maps, 100, 3) <= 1e-9);
  CHECK(check_invariance(p, {AffineMap::reflection(spec.m)}, 100, 4) <= 1e-9);

  const Matrix sigma = covariance(p);
  CHECK(max_abs(sigma - 5.0 / 3.0 * spec.M) < 1e-6);
  const FixedSetCheck fs = fixed_set_checks(sigma, spec.M);
  CHECK(fs.residual <= 1e-5);
  CHECK(fs.lambda_hat == doctest::Approx(5.0 / 3.0).epsilon(1e-6));
  CHECK(max_abs(correlation(p) - correlation_from_covariance(spec.M)) < 1e-6);

  RadialProfile cauchy_like{"flat", [](double r2) { return -std::log1p(r2); }, TailKind::Heavy};
  CHECK_THROWS_AS(make_elliptical_target({Vector::Zero(2), Matrix::Identity(2, 2), cauchy_like}), InvalidInput);
}

TEST_CASE("fixed-set checks") {
  const Matrix m = mat2(2, 0.8, 0.8, 1);
  const FixedSetCheck exact = fixed_set_checks(3.0 * m, m);
  CHECK(exact.lambda_hat == doctest::Approx(3.0));
  CHECK(exact.residual < 1e-14);
  const Matrix e = mat2(0.3, -1, -1, 0.6);
  const double r1 = fixed_set_checks(m + 1e-3 * e, m).residual;
  const double r2 = fixed_set_checks(m + 1e-4 * e, m).residual;
  CHECK(r1 > 0.0);
  CHECK(r1 / r2 == doctest::Approx(10.0).epsilon(0.01));
  CHECK_THROWS_AS(fixed_set_checks(m, mat2(1, 0, 0, -1)), InvalidInput);
}
