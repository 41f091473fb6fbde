#include <doctest.h>

#include "symvi/divergence.hpp"
#include "symvi/errors.hpp"
#include "symvi/linalg.hpp"
#include "symvi/sphere.hpp"

#include <cmath>
#include <numbers>

using namespace symvi;

namespace {

Vector unit3(double x, double y, double z) {
  Vector v(3);
  v << x, y, z;
  return v.normalized();
}

double coth(double x) { return 1.0 / std::tanh(x); }

}  // namespace

TEST_CASE("marginal moments: reference constants") {
  const SphereMoments mom = marginal_moments(3, 2.5);
  CHECK(std::abs(mom.A - 0.6135) <= 5e-4);
  CHECK(std::abs(mom.B - 0.2637) <= 5e-4);
  CHECK_THROWS_AS(marginal_moments(2, 1.0), InvalidInput);
  CHECK_THROWS_AS(marginal_moments(3, 0.0), InvalidInput);
}

TEST_CASE("marginal moments: d = 3 closed forms") {
  for (double k : {0.05, 0.3, 1.0, 2.5, 4.0, 7.5, 12.0, 25.0, 40.0, 60.0}) {
    CAPTURE(k);
    const SphereMoments mom = marginal_moments(3, k);
    CHECK(std::abs(mom.A - (coth(k) - 1.0 / k)) <= 1e-10);
    CHECK(std::abs(mom.B - (1.0 - 3.0 / k * coth(k) + 3.0 / (k * k))) <= 1e-10);
  }
}

TEST_CASE("marginal moments: Bessel-ratio references") {
  struct Row {
    int d;
    double A, m2, B;
  };
  // A = I_{d/2}(2.5) / I_{d/2-1}(2.5); m2 by high-precision quadrature.
  for (const Row& r : {Row{4, 0.507195100047020934, 0.391365879943574880, 0.188487839924766506},
                       Row{5, 0.429813036006454078, 0.312299142389673476, 0.140373927987091844},
                       Row{8, 0.290863772694641822, 0.185581436455002897, 0.0692359273771461685}}) {
    CAPTURE(r.d);
    const SphereMoments mom = marginal_moments(r.d, 2.5);
    CHECK(std::abs(mom.A - r.A) <= 1e-12);
    CHECK(std::abs(mom.m2 - r.m2) <= 1e-12);
    CHECK(std::abs(mom.B - r.B) <= 1e-12);
  }
}

TEST_CASE("strict moment bounds") {
  for (int d : {3, 4, 5, 8}) {
    for (double k : {0.1, 1.0, 2.5, 10.0}) {
      const SphereMoments mom = marginal_moments(d, k);
      CHECK(mom.m2 > 1.0 / d);
      CHECK(mom.m2 < 1.0);
      CHECK(mom.B > 0.0);
      CHECK(mom.A > 0.0);
      CHECK(mom.A < 1.0);
    }
  }
}

TEST_CASE("vMF normalizers") {
  const Vector nu = unit3(0, 0, 1);
  // Density with respect to the uniform probability measure on S^2.
  CHECK(vmf_log_density({nu, 2.5}, nu) == doctest::Approx(1.61619866188358893).epsilon(1e-12));
  CHECK(vmf_log_density({nu, 2.5}, nu) == doctest::Approx(std::log(2.5 / std::sinh(2.5)) + 2.5).epsilon(1e-12));
  CHECK(log_vmf_normalizer(5, 2.5) == doctest::Approx(-0.577657588506984689).epsilon(1e-12));
  CHECK(log_vmf_normalizer(4, 1.3) == doctest::Approx(-0.204295423758310725).epsilon(1e-12));
  CHECK(std::abs(vmf_log_density({nu, 1e-9}, unit3(1, 2, 3))) < 1e-8);
  const Density q = vmf_density({unit3(1, -1, 0.5), 7.0});
  CHECK(total_mass(q, default_quadrature(q)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(vmf_log_density({nu, 2.5}, Vector::Constant(3, 1.0)), InvalidInput);
  CHECK_THROWS_AS(vmf_log_density({Vector::Constant(3, 1.0), 2.5}, nu), InvalidInput);
  CHECK_THROWS_AS(vmf_log_density({nu, -1.0}, nu), InvalidInput);
}

TEST_CASE("vMF rotation equivariance") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const int d = 3 + k % 3;
    const Vector nu = random_normal_vector(d, rng).normalized();
    const Vector x = random_normal_vector(d, rng).normalized();
    const Matrix r = random_orthogonal(d, rng);
    CHECK(std::abs(vmf_log_density({(r * nu).normalized(), 4.0}, (r * x).normalized()) -
                   vmf_log_density({nu, 4.0}, x)) <= 1e-12);
  }
}

TEST_CASE("axial targets") {
  const Vector u = unit3(1, 1, 0);
  CHECK(axial_log_normalizer({unit3(0, 0, 1), 1.0, 2.0}) == doctest::Approx(-0.418175736313245576).epsilon(1e-12));
  Vector u5 = Vector::Unit(5, 2);
  CHECK(axial_log_normalizer({u5, -0.7, 0.4}) == doctest::Approx(-0.0319713430804617887).epsilon(1e-10));
  const AxialTarget flat{u, 0.8, 1e-12};
  CHECK(std::exp(axial_log_density(flat, u) - axial_log_density(flat, Vector(-u))) ==
        doctest::Approx(std::exp(1.6)).epsilon(1e-6));
  const AxialTarget t{u, 1.0, 2.0};
  const Matrix perp = orthonormal_complement(u);
  const Vector a = 0.3 * u + std::sqrt(1 - 0.09) * perp.col(0);
  const Vector b = 0.3 * u + std::sqrt(1 - 0.09) * perp.col(1);
  CHECK(axial_log_density(t, a) == axial_log_density(t, b));
  const Density p = axial_density(t);
  CHECK(total_mass(p, default_quadrature(p)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(axial_density({u, 0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(axial_density({u, 1.0, 0.0}), InvalidInput);
}

TEST_CASE("closed-form reverse KL objective") {
  const Vector u = unit3(0, 0, 1);
  const AxialTarget t{u, 1.0, 1.0};
  const SphereMoments mom = marginal_moments(3, 2.5);
  const double at_u = reverse_kl_objective(u, t, 2.5);
  const double at_perp = reverse_kl_objective(unit3(1, 0, 0), t, 2.5);
  CHECK(std::abs((at_u - at_perp) - (t.eta * mom.B - t.lambda * mom.A)) <= 1e-12);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const Vector nu = random_normal_vector(3, rng).normalized();
    const VmfParams q{nu, 2.5};
    const double quad = divergence_quadrature(reverse_kl(), axial_density(t), vmf_density(q));
    CHECK(std::abs(quad - reverse_kl_objective(nu, t, 2.5)) <= 1e-8);
    const double c = u.dot(nu);
    CHECK(reduced_objective(c, 3, 1.0, 1.0, 2.5) + reverse_kl_constant(t, 2.5) ==
          doctest::Approx(reverse_kl_objective(nu, t, 2.5)).epsilon(1e-13));
  }
}

TEST_CASE("critical threshold") {
  CHECK(std::abs(eta_critical(3, 1.0, 2.5) - 1.1632) <= 1e-3);
  CHECK(eta_critical(4, 2.0, 1.7) == 2.0 * eta_critical(4, 1.0, 1.7));
  CHECK(eta_critical(3, -1.0, 1.7) == eta_critical(3, 1.0, 1.7));
  const double k = 1.0;
  const double closed = k * (k * coth(k) - 1.0) / (2.0 * (k * k - 3.0 * k * coth(k) + 3.0));
  CHECK(std::abs(eta_critical(3, 1.0, k) - closed) <= 1e-9);
  CHECK_THROWS_AS(eta_critical(3, 0.0, 2.5), InvalidInput);
  CHECK_THROWS_AS(predicted_minimizer_c(3, 0.0, 1.0, 2.5), InvalidInput);
}

TEST_CASE("predicted minimizer") {
  CHECK(std::abs(predicted_minimizer_c(3, 1.0, 2.0, 2.5) - 0.5816) <= 1e-3);
  CHECK(predicted_minimizer_c(3, 1.0, 1.0, 2.5) == 1.0);
  CHECK(predicted_minimizer_c(3, -1.0, 0.5, 2.5) == -1.0);
}

TEST_CASE("phase transition of the reduced quadratic") {
  for (int d : {3, 4, 6}) {
    for (double lambda : {1.0, -0.6}) {
      const double eta_c = eta_critical(d, lambda, 2.5);
      for (double ratio : {0.3, 0.9, 0.999, 1.05, 1.7, 4.0}) {
        const double eta = ratio * eta_c;
        const SphereMoments mom = marginal_moments(d, 2.5);
        CHECK(reduced_objective(0.3, d, lambda, eta, 2.5) == doctest::Approx(eta * mom.B * 0.09 - lambda * mom.A * 0.3).epsilon(1e-14));
        double best_c = 0.0;
        double best = kInf;
        for (int i = 0; i <= 200000; ++i) {
          const double c = -1.0 + 2.0 * i / 200000.0;
          const double v = eta * mom.B * c * c - lambda * mom.A * c;
          if (v < best) {
            best = v;
            best_c = c;
          }
        }
        CAPTURE(d);
        CAPTURE(ratio);
        if (ratio <= 1.0) {
          CHECK(best_c == (lambda > 0 ? 1.0 : -1.0));
        } else {
          CHECK(std::abs(best_c) < 1.0);
          CHECK(std::abs(best_c - predicted_minimizer_c(d, lambda, eta, 2.5)) <= 1e-5);
        }
      }
    }
  }
}

TEST_CASE("lines") {
  const Vector v = unit3(-1, 2, 0.5);
  CHECK(Line(v) == Line(Vector(-v)));
  CHECK(Line(v).direction()[0] > 0.0);
  Vector w(3);
  w << 1e-12, -1.0, 0.0;
  CHECK(Line(w).direction()[1] > 0.0);
  CHECK(Line(v).distance(Line(Vector(-v))) == 0.0);
  CHECK(Line(unit3(1, 0, 0)).distance(Line(unit3(0, 1, 0))) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(Line(Vector::Zero(3)), InvalidInput);

  const Vector nu = unit3(0.2, -0.3, 0.9);
  CHECK(axis_statistic(VmfParams{nu, 1.0}) == axis_statistic(VmfParams{Vector(-nu), 7.0}));
  CHECK(axis_statistic(AxialTarget{nu, 1.0, 1.0}) == Line(nu));
  std::mt19937_64 rng(3);
  const Matrix r = random_orthogonal(3, rng);
  CHECK(Line(Vector(r * nu)).distance(Line(Vector(r * Line(nu).direction()))) <= 1e-15);
}

TEST_CASE("vMF sampler") {
  const VmfParams params{unit3(1, 2, -2), 2.5};
  const Matrix a = sample_vmf(params, 1000, std::uint64_t{5});
  const Matrix b = sample_vmf(params, 1000, std::uint64_t{5});
  CHECK(a == b);
  CHECK((a.colwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);

  struct Case {
    int d;
    double kappa;
  };
  std::mt19937_64 rng(6);
  const std::size_t n = 100000;
  for (const Case& c : {Case{3, 0.5}, Case{3, 50.0}, Case{4, 2.5}, Case{6, 1.0}, Case{6, 30.0}}) {
    CAPTURE(c.d);
    CAPTURE(c.kappa);
    const Vector nu = random_normal_vector(c.d, rng).normalized();
    const Vector u = orthonormal_complement(nu).col(0);
    const Matrix x = sample_vmf({nu, c.kappa}, n, rng);
    const SphereMoments mom = marginal_moments(c.d, c.kappa);
    const Eigen::ArrayXd t = (nu.transpose() * x).transpose().array();
    const double se_t = std::sqrt((t - t.mean()).square().mean() / n);
    CHECK(std::abs(t.mean() - mom.A) <= 4 * se_t);
    const Eigen::ArrayXd s2 = (u.transpose() * x).transpose().array().square();
    const double se_s = std::sqrt((s2 - s2.mean()).square().mean() / n);
    CHECK(std::abs(s2.mean() - (1 - mom.m2) / (c.d - 1)) <= 4 * se_s);
  }
  for (int d : {3, 4, 7}) {
    const Vector nu = Vector::Unit(d, 0);
    const Eigen::ArrayXd t2 = (nu.transpose() * sample_vmf({nu, 1e-6}, n, rng)).transpose().array().square();
    CHECK(std::abs(t2.mean() - 1.0 / d) <= 4 * std::sqrt((t2 - t2.mean()).square().mean() / n));
  }
}

TEST_CASE("Lambert projection") {
  const Vector c = unit3(0.3, -0.4, 0.8);
  CHECK(lambert_project(c, c).norm() <= 1e-15);
  const Vector perp = orthonormal_complement(c).col(0);
  CHECK(std::abs(lambert_project(perp, c).norm() - std::sqrt(2.0)) <= 1e-12);
  CHECK_THROWS_AS(lambert_project(Vector(-c), c), ProjectionUndefined);
  CHECK_THROWS_AS(lambert_project(Vector::Unit(4, 0), Vector::Unit(4, 1)), InvalidInput);
  for (const Vector& pole : {unit3(0, 0, 1), unit3(0, 0, -1), c}) {
    const Matrix r = rotation_to_pole(pole);
    CHECK((r * pole - unit3(0, 0, 1)).norm() <= 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0));
  }
  std::mt19937_64 rng(7);
  const Matrix pts = sample_uniform_sphere(3, 100000, rng);
  int inside = 0;
  double roundtrip = 0.0;
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const Eigen::Vector2d xy = lambert_project(pts.col(k), c);
    if (xy.norm() <= 1.0) ++inside;
    if (k < 1000) roundtrip = std::max(roundtrip, (lambert_unproject(xy, c) - pts.col(k)).norm());
  }
  CHECK(std::abs(inside / 1e5 - std::numbers::pi / (4 * std::numbers::pi)) <= 0.01);
  CHECK(roundtrip <= 1e-12);
  // Latitude circle u^T x = c maps to radius sqrt(2(1 - c)).
  const Vector lat = 0.5816 * c + std::sqrt(1 - 0.5816 * 0.5816) * perp;
  CHECK(lambert_project(lat, c).norm() == doctest::Approx(std::sqrt(2 * (1 - 0.5816))).epsilon(1e-12));
}
