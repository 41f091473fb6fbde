#include "symvi/euclidean.hpp"

#include "symvi/divergence.hpp"
#include "symvi/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace symvi {

void LocScaleParams::validate() const {
  if (nu.size() == 0) throw InvalidInput("LocScaleParams: empty location");
  if (S.rows() != nu.size()) throw InvalidInput("LocScaleParams: scale/location dimension mismatch");
  if (!nu.allFinite()) throw InvalidInput("LocScaleParams: non-finite location");
  require_spd(S, "LocScaleParams");
}

LocScaleFamily gaussian_family(int d) {
  if (d < 1) throw InvalidInput("gaussian_family: d must be positive");
  return {gaussian_density(Vector::Zero(d), Matrix::Identity(d, d)), d};
}

Density member_density(const LocScaleFamily& family, const LocScaleParams& params) {
  params.validate();
  if (params.dim() != family.dim || family.base.dim() != family.dim) {
    throw InvalidInput("member_density: dimension mismatch");
  }
  const Matrix root = sym_sqrt(params.S);
  const Matrix inv_root = sym_inv_sqrt(params.S);
  const double half_log_det = 0.5 * log_det_spd(params.S);
  const Density base = family.base;
  const Vector nu = params.nu;
  auto fn = [base, inv_root, nu, half_log_det](const Matrix& x) -> Vector {
    const Matrix z = inv_root * (x.colwise() - nu);
    return (base.log_density(z).array() - half_log_det).matrix();
  };
  const Extent& e = base.extent();
  Extent extent{nu + root * e.center, root * e.covariance * root, e.tails};
  return Density(family.dim, fn, SupportKind::FullSpace, ReferenceMeasure::Lebesgue, extent);
}

LocScaleParams pushforward_params(const LocScaleParams& params, const AffineMap& map) {
  if (map.dim() != params.dim()) throw InvalidInput("pushforward_params: dimension mismatch");
  const Matrix& a = map.linear();
  Matrix s = a * params.S * a.transpose();
  return {map.apply(params.nu), 0.5 * (s + s.transpose())};
}

AffineMap ellipsoid_symmetry(const Vector& m, const Matrix& M, const Matrix& R) {
  require_spd(M, "ellipsoid_symmetry");
  if (R.rows() != m.size() || R.cols() != m.size() || M.rows() != m.size()) {
    throw InvalidInput("ellipsoid_symmetry: dimension mismatch");
  }
  if ((R * R.transpose() - Matrix::Identity(R.rows(), R.rows())).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidInput("ellipsoid_symmetry: R must be orthogonal");
  }
  const Matrix a = sym_sqrt(M) * R * sym_inv_sqrt(M);
  return AffineMap(a, m - a * m);
}

namespace {

void require_euclidean(const Density& p, const char* what) {
  if (p.support() == SupportKind::UnitSphere) throw InvalidInput(std::string(what) + ": Euclidean densities only");
}

// Normalized quadrature masses at the grid nodes.
Vector normalized_masses(const Density& p, const Grid& grid) {
  const Vector lp = p.log_density(grid.points);
  Vector mass(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) mass[k] = grid.weights[k] * std::exp(lp[k]);
  const double total = pairwise_sum(mass);
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidInput("statistic: density has no mass on the grid");
  return mass / total;
}

double weighted_sum(const Vector& mass, const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  Vector terms = mass.cwiseProduct(values.transpose());
  return pairwise_sum(terms);
}

}  // namespace

Vector mean(const Density& p, const QuadratureSpec& quad) {
  require_euclidean(p, "mean");
  const Grid grid = make_grid(quad, p);
  const Vector mass = normalized_masses(p, grid);
  Vector mu(p.dim());
  for (int i = 0; i < p.dim(); ++i) mu[i] = weighted_sum(mass, grid.points.row(i));
  return mu;
}

Vector mean(const Density& p) { return mean(p, default_quadrature(p)); }

Matrix covariance(const Density& p, const QuadratureSpec& quad) {
  require_euclidean(p, "covariance");
  const Grid grid = make_grid(quad, p);
  const Vector mass = normalized_masses(p, grid);
  const int d = p.dim();
  Vector mu(d);
  for (int i = 0; i < d; ++i) mu[i] = weighted_sum(mass, grid.points.row(i));
  const Matrix centered = grid.points.colwise() - mu;
  Matrix sigma(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Eigen::RowVectorXd prod = centered.row(i).cwiseProduct(centered.row(j));
      sigma(i, j) = sigma(j, i) = weighted_sum(mass, prod);
    }
  }
  return sigma;
}

Matrix covariance(const Density& p) { return covariance(p, default_quadrature(p)); }

Matrix correlation_from_covariance(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw InvalidInput("correlation: covariance must be square");
  const Eigen::Index d = sigma.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(sigma(i, i) > 1e-12)) throw DegenerateStatistic("correlation: marginal variance below 1e-12");
  }
  const Vector inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
  Matrix rho = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  for (Eigen::Index i = 0; i < d; ++i) {
    rho(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::clamp(0.5 * (rho(i, j) + rho(j, i)), -1.0, 1.0);
      rho(i, j) = rho(j, i) = v;
    }
  }
  return rho;
}

Matrix correlation(const Density& p, const QuadratureSpec& quad) {
  return correlation_from_covariance(covariance(p, quad));
}

Matrix correlation(const Density& p) { return correlation(p, default_quadrature(p)); }

Density make_even_target(const Vector& m, const std::vector<MixtureComponent>& components) {
  const auto d = m.size();
  if (d == 0 || components.empty()) throw InvalidInput("make_even_target: empty center or mixture");
  double total_weight = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != d || c.covariance.rows() != d) throw InvalidInput("make_even_target: dimension mismatch");
    require_spd(c.covariance, "make_even_target");
    if (!(c.weight > 0.0)) throw InvalidInput("make_even_target: weights must be positive");
    total_weight += c.weight;
  }
  // Every component needs a reflected partner 2m - mean with equal covariance and weight.
  const double tol = 1e-12;
  for (const auto& c : components) {
    const Vector partner = 2.0 * m - c.mean;
    bool found = false;
    for (const auto& other : components) {
      if ((other.mean - partner).cwiseAbs().maxCoeff() <= tol * (1.0 + partner.cwiseAbs().maxCoeff()) &&
          (other.covariance - c.covariance).cwiseAbs().maxCoeff() <= tol &&
          std::abs(other.weight - c.weight) <= tol * c.weight) {
        found = true;
        break;
      }
    }
    if (!found) throw InvalidInput("make_even_target: component without a reflected partner");
  }
  std::vector<Density> parts;
  std::vector<double> log_w;
  Vector mix_mean = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  for (const auto& c : components) {
    parts.push_back(gaussian_density(c.mean, c.covariance));
    const double w = c.weight / total_weight;
    log_w.push_back(std::log(w));
    mix_mean += w * c.mean;
    second += w * (c.covariance + c.mean * c.mean.transpose());
  }
  auto fn = [parts, log_w](const Matrix& x) -> Vector {
    Matrix terms(static_cast<Eigen::Index>(parts.size()), x.cols());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      terms.row(static_cast<Eigen::Index>(i)) = (parts[i].log_density(x).array() + log_w[i]).matrix().transpose();
    }
    Vector out(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) out[k] = log_sum_exp(terms.col(k));
    return out;
  };
  Extent extent{mix_mean, second - mix_mean * mix_mean.transpose()};
  return Density(static_cast<int>(d), fn, SupportKind::FullSpace, ReferenceMeasure::Lebesgue, extent);
}

RadialProfile gaussian_profile() {
  return {"gaussian", [](double r2) { return -0.5 * r2; }, TailKind::Light};
}

RadialProfile student_profile(double dof, int d) {
  if (!(dof > 0.0) || d < 1) throw InvalidInput("student_profile: dof and d must be positive");
  const double expo = -0.5 * (dof + d);
  return {"student-" + std::to_string(dof),
          [dof, expo](double r2) { return expo * std::log1p(r2 / dof); },
          TailKind::Heavy};
}

namespace {

struct RadialMoments {
  double log_normalizer;   // log int_{R^d} g(|z|^2) dz
  double mean_sq_radius;   // E|Z|^2, +inf when not finite
};

// Integrals over r in [0, inf) with r = u/(1-u), u in (0,1), by Gauss-Legendre.
RadialMoments radial_moments(const RadialProfile& profile, int d) {
  const auto& rule = gauss_legendre(400);
  Vector log_terms(400), log_terms2(400);
  for (int i = 0; i < 400; ++i) {
    const double u = 0.5 * (rule.nodes[i] + 1.0);
    const double r = u / (1.0 - u);
    const double log_jac = std::log(0.5 * rule.weights[i]) - 2.0 * std::log1p(-u);
    const double base = profile.log_g(r * r) + (d - 1) * std::log(r) + log_jac;
    log_terms[i] = base;
    log_terms2[i] = base + 2.0 * std::log(r);
  }
  // Surface area of S^{d-1}.
  const double log_area = std::log(2.0) + 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d);
  // Non-normalizable when the integrand r^d g(r^2) has not decayed far out.
  const double far = 1e8;
  const double tail = profile.log_g(far * far) + d * std::log(far);
  const double log_radial = log_sum_exp(log_terms);
  if (!std::isfinite(log_radial) || tail > log_radial + std::log(1e-6)) {
    throw InvalidInput("make_elliptical_target: radial profile is not normalizable");
  }
  const double tail2 = tail + 2.0 * std::log(far);
  const double mean_sq = tail2 > log_radial + std::log(1e-6) ? kInf : std::exp(log_sum_exp(log_terms2) - log_radial);
  return {log_area + log_radial, mean_sq};
}

}  // namespace

Density make_elliptical_target(const EllipticalTargetSpec& spec) {
  require_spd(spec.M, "make_elliptical_target");
  if (spec.M.rows() != spec.m.size()) throw InvalidInput("make_elliptical_target: dimension mismatch");
  if (!spec.radial_profile.log_g) throw InvalidInput("make_elliptical_target: missing radial profile");
  const int d = static_cast<int>(spec.m.size());
  const RadialMoments moments = radial_moments(spec.radial_profile, d);
  const Matrix inv_root = sym_inv_sqrt(spec.M);
  const double log_norm = moments.log_normalizer + 0.5 * log_det_spd(spec.M);
  const auto log_g = spec.radial_profile.log_g;
  const Vector m = spec.m;
  auto fn = [log_g, inv_root, m, log_norm](const Matrix& x) -> Vector {
    const Vector r2 = (inv_root * (x.colwise() - m)).colwise().squaredNorm().transpose();
    Vector out(r2.size());
    for (Eigen::Index k = 0; k < r2.size(); ++k) out[k] = log_g(r2[k]) - log_norm;
    return out;
  };
  const double per_axis = std::isfinite(moments.mean_sq_radius) ? moments.mean_sq_radius / d : 1.0;
  Extent extent{m, per_axis * spec.M, spec.radial_profile.tails};
  return Density(d, fn, SupportKind::FullSpace, ReferenceMeasure::Lebesgue, extent);
}

Vector canonical_center() { return Vector::Constant(2, 1.0); }

Matrix canonical_shape() {
  Matrix M(2, 2);
  M << 2.0, 0.8, 0.8, 1.0;
  return M;
}

std::vector<MixtureComponent> canonical_even_components() {
  const Vector m = canonical_center();
  Vector offset(2);
  offset << 1.0, 0.5;
  Matrix c(2, 2);
  c << 0.9, 0.3, 0.3, 0.6;
  return {{m + offset, c, 0.5}, {m - offset, c, 0.5}};
}

Density canonical_even_target() {
  return make_even_target(canonical_center(), canonical_even_components());
}

EllipticalTargetSpec canonical_elliptical_spec() {
  return {canonical_center(), canonical_shape(), student_profile(5.0, 2)};
}

Density canonical_elliptical_target() { return make_elliptical_target(canonical_elliptical_spec()); }

double check_invariance(const Density& p, const std::vector<AffineMap>& maps, int n_points, std::uint64_t seed) {
  require_euclidean(p, "check_invariance");
  if (n_points < 1) throw InvalidInput("check_invariance: n_points must be positive");
  std::mt19937_64 rng(seed);
  const Extent& e = p.extent();
  Matrix cov = e.covariance;
  if (!(cov.diagonal().array() > 0.0).all()) cov = Matrix::Identity(p.dim(), p.dim());
  const Matrix root = sym_sqrt(cov);
  Matrix x(p.dim(), n_points);
  for (int k = 0; k < n_points; ++k) x.col(k) = e.center + root * random_normal_vector(p.dim(), rng);
  const Vector lp = p.log_density(x);
  double gap = 0.0;
  for (const auto& map : maps) {
    if (map.dim() != p.dim()) throw InvalidInput("check_invariance: map dimension mismatch");
    const Vector lpre = p.log_density(map.apply_inverse_columns(x));
    for (int k = 0; k < n_points; ++k) {
      const double moved = lpre[k] - map.log_abs_det();
      if (lp[k] == -kInf && moved == -kInf) continue;
      gap = std::max(gap, std::abs(lp[k] - moved));
    }
  }
  return gap;
}

FixedSetCheck fixed_set_checks(const Matrix& sigma_hat, const Matrix& M) {
  require_spd(M, "fixed_set_checks");
  if (sigma_hat.rows() != M.rows() || sigma_hat.cols() != M.cols()) {
    throw InvalidInput("fixed_set_checks: dimension mismatch");
  }
  const Matrix inv_root = sym_inv_sqrt(M);
  const Matrix w = inv_root * sigma_hat * inv_root;
  const double lambda_hat = w.trace() / static_cast<double>(M.rows());
  const double residual =
      (w - lambda_hat * Matrix::Identity(M.rows(), M.cols())).norm() / std::max(lambda_hat, 1e-12);
  return {lambda_hat, residual};
}

}  // namespace symvi
