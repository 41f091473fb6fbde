#include "symvi/sphere.hpp"

#include "symvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace symvi {

namespace {

void require_unit(const Vector& x, double tol, const char* what) {
  if (!x.allFinite() || std::abs(x.norm() - 1.0) > tol) {
    throw InvalidInput(std::string(what) + ": vector must have unit norm");
  }
}

void require_sphere_dim(int d, const char* what) {
  if (d < 3) throw InvalidInput(std::string(what) + ": sphere dimension d must be >= 3");
}

}  // namespace

void VmfParams::validate() const {
  require_sphere_dim(dim(), "VmfParams");
  require_unit(nu, 1e-12, "VmfParams");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidInput("VmfParams: kappa must be positive");
}

void AxialTarget::validate() const {
  require_sphere_dim(dim(), "AxialTarget");
  require_unit(u, 1e-12, "AxialTarget");
  if (lambda == 0.0 || !std::isfinite(lambda)) throw InvalidInput("AxialTarget: lambda must be nonzero");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("AxialTarget: eta must be positive");
}

Line::Line(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("Line: direction must be nonzero");
  direction_ = v / n;
  for (Eigen::Index i = 0; i < direction_.size(); ++i) {
    if (std::abs(direction_[i]) > 1e-9) {
      if (direction_[i] < 0.0) direction_ = -direction_;
      break;
    }
  }
}

double Line::distance(const Line& other) const {
  if (other.direction_.size() != direction_.size()) throw InvalidInput("Line: dimension mismatch");
  return std::min((direction_ - other.direction_).norm(), (direction_ + other.direction_).norm());
}

double log_marginal_expectation(int d, const std::function<double(double)>& h) {
  const MarginalRule& rule = sphere_marginal_rule(d, kSphereMarginalNodes);
  Vector terms(rule.t.size());
  for (Eigen::Index k = 0; k < terms.size(); ++k) terms[k] = std::log(rule.w[k]) + h(rule.t[k]);
  return log_sum_exp(terms);
}

double log_vmf_normalizer(int d, double kappa) {
  require_sphere_dim(d, "log_vmf_normalizer");
  if (!(kappa > 0.0)) throw InvalidInput("log_vmf_normalizer: kappa must be positive");
  return -log_marginal_expectation(d, [kappa](double t) { return kappa * t; });
}

double vmf_log_density(const VmfParams& params, const Vector& x) {
  params.validate();
  if (x.size() != params.nu.size()) throw InvalidInput("vmf_log_density: dimension mismatch");
  require_unit(x, 1e-9, "vmf_log_density");
  return log_vmf_normalizer(params.dim(), params.kappa) + params.kappa * params.nu.dot(x);
}

Density vmf_density(const VmfParams& params) {
  params.validate();
  const double log_c = log_vmf_normalizer(params.dim(), params.kappa);
  const Vector nu = params.nu;
  const double kappa = params.kappa;
  auto fn = [nu, kappa, log_c](const Matrix& x) -> Vector {
    return ((kappa * (nu.transpose() * x)).array() + log_c).matrix().transpose();
  };
  return Density(params.dim(), fn, SupportKind::UnitSphere, ReferenceMeasure::UniformSphere,
                 Extent{nu, Matrix::Zero(params.dim(), params.dim())});
}

double axial_log_normalizer(const AxialTarget& target) {
  target.validate();
  const double lambda = target.lambda;
  const double eta = target.eta;
  return log_marginal_expectation(target.dim(), [lambda, eta](double t) { return lambda * t - eta * t * t; });
}

double axial_log_density(const AxialTarget& target, const Vector& x) {
  if (x.size() != target.u.size()) throw InvalidInput("axial_log_density: dimension mismatch");
  require_unit(x, 1e-9, "axial_log_density");
  const double t = target.u.dot(x);
  return target.lambda * t - target.eta * t * t - axial_log_normalizer(target);
}

Density axial_density(const AxialTarget& target) {
  const double log_z = axial_log_normalizer(target);
  const Vector u = target.u;
  const double lambda = target.lambda;
  const double eta = target.eta;
  auto fn = [u, lambda, eta, log_z](const Matrix& x) -> Vector {
    const Eigen::ArrayXd t = (u.transpose() * x).transpose().array();
    return (lambda * t - eta * t.square() - log_z).matrix();
  };
  return Density(target.dim(), fn, SupportKind::UnitSphere, ReferenceMeasure::UniformSphere,
                 Extent{u, Matrix::Zero(target.dim(), target.dim())});
}

SphereMoments marginal_moments(int d, double kappa0) {
  require_sphere_dim(d, "marginal_moments");
  if (!(kappa0 > 0.0) || !std::isfinite(kappa0)) throw InvalidInput("marginal_moments: kappa0 must be positive");
  const MarginalRule& rule = sphere_marginal_rule(d, kSphereMarginalNodes);
  const Eigen::Index n = rule.t.size();
  // Shifted by exp(-kappa0) so large concentrations do not overflow.
  Vector w(n), wt(n), wt2(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = rule.t[k];
    w[k] = rule.w[k] * std::exp(kappa0 * (t - 1.0));
    wt[k] = w[k] * t;
    wt2[k] = wt[k] * t;
  }
  const double z = pairwise_sum(w);
  SphereMoments out;
  out.A = pairwise_sum(wt) / z;
  out.m2 = pairwise_sum(wt2) / z;
  out.B = (d * out.m2 - 1.0) / (d - 1.0);
  return out;
}

double reduced_objective(double c, int d, double lambda, double eta, double kappa0) {
  const SphereMoments mom = marginal_moments(d, kappa0);
  return eta * mom.B * c * c - lambda * mom.A * c;
}

double reverse_kl_constant(const AxialTarget& target, double kappa0) {
  target.validate();
  const int d = target.dim();
  const SphereMoments mom = marginal_moments(d, kappa0);
  return log_vmf_normalizer(d, kappa0) + axial_log_normalizer(target) + kappa0 * mom.A +
         target.eta * (1.0 - mom.m2) / (d - 1.0);
}

double reverse_kl_objective(const Vector& nu, const AxialTarget& target, double kappa0) {
  target.validate();
  if (nu.size() != target.u.size()) throw InvalidInput("reverse_kl_objective: dimension mismatch");
  require_unit(nu, 1e-9, "reverse_kl_objective");
  const int d = target.dim();
  const SphereMoments mom = marginal_moments(d, kappa0);
  const double c = std::clamp(target.u.dot(nu), -1.0, 1.0);
  return target.eta * mom.B * c * c - target.lambda * mom.A * c + reverse_kl_constant(target, kappa0);
}

double eta_critical(int d, double lambda, double kappa0) {
  if (lambda == 0.0) throw InvalidInput("eta_critical: lambda must be nonzero");
  const SphereMoments mom = marginal_moments(d, kappa0);
  return std::abs(lambda) * mom.A / (2.0 * mom.B);
}

double predicted_minimizer_c(int d, double lambda, double eta, double kappa0) {
  if (lambda == 0.0) throw InvalidInput("predicted_minimizer_c: lambda must be nonzero");
  if (!(eta > 0.0)) throw InvalidInput("predicted_minimizer_c: eta must be positive");
  const SphereMoments mom = marginal_moments(d, kappa0);
  return std::clamp(lambda * mom.A / (2.0 * eta * mom.B), -1.0, 1.0);
}

Line axis_statistic(const VmfParams& params) {
  params.validate();
  return Line(params.nu);
}

Line axis_statistic(const AxialTarget& target) {
  target.validate();
  return Line(target.u);
}

Matrix sample_uniform_sphere(int d, std::size_t n, std::mt19937_64& rng) {
  Matrix out(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    Vector z;
    do {
      z = random_normal_vector(d, rng);
    } while (z.norm() < 1e-12);
    out.col(k) = z / z.norm();
  }
  return out;
}

namespace {

// One linear piece of the log-envelope on [lo, hi]: h(t) = h0 + slope (t - t0).
struct EnvelopePiece {
  double lo, hi, t0, h0, slope, log_mass;
  double at(double t) const { return h0 + slope * (t - t0); }
};

double log_piece_mass(double ha, double hb, double slope, double width) {
  const double sl = slope * width;
  if (std::abs(sl) < 1e-12) return std::log(width) + 0.5 * (ha + hb);
  if (slope > 0.0) return hb + std::log(-std::expm1(-sl) / slope);
  return ha + std::log(-std::expm1(sl) / -slope);
}

// Inverse CDF of exp(slope t) restricted to [lo, hi].
double sample_piece(const EnvelopePiece& p, double u) {
  const double width = p.hi - p.lo;
  const double sl = p.slope * width;
  if (std::abs(sl) < 1e-12) return p.lo + u * width;
  if (p.slope > 0.0) return p.hi + std::log1p(-u * -std::expm1(-sl)) / p.slope;
  return p.lo + std::log1p(-u * -std::expm1(sl)) / p.slope;
}

// Tangent-line hull of the concave log-density kappa t + alpha log(1 - t^2).
std::vector<EnvelopePiece> build_envelope(double kappa, double alpha) {
  auto g = [&](double t) { return kappa * t + alpha * std::log1p(-t * t); };
  auto dg = [&](double t) { return kappa - 2.0 * alpha * t / (1.0 - t * t); };
  std::vector<EnvelopePiece> pieces;
  if (alpha == 0.0) {
    pieces.push_back({-1.0, 1.0, 0.0, 0.0, kappa, 0.0});
  } else {
    const double mode = kappa / (alpha + std::sqrt(alpha * alpha + kappa * kappa));
    const double curvature = 2.0 * alpha * (1.0 + mode * mode) / ((1.0 - mode * mode) * (1.0 - mode * mode));
    const double sd = 1.0 / std::sqrt(curvature);
    std::vector<double> points;
    for (double k : {-3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0}) {
      const double t = mode + k * sd;
      if (t > -1.0 + 1e-9 && t < 1.0 - 1e-9) points.push_back(t);
    }
    if (points.empty()) points.push_back(mode);
    double lo = -1.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double tj = points[j];
      double hi = 1.0;
      if (j + 1 < points.size()) {
        const double tk = points[j + 1];
        hi = (g(tk) - g(tj) - tk * dg(tk) + tj * dg(tj)) / (dg(tj) - dg(tk));
        hi = std::clamp(hi, lo, 1.0);
      }
      pieces.push_back({lo, hi, tj, g(tj), dg(tj), 0.0});
      lo = hi;
    }
  }
  for (auto& p : pieces) {
    p.log_mass = p.hi > p.lo ? log_piece_mass(p.at(p.lo), p.at(p.hi), p.slope, p.hi - p.lo) : -kInf;
  }
  return pieces;
}

}  // namespace

Matrix sample_vmf(const VmfParams& params, std::size_t n, std::mt19937_64& rng) {
  params.validate();
  const int d = params.dim();
  const double alpha = 0.5 * (d - 3);
  const auto pieces = build_envelope(params.kappa, alpha);
  Vector log_masses(static_cast<Eigen::Index>(pieces.size()));
  for (std::size_t j = 0; j < pieces.size(); ++j) log_masses[static_cast<Eigen::Index>(j)] = pieces[j].log_mass;
  const double log_total = log_sum_exp(log_masses);
  std::vector<double> cumulative;
  double acc = 0.0;
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    acc += std::exp(pieces[j].log_mass - log_total);
    cumulative.push_back(acc);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> n01;
  const Vector& nu = params.nu;
  Matrix out(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    double t = 0.0;
    while (true) {
      std::size_t j = 0;
      if (pieces.size() > 1) {
        const double v = unif(rng) * acc;
        while (j + 1 < pieces.size() && v > cumulative[j]) ++j;
      }
      t = sample_piece(pieces[j], unif(rng));
      if (alpha == 0.0) break;
      const double log_target = params.kappa * t + alpha * std::log1p(-t * t);
      if (std::log(unif(rng)) <= log_target - pieces[j].at(t)) break;
    }
    Vector z(d);
    double zn = 0.0;
    do {
      for (int i = 0; i < d; ++i) z[i] = n01(rng);
      z -= z.dot(nu) * nu;
      zn = z.norm();
    } while (zn < 1e-12);
    Vector x = t * nu + std::sqrt(std::max(0.0, 1.0 - t * t)) * (z / zn);
    out.col(k) = x / x.norm();
  }
  return out;
}

Matrix sample_vmf(const VmfParams& params, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_vmf(params, n, rng);
}

Sampler vmf_sampler(const VmfParams& params) {
  params.validate();
  return [params](std::size_t n, std::mt19937_64& rng) { return sample_vmf(params, n, rng); };
}

Matrix rotation_to_pole(const Vector& center) {
  if (center.size() != 3) throw InvalidInput("rotation_to_pole: center must lie in R^3");
  const Eigen::Vector3d c = Eigen::Vector3d(center).normalized();
  const Eigen::Vector3d e3 = Eigen::Vector3d::UnitZ();
  const double cos_angle = c.dot(e3);
  if (cos_angle < -1.0 + 1e-12) return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal().toDenseMatrix();
  const Eigen::Vector3d v = c.cross(e3);
  Eigen::Matrix3d vx;
  vx << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return Eigen::Matrix3d::Identity() + vx + vx * vx / (1.0 + cos_angle);
}

Eigen::Vector2d lambert_project(const Vector& x, const Vector& center) {
  if (x.size() != 3 || center.size() != 3) throw InvalidInput("lambert_project: points must lie on S^2");
  require_unit(x, 1e-9, "lambert_project");
  require_unit(center, 1e-9, "lambert_project");
  const Vector y = rotation_to_pole(center) * x;
  const double one_plus_z = 1.0 + std::clamp(y[2], -1.0, 1.0);
  if (one_plus_z <= 1e-14) throw ProjectionUndefined("lambert_project: point is antipodal to the center");
  const double factor = std::sqrt(2.0 / one_plus_z);
  return {factor * y[0], factor * y[1]};
}

Vector lambert_unproject(const Eigen::Vector2d& xy, const Vector& center) {
  const double r2 = xy.squaredNorm();
  if (r2 > 4.0 + 1e-12) throw InvalidInput("lambert_unproject: point outside the projection disk");
  const double s = std::sqrt(std::max(0.0, 1.0 - r2 / 4.0));
  Vector y(3);
  y << xy.x() * s, xy.y() * s, 1.0 - r2 / 2.0;
  return rotation_to_pole(center).transpose() * y;
}

}  // namespace symvi
