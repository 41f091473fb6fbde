#pragma once

#include "symvi/density.hpp"
#include "symvi/divergence.hpp"

#include <cstdint>
#include <random>

namespace symvi {

/// von Mises-Fisher member: density c_d(kappa) exp(kappa nu^T x) with respect
/// to the uniform probability measure on S^{d-1}.
struct VmfParams {
  Vector nu;
  double kappa = 1.0;

  int dim() const { return static_cast<int>(nu.size()); }
  void validate() const;
};

/// Rotationally symmetric target with axial profile
/// psi(t) = exp(lambda t - eta t^2) / Z, t = u^T x.
struct AxialTarget {
  Vector u;
  double lambda = 1.0;
  double eta = 1.0;

  int dim() const { return static_cast<int>(u.size()); }
  void validate() const;
};

/// Moments of T = nu^T X under X ~ vMF(nu, kappa0):
/// A = E[T], m2 = E[T^2], B = (d m2 - 1)/(d - 1).
struct SphereMoments {
  double A = 0.0;
  double m2 = 0.0;
  double B = 0.0;
};

/// A line through the origin, stored by a unit direction whose first
/// coordinate with magnitude above 1e-9 is positive.
class Line {
 public:
  explicit Line(const Vector& v);
  const Vector& direction() const { return direction_; }
  /// Chordal distance min(|a - b|, |a + b|) between unit representatives.
  double distance(const Line& other) const;
  bool operator==(const Line& other) const { return direction_ == other.direction_; }

 private:
  Vector direction_;
};

/// Rule size used for every one-dimensional sphere normalizer.
inline constexpr int kSphereMarginalNodes = 500;

/// log E[exp(h(T0))] for T0 = w^T Y, Y uniform on S^{d-1}.
double log_marginal_expectation(int d, const std::function<double(double)>& h);

/// log c_d(kappa) = -log E[exp(kappa T0)].
double log_vmf_normalizer(int d, double kappa);
double vmf_log_density(const VmfParams& params, const Vector& x);
Density vmf_density(const VmfParams& params);

/// log Z_{lambda,eta} = log E[exp(lambda T0 - eta T0^2)].
double axial_log_normalizer(const AxialTarget& target);
double axial_log_density(const AxialTarget& target, const Vector& x);
Density axial_density(const AxialTarget& target);

SphereMoments marginal_moments(int d, double kappa0);

/// Closed-form D_KL(Q_{nu,kappa0} || P_{lambda,eta}) =
/// eta B c^2 - lambda A c + C with c = u^T nu.
double reverse_kl_objective(const Vector& nu, const AxialTarget& target, double kappa0);
/// The nu-independent constant C.
double reverse_kl_constant(const AxialTarget& target, double kappa0);
/// eta B c^2 - lambda A c.
double reduced_objective(double c, int d, double lambda, double eta, double kappa0);

/// |lambda| A / (2 B).
double eta_critical(int d, double lambda, double kappa0);
/// clamp(lambda A / (2 eta B), -1, 1).
double predicted_minimizer_c(int d, double lambda, double eta, double kappa0);

Line axis_statistic(const VmfParams& params);
Line axis_statistic(const AxialTarget& target);

Matrix sample_uniform_sphere(int d, std::size_t n, std::mt19937_64& rng);
/// Rejection sampling of the polar marginal under a piecewise-exponential
/// envelope, then a uniform tangential direction.
Matrix sample_vmf(const VmfParams& params, std::size_t n, std::mt19937_64& rng);
Matrix sample_vmf(const VmfParams& params, std::size_t n, std::uint64_t seed);
Sampler vmf_sampler(const VmfParams& params);

/// Rotation R in SO(3) with R center = e_3.
Matrix rotation_to_pole(const Vector& center);
/// Lambert azimuthal equal-area projection centered at `center` (S^2 only).
Eigen::Vector2d lambert_project(const Vector& x, const Vector& center);
/// Inverse of lambert_project on the closed disk of radius 2.
Vector lambert_unproject(const Eigen::Vector2d& xy, const Vector& center);

}  // namespace symvi
