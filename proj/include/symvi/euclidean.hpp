#pragma once

#include "symvi/density.hpp"
#include "symvi/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace symvi {

/// (nu, S) indexing Q_{nu,S} = (x -> nu + S^{1/2} x)_# Q_0.
struct LocScaleParams {
  Vector nu;
  Matrix S;

  int dim() const { return static_cast<int>(nu.size()); }
  void validate() const;
};

struct LocScaleFamily {
  Density base;
  int dim;
};

/// Location-scale family generated by N(0, I_d).
LocScaleFamily gaussian_family(int d);

/// log q(x) = log q0(S^{-1/2}(x - nu)) - 1/2 log det S, symmetric root.
Density member_density(const LocScaleFamily& family, const LocScaleParams& params);

/// (nu', S') with map_# Q_{nu,S} = Q_{nu',S'}: nu' = b + A nu, S' = A S A^T.
LocScaleParams pushforward_params(const LocScaleParams& params, const AffineMap& map);

/// g_R(x) = m + A_R (x - m) with A_R = M^{1/2} R M^{-1/2}, for R orthogonal.
AffineMap ellipsoid_symmetry(const Vector& m, const Matrix& M, const Matrix& R);

Vector mean(const Density& p, const QuadratureSpec& quad);
Vector mean(const Density& p);
Matrix covariance(const Density& p, const QuadratureSpec& quad);
Matrix covariance(const Density& p);

/// D^{-1/2} Sigma D^{-1/2} with D = diag(Sigma); unit diagonal by construction.
/// Throws DegenerateStatistic when a marginal variance is below 1e-12.
Matrix correlation_from_covariance(const Matrix& sigma);
Matrix correlation(const Density& p, const QuadratureSpec& quad);
Matrix correlation(const Density& p);

struct MixtureComponent {
  Vector mean;
  Matrix covariance;
  double weight = 1.0;
};

/// Gaussian mixture that is even about m. Components must come in pairs
/// (m + a, C, w) / (m - a, C, w); a component centered at m pairs with itself.
Density make_even_target(const Vector& m, const std::vector<MixtureComponent>& components);

/// Density generator of an O(d)-invariant core: log g as a function of the
/// squared radius, unnormalized.
struct RadialProfile {
  std::string name;
  std::function<double(double)> log_g;
  TailKind tails = TailKind::Light;
};

RadialProfile gaussian_profile();
/// Multivariate Student-t generator (1 + r^2/dof)^{-(dof+d)/2}.
RadialProfile student_profile(double dof, int d);

struct EllipticalTargetSpec {
  Vector m;
  Matrix M;
  RadialProfile radial_profile;
};

/// log p(x) = log p0(M^{-1/2}(x - m)) - 1/2 log det M.
Density make_elliptical_target(const EllipticalTargetSpec& spec);

/// Figure-style defaults: even mixture about m = (1,1), and a Student-t(5)
/// core pushed through T_{m,M} with M = [[2, 0.8], [0.8, 1]].
Vector canonical_center();
Matrix canonical_shape();
std::vector<MixtureComponent> canonical_even_components();
Density canonical_even_target();
EllipticalTargetSpec canonical_elliptical_spec();
Density canonical_elliptical_target();

/// max over sampled x and maps of |log p(x) - (log p(T^{-1} x) - log|det A|)|.
/// Points are drawn from a Gaussian matched to the density's extent.
double check_invariance(const Density& p, const std::vector<AffineMap>& maps, int n_points, std::uint64_t seed);

struct FixedSetCheck {
  double lambda_hat = 0.0;
  double residual = 0.0;
};

/// Distance of Sigma_hat from the ray {lambda M}: lambda_hat = tr(W)/d and
/// residual = ||W - lambda_hat I||_F / max(lambda_hat, 1e-12), W = M^{-1/2} Sigma_hat M^{-1/2}.
FixedSetCheck fixed_set_checks(const Matrix& sigma_hat, const Matrix& M);

}  // namespace symvi
