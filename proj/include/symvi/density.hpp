#pragma once

#include "symvi/linalg.hpp"
#include "symvi/quadrature.hpp"

#include <functional>
#include <limits>
#include <optional>

namespace symvi {

/// Distinguished +infinity of the extended reals; propagates through sums.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SupportKind { FullSpace, Box, UnitSphere };
enum class ReferenceMeasure { Lebesgue, UniformSphere };
enum class TailKind { Light, Heavy };

/// Where a density keeps its mass: used to choose default quadrature.
/// For sphere densities only `center` (a preferred pole) is meaningful.
struct Extent {
  Vector center;
  Matrix covariance;
  TailKind tails = TailKind::Light;
};

/// Evaluates log-densities at the columns of a dim x N matrix. Zero density
/// is encoded as -infinity.
using BatchLogDensity = std::function<Vector(const Matrix&)>;

class Density {
 public:
  Density(int dim, BatchLogDensity log_density, SupportKind support, ReferenceMeasure reference,
          Extent extent, std::optional<Box> support_box = std::nullopt);

  int dim() const { return dim_; }
  SupportKind support() const { return support_; }
  ReferenceMeasure reference() const { return reference_; }
  const Extent& extent() const { return extent_; }
  const std::optional<Box>& support_box() const { return support_box_; }

  double log_density(const Vector& x) const;
  Vector log_density(const Matrix& points) const;

 private:
  int dim_;
  BatchLogDensity log_density_;
  SupportKind support_;
  ReferenceMeasure reference_;
  Extent extent_;
  std::optional<Box> support_box_;
};

/// x -> b + A x.
class AffineMap {
 public:
  AffineMap(Matrix a, Vector b);
  static AffineMap identity(int d);
  /// Point reflection r_m(x) = 2m - x.
  static AffineMap reflection(const Vector& m);

  int dim() const { return static_cast<int>(b_.size()); }
  const Matrix& linear() const { return a_; }
  const Vector& offset() const { return b_; }
  double log_abs_det() const { return log_abs_det_; }

  Vector apply(const Vector& x) const { return b_ + a_ * x; }
  Matrix apply_columns(const Matrix& x) const { return (a_ * x).colwise() + b_; }
  Vector apply_inverse(const Vector& y) const { return a_inv_ * (y - b_); }
  Matrix apply_inverse_columns(const Matrix& y) const { return a_inv_ * (y.colwise() - b_); }
  AffineMap inverse() const;

 private:
  Matrix a_;
  Matrix a_inv_;
  Vector b_;
  double log_abs_det_;
};

bool same_setting(const Density& p, const Density& q);

Density gaussian_density(const Vector& mean, const Matrix& covariance);
Density uniform_box_density(const Box& box);

/// Change of variables: log p~(y) = log p(T^{-1} y) - log|det A|.
Density pushforward(const Density& p, const AffineMap& map);

/// log(sum_i exp(v_i)) without overflow.
double log_sum_exp(const Vector& v);

}  // namespace symvi
