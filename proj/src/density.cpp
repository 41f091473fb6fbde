#include "symvi/density.hpp"

#include "symvi/errors.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace symvi {

Density::Density(int dim, BatchLogDensity log_density, SupportKind support, ReferenceMeasure reference,
                 Extent extent, std::optional<Box> support_box)
    : dim_(dim),
      log_density_(std::move(log_density)),
      support_(support),
      reference_(reference),
      extent_(std::move(extent)),
      support_box_(std::move(support_box)) {
  if (dim_ < 1) throw InvalidInput("Density: dim must be positive");
  if (!log_density_) throw InvalidInput("Density: missing log-density");
  if ((support_ == SupportKind::UnitSphere) != (reference_ == ReferenceMeasure::UniformSphere)) {
    throw InvalidInput("Density: sphere support requires the uniform sphere reference measure");
  }
  if (support_ == SupportKind::Box && !support_box_) {
    throw InvalidInput("Density: box support requires a support box");
  }
  if (extent_.center.size() != dim_) throw InvalidInput("Density: extent center has wrong size");
}

double Density::log_density(const Vector& x) const {
  if (x.size() != dim_) throw InvalidInput("Density: point has wrong dimension");
  Matrix m = x;
  return log_density_(m)[0];
}

Vector Density::log_density(const Matrix& points) const {
  if (points.rows() != dim_) throw InvalidInput("Density: points have wrong dimension");
  return log_density_(points);
}

AffineMap::AffineMap(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size() || b_.size() == 0) {
    throw InvalidInput("AffineMap: A must be square and match b");
  }
  Eigen::PartialPivLU<Matrix> lu(a_);
  const double det = lu.determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) throw InvalidInput("AffineMap: singular linear part");
  a_inv_ = lu.inverse();
  log_abs_det_ = std::log(std::abs(det));
}

AffineMap AffineMap::identity(int d) {
  return AffineMap(Matrix::Identity(d, d), Vector::Zero(d));
}

AffineMap AffineMap::reflection(const Vector& m) {
  const auto d = m.size();
  return AffineMap(-Matrix::Identity(d, d), 2.0 * m);
}

AffineMap AffineMap::inverse() const {
  return AffineMap(a_inv_, -a_inv_ * b_);
}

bool same_setting(const Density& p, const Density& q) {
  return p.dim() == q.dim() && p.reference() == q.reference() &&
         ((p.support() == SupportKind::UnitSphere) == (q.support() == SupportKind::UnitSphere));
}

Density gaussian_density(const Vector& mean, const Matrix& covariance) {
  require_spd(covariance, "gaussian_density");
  if (covariance.rows() != mean.size()) throw InvalidInput("gaussian_density: dimension mismatch");
  const int d = static_cast<int>(mean.size());
  Eigen::LLT<Matrix> llt(covariance);
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(d, d));
  const double log_norm =
      -0.5 * d * std::log(2.0 * std::numbers::pi) - llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  auto fn = [mean, l_inv, log_norm](const Matrix& x) -> Vector {
    const Matrix z = l_inv * (x.colwise() - mean);
    return (log_norm - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
  };
  return Density(d, fn, SupportKind::FullSpace, ReferenceMeasure::Lebesgue, Extent{mean, covariance});
}

Density uniform_box_density(const Box& box) {
  if (box.lower.size() != box.upper.size() || !((box.upper - box.lower).array() > 0.0).all()) {
    throw InvalidInput("uniform_box_density: box must have positive volume");
  }
  const int d = box.dim();
  const double log_value = -std::log(box.volume());
  auto fn = [box, log_value](const Matrix& x) -> Vector {
    Vector out(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      const bool inside =
          (x.col(k).array() >= box.lower.array()).all() && (x.col(k).array() <= box.upper.array()).all();
      out[k] = inside ? log_value : -kInf;
    }
    return out;
  };
  const Vector width = box.upper - box.lower;
  Extent extent{0.5 * (box.lower + box.upper), (width.array().square() / 12.0).matrix().asDiagonal()};
  return Density(d, fn, SupportKind::Box, ReferenceMeasure::Lebesgue, extent, box);
}

Density pushforward(const Density& p, const AffineMap& map) {
  if (p.support() == SupportKind::UnitSphere) throw InvalidInput("pushforward: Euclidean densities only");
  if (map.dim() != p.dim()) throw InvalidInput("pushforward: dimension mismatch");
  auto fn = [p, map](const Matrix& y) -> Vector {
    return (p.log_density(map.apply_inverse_columns(y)).array() - map.log_abs_det()).matrix();
  };
  const Extent& e = p.extent();
  Extent pushed{map.apply(e.center), map.linear() * e.covariance * map.linear().transpose(), e.tails};
  return Density(p.dim(), fn, SupportKind::FullSpace, ReferenceMeasure::Lebesgue, pushed);
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) return -kInf;
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace symvi
