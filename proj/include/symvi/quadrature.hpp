#pragma once

#include "symvi/linalg.hpp"

#include <optional>
#include <vector>

namespace symvi {

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  bool contains(const Vector& x) const;
};

enum class QuadratureScheme {
  /// Tensor Gauss-Legendre on a truncation box.
  TensorBox,
  /// Tensor Gauss-Legendre on (-1,1)^d pulled to R^d through
  /// x = center + scale * u / (1 - u^2); used for polynomially-tailed densities.
  TensorMapped,
  /// Gauss-Legendre rule for the polar marginal t = w^T x on S^{d-1}.
  SphereMarginal,
  /// Polar x azimuthal product grid on S^2.
  SphereProduct,
};

struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::TensorBox;
  int nodes_per_axis = 200;
  // TensorBox: derived from the densities when empty.
  std::optional<Box> truncation_box;
  // TensorMapped: derived from the densities when empty.
  std::optional<Vector> center;
  std::optional<Vector> scale;
  // SphereProduct.
  int azimuthal_nodes = 800;
  std::optional<Vector> pole;

  void validate() const;
};

/// Quadrature nodes (one column per node) and weights.
struct Grid {
  Matrix points;
  Vector weights;

  Eigen::Index size() const { return weights.size(); }
};

struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Rules are computed once per n and
/// cached; the returned reference stays valid for the program lifetime.
const GaussLegendreRule& gauss_legendre(int n);

Grid tensor_box_grid(const Box& box, int nodes_per_axis);
Grid tensor_mapped_grid(const Vector& center, const Vector& scale, int nodes_per_axis);

/// Product grid on S^2 whose weights sum to one (integrates against the
/// uniform probability measure).
Grid sphere_product_grid(int polar_nodes, int azimuthal_nodes, const Vector& pole);

/// Nodes t_k in (-1,1) and weights summing to one such that
/// sum_k w_k g(t_k) approximates E[g(w^T Y)] for Y uniform on S^{d-1}.
struct MarginalRule {
  Vector t;
  Vector w;
};
const MarginalRule& sphere_marginal_rule(int d, int nodes);

/// Image of a grid under x -> b + A x; weights pick up |det A|.
Grid transform_grid(const Grid& grid, const Matrix& a, const Vector& b);

/// Fixed-order pairwise summation; results do not depend on thread count.
double pairwise_sum(const double* values, std::size_t n);
inline double pairwise_sum(const Vector& v) { return pairwise_sum(v.data(), static_cast<std::size_t>(v.size())); }

/// Orthonormal basis of the orthogonal complement of a unit vector, as the
/// columns of a d x (d-1) matrix.
Matrix orthonormal_complement(const Vector& unit);

}  // namespace symvi
