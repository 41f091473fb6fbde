#include "symvi/quadrature.hpp"

#include "symvi/errors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>

namespace symvi {

double Box::volume() const {
  return (upper - lower).prod();
}

bool Box::contains(const Vector& x) const {
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

void QuadratureSpec::validate() const {
  if (nodes_per_axis < 2) throw InvalidInput("quadrature: nodes_per_axis must be >= 2");
  if (truncation_box) {
    const Box& b = *truncation_box;
    if (b.lower.size() != b.upper.size() || b.lower.size() == 0) {
      throw InvalidInput("quadrature: truncation box bounds have mismatched sizes");
    }
    if (!((b.upper - b.lower).array() > 0.0).all()) {
      throw InvalidInput("quadrature: truncation box must have positive volume");
    }
  }
  if (scale && !(scale->array() > 0.0).all()) {
    throw InvalidInput("quadrature: mapped scale must be positive");
  }
  if (scheme == QuadratureScheme::SphereProduct && azimuthal_nodes < 2) {
    throw InvalidInput("quadrature: azimuthal_nodes must be >= 2");
  }
}

namespace {

GaussLegendreRule compute_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / pp;
      if (std::abs(z - z_prev) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p1 = 1.0;
    double p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Cartesian product of per-axis 1D rules.
Grid tensor_product(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& w) {
  const int d = static_cast<int>(x.size());
  Eigen::Index total = 1;
  for (const auto& axis : x) {
    total *= static_cast<Eigen::Index>(axis.size());
    if (total > 50'000'000) throw InvalidInput("quadrature: tensor grid exceeds 5e7 nodes");
  }
  Grid grid{Matrix(d, total), Vector(total)};
  std::vector<std::size_t> idx(d, 0);
  for (Eigen::Index k = 0; k < total; ++k) {
    double weight = 1.0;
    for (int a = 0; a < d; ++a) {
      grid.points(a, k) = x[a][idx[a]];
      weight *= w[a][idx[a]];
    }
    grid.weights[k] = weight;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < x[a].size()) break;
      idx[a] = 0;
    }
  }
  return grid;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(compute_gauss_legendre(n));
  return *slot;
}

Grid tensor_box_grid(const Box& box, int nodes_per_axis) {
  const auto& rule = gauss_legendre(nodes_per_axis);
  const int d = box.dim();
  std::vector<std::vector<double>> x(d), w(d);
  for (int a = 0; a < d; ++a) {
    const double mid = 0.5 * (box.upper[a] + box.lower[a]);
    const double half = 0.5 * (box.upper[a] - box.lower[a]);
    for (int i = 0; i < nodes_per_axis; ++i) {
      x[a].push_back(mid + half * rule.nodes[i]);
      w[a].push_back(half * rule.weights[i]);
    }
  }
  return tensor_product(x, w);
}

Grid tensor_mapped_grid(const Vector& center, const Vector& scale, int nodes_per_axis) {
  const auto& rule = gauss_legendre(nodes_per_axis);
  const int d = static_cast<int>(center.size());
  std::vector<std::vector<double>> x(d), w(d);
  for (int a = 0; a < d; ++a) {
    for (int i = 0; i < nodes_per_axis; ++i) {
      const double u = rule.nodes[i];
      const double one_minus = 1.0 - u * u;
      x[a].push_back(center[a] + scale[a] * u / one_minus);
      w[a].push_back(rule.weights[i] * scale[a] * (1.0 + u * u) / (one_minus * one_minus));
    }
  }
  return tensor_product(x, w);
}

Matrix orthonormal_complement(const Vector& unit) {
  const int d = static_cast<int>(unit.size());
  // Householder reflection mapping e_k to unit; its other columns span unit^perp.
  Eigen::Index k = 0;
  unit.cwiseAbs().maxCoeff(&k);
  Vector v = unit;
  v[k] -= (unit[k] >= 0.0 ? 1.0 : -1.0);
  Matrix h = Matrix::Identity(d, d);
  const double vv = v.squaredNorm();
  if (vv > 0.0) h -= 2.0 * v * v.transpose() / vv;
  Matrix basis(d, d - 1);
  int col = 0;
  for (int j = 0; j < d; ++j) {
    if (j == k) continue;
    basis.col(col++) = h.col(j);
  }
  return basis;
}

Grid sphere_product_grid(int polar_nodes, int azimuthal_nodes, const Vector& pole) {
  if (pole.size() != 3) throw InvalidInput("sphere_product_grid: only S^2 is supported");
  const Vector axis = pole.normalized();
  const Matrix frame = orthonormal_complement(axis);
  const auto& rule = gauss_legendre(polar_nodes);
  const Eigen::Index total = static_cast<Eigen::Index>(polar_nodes) * azimuthal_nodes;
  Grid grid{Matrix(3, total), Vector(total)};
  Eigen::Index k = 0;
  for (int i = 0; i < polar_nodes; ++i) {
    const double t = rule.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    const double w = 0.5 * rule.weights[i] / azimuthal_nodes;
    for (int j = 0; j < azimuthal_nodes; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / azimuthal_nodes;
      grid.points.col(k) = t * axis + s * (std::cos(phi) * frame.col(0) + std::sin(phi) * frame.col(1));
      grid.weights[k] = w;
      ++k;
    }
  }
  return grid;
}

const MarginalRule& sphere_marginal_rule(int d, int nodes) {
  if (d < 2) throw InvalidInput("sphere_marginal_rule: d must be >= 2");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<MarginalRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{d, nodes}];
  if (!slot) {
    // t = cos(theta): the weight (1-t^2)^{(d-3)/2} dt becomes sin^{d-2}(theta) dtheta,
    // which is smooth on [0, pi] for every d.
    const auto& rule = gauss_legendre(nodes);
    auto r = std::make_unique<MarginalRule>();
    r->t.resize(nodes);
    r->w.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
      const double theta = 0.5 * std::numbers::pi * (rule.nodes[i] + 1.0);
      r->t[i] = std::cos(theta);
      r->w[i] = rule.weights[i] * std::pow(std::sin(theta), d - 2);
    }
    r->w /= pairwise_sum(r->w);
    slot = std::move(r);
  }
  return *slot;
}

Grid transform_grid(const Grid& grid, const Matrix& a, const Vector& b) {
  Grid out;
  out.points = (a * grid.points).colwise() + b;
  out.weights = grid.weights * std::abs(a.determinant());
  return out;
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

}  // namespace symvi
