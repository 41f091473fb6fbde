#include "symvi/divergence.hpp"

#include "symvi/errors.hpp"

#include <algorithm>
#include <cmath>

namespace symvi {

namespace {

inline double sq(double x) { return x * x; }

}  // namespace

DivergenceGenerator forward_kl() {
  return {"kl",
          [](double t) { return t * std::log(t); },
          0.0,
          kInf,
          [](double r) { return r * std::exp(r); },
          [](double r) { return -r; }};
}

DivergenceGenerator reverse_kl() {
  return {"reverse-kl",
          [](double t) { return -std::log(t); },
          kInf,
          0.0,
          [](double r) { return -r; },
          [](double r) { return r * std::exp(r); }};
}

DivergenceGenerator chi_squared() {
  return {"chi2",
          [](double t) { return sq(t - 1.0); },
          1.0,
          kInf,
          [](double r) { return sq(std::expm1(r)); },
          [](double r) { return sq(std::expm1(r)) * std::exp(-r); }};
}

DivergenceGenerator total_variation() {
  return {"tv",
          [](double t) { return 0.5 * std::abs(t - 1.0); },
          0.5,
          0.5,
          [](double r) { return 0.5 * std::abs(std::expm1(r)); },
          [](double r) { return 0.5 * std::abs(std::expm1(r)); }};
}

DivergenceGenerator squared_hellinger() {
  return {"hellinger",
          [](double t) { return sq(1.0 - std::sqrt(t)); },
          1.0,
          1.0,
          [](double r) { return sq(std::expm1(0.5 * r)); },
          [](double r) { return sq(std::expm1(0.5 * r)); }};
}

const std::vector<DivergenceGenerator>& builtin_generators() {
  static const std::vector<DivergenceGenerator> all{forward_kl(), reverse_kl(), chi_squared(), total_variation(),
                                                    squared_hellinger()};
  return all;
}

DivergenceGenerator generator_by_name(const std::string& name) {
  for (const auto& g : builtin_generators()) {
    if (g.name == name) return g;
  }
  throw InvalidInput("unknown divergence '" + name + "' (expected kl, reverse-kl, chi2, tv, hellinger)");
}

DivergenceGenerator dual(const DivergenceGenerator& g) {
  DivergenceGenerator out;
  out.name = "dual(" + g.name + ")";
  auto f = g.f;
  out.f = [f](double t) { return t * f(1.0 / t); };
  out.f_at_zero = g.f_prime_at_inf;
  out.f_prime_at_inf = g.f_at_zero;
  out.f_exp = g.dual_f_exp;
  out.dual_f_exp = g.f_exp;
  return out;
}

double eval_generator(const DivergenceGenerator& g, double t) {
  if (t == 0.0) return g.f_at_zero;
  return g.f(t);
}

double perspective(const DivergenceGenerator& g, double log_p, double log_q) {
  const double q = std::exp(log_q);
  if (log_p == -kInf) {
    if (q == 0.0) return 0.0;
    return q * g.f_at_zero;
  }
  const double r = log_p - log_q;
  if (r <= 0.0) {
    // q f(p/q)
    if (g.f_exp) return q * g.f_exp(r);
    return q * eval_generator(g, std::exp(r));
  }
  // p (q/p) f(p/q): the dual form keeps the ratio below one.
  const double p = std::exp(log_p);
  if (g.dual_f_exp) return p * g.dual_f_exp(-r);
  const double s = std::exp(-r);
  if (s == 0.0) return p * g.f_prime_at_inf;
  return p * s * g.f(1.0 / s);
}

QuadratureSpec default_quadrature(const Density& p, const Density* q) {
  if (q && !same_setting(p, *q)) throw InvalidInput("default_quadrature: densities live on different spaces");
  QuadratureSpec spec;
  if (p.support() == SupportKind::UnitSphere) {
    if (p.dim() != 3) throw InvalidInput("default_quadrature: sphere grids are only available on S^2");
    spec.scheme = QuadratureScheme::SphereProduct;
    spec.nodes_per_axis = 400;
    spec.azimuthal_nodes = 800;
    spec.pole = Vector::Unit(3, 2);
    return spec;
  }
  const int d = p.dim();
  spec.nodes_per_axis = d <= 2 ? 200 : (d == 3 ? 48 : 16);
  Vector lower = Vector::Constant(d, kInf);
  Vector upper = Vector::Constant(d, -kInf);
  bool heavy = false;
  for (const Density* dens : {&p, q}) {
    if (!dens) continue;
    const Extent& e = dens->extent();
    const Vector sd = e.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    lower = lower.cwiseMin(e.center - 8.0 * sd);
    upper = upper.cwiseMax(e.center + 8.0 * sd);
    heavy = heavy || e.tails == TailKind::Heavy;
  }
  if (heavy) {
    spec.scheme = QuadratureScheme::TensorMapped;
    spec.center = 0.5 * (lower + upper);
    spec.scale = (upper - lower) / 16.0;
  } else {
    spec.scheme = QuadratureScheme::TensorBox;
    spec.truncation_box = Box{lower, upper};
  }
  return spec;
}

Grid make_grid(const QuadratureSpec& quad, const Density& p, const Density* q) {
  quad.validate();
  if (q && !same_setting(p, *q)) throw InvalidInput("quadrature: dimension/support mismatch between P and Q");
  const bool sphere = p.support() == SupportKind::UnitSphere;
  switch (quad.scheme) {
    case QuadratureScheme::TensorBox: {
      if (sphere) throw InvalidInput("quadrature: box rule does not match sphere support");
      Box box = quad.truncation_box ? *quad.truncation_box : *default_quadrature(p, q).truncation_box;
      if (box.dim() != p.dim()) throw InvalidInput("quadrature: truncation box has wrong dimension");
      return tensor_box_grid(box, quad.nodes_per_axis);
    }
    case QuadratureScheme::TensorMapped: {
      if (sphere) throw InvalidInput("quadrature: mapped rule does not match sphere support");
      Vector center;
      Vector scale;
      if (quad.center && quad.scale) {
        center = *quad.center;
        scale = *quad.scale;
      } else {
        QuadratureSpec def = default_quadrature(p, q);
        if (def.scheme == QuadratureScheme::TensorMapped) {
          center = *def.center;
          scale = *def.scale;
        } else {
          center = 0.5 * (def.truncation_box->lower + def.truncation_box->upper);
          scale = (def.truncation_box->upper - def.truncation_box->lower) / 16.0;
        }
      }
      if (center.size() != p.dim() || scale.size() != p.dim()) {
        throw InvalidInput("quadrature: mapped center/scale have wrong dimension");
      }
      return tensor_mapped_grid(center, scale, quad.nodes_per_axis);
    }
    case QuadratureScheme::SphereProduct: {
      if (!sphere || p.dim() != 3) throw InvalidInput("quadrature: product grid requires densities on S^2");
      const Vector pole = quad.pole ? *quad.pole : Vector::Unit(3, 2);
      if (pole.size() != 3) throw InvalidInput("quadrature: pole must lie in R^3");
      return sphere_product_grid(quad.nodes_per_axis, quad.azimuthal_nodes, pole);
    }
    case QuadratureScheme::SphereMarginal:
      throw InvalidInput("quadrature: the polar marginal rule only integrates zonal functions");
  }
  throw InvalidInput("quadrature: unknown scheme");
}

double divergence_on_grid(const DivergenceGenerator& g, const Vector& log_p, const Vector& log_q,
                          const Vector& weights) {
  const Eigen::Index n = weights.size();
  if (log_p.size() != n || log_q.size() != n) throw InvalidInput("divergence: grid size mismatch");
  Vector mass_p(n), mass_q(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    mass_p[k] = weights[k] * std::exp(log_p[k]);
    mass_q[k] = weights[k] * std::exp(log_q[k]);
  }
  const double zp = pairwise_sum(mass_p);
  const double zq = pairwise_sum(mass_q);
  if (!(zp > 0.0) || !(zq > 0.0) || !std::isfinite(zp) || !std::isfinite(zq)) {
    throw InvalidInput("divergence: a density has no finite mass on the quadrature grid");
  }
  const double log_zp = std::log(zp);
  const double log_zq = std::log(zq);
  Vector regular(n), singular(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lq = log_q[k] - log_zq;
    const double lp = log_p[k] - log_zp;
    regular[k] = 0.0;
    singular[k] = 0.0;
    if (log_q[k] == -kInf) {
      if (log_p[k] != -kInf) singular[k] = mass_p[k] / zp;
    } else {
      regular[k] = weights[k] * perspective(g, lp, lq);
    }
  }
  const double regular_sum = pairwise_sum(regular);
  const double singular_mass = pairwise_sum(singular);
  double total = regular_sum;
  if (singular_mass > 0.0) total += g.f_prime_at_inf * singular_mass;  // 0 * inf = 0
  if (std::isnan(total)) throw InvalidInput("divergence: undefined value (NaN) on the quadrature grid");
  return std::max(total, 0.0);
}

double divergence_quadrature(const DivergenceGenerator& g, const Density& p, const Density& q,
                             const QuadratureSpec& quad) {
  if (!same_setting(p, q)) throw InvalidInput("divergence_quadrature: dimension/support mismatch");
  const Grid grid = make_grid(quad, p, &q);
  return divergence_on_grid(g, p.log_density(grid.points), q.log_density(grid.points), grid.weights);
}

double divergence_quadrature(const DivergenceGenerator& g, const Density& p, const Density& q) {
  return divergence_quadrature(g, p, q, default_quadrature(p, &q));
}

double total_mass(const Density& p, const QuadratureSpec& quad) {
  const Grid grid = make_grid(quad, p);
  const Vector lp = p.log_density(grid.points);
  Vector mass(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) mass[k] = grid.weights[k] * std::exp(lp[k]);
  return pairwise_sum(mass);
}

Sampler gaussian_sampler(const Vector& mean, const Matrix& covariance) {
  require_spd(covariance, "gaussian_sampler");
  const Matrix l = Eigen::LLT<Matrix>(covariance).matrixL();
  return [mean, l](std::size_t n, std::mt19937_64& rng) -> Matrix {
    std::normal_distribution<double> n01;
    Matrix z(mean.size(), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = n01(rng);
    return (l * z).colwise() + mean;
  };
}

MonteCarloEstimate divergence_monte_carlo(const DivergenceGenerator& g, const Density& p, const Density& q,
                                          const Sampler& sample_q, std::size_t n, std::uint64_t seed) {
  if (n < 100) throw InvalidInput("divergence_monte_carlo: need at least 100 samples");
  if (!same_setting(p, q)) throw InvalidInput("divergence_monte_carlo: dimension/support mismatch");
  std::mt19937_64 rng(seed);
  const Matrix x = sample_q(n, rng);
  if (x.rows() != p.dim() || static_cast<std::size_t>(x.cols()) != n) {
    throw InvalidInput("divergence_monte_carlo: sampler returned the wrong shape");
  }
  const Vector lp = p.log_density(x);
  const Vector lq = q.log_density(x);
  MonteCarloEstimate out;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (lq[k] == -kInf) throw InvalidInput("divergence_monte_carlo: sample outside the support of Q");
    double value;
    if (lp[k] == -kInf) {
      value = g.f_at_zero;
    } else {
      const double r = lp[k] - lq[k];
      if (r <= 0.0) {
        value = g.f_exp ? g.f_exp(r) : eval_generator(g, std::exp(r));
      } else {
        value = g.dual_f_exp ? std::exp(r) * g.dual_f_exp(-r) : g.f(std::exp(r));
      }
    }
    if (std::isinf(value)) {
      out.infinite = true;
      out.estimate = value;
      out.std_error = kInf;
      return out;
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  out.estimate = mean;
  out.std_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

double check_pushforward_invariance(const DivergenceGenerator& g, const Density& p, const Density& q,
                                    const AffineMap& map, const QuadratureSpec& quad) {
  if (p.support() == SupportKind::UnitSphere) throw InvalidInput("check_pushforward_invariance: Euclidean only");
  const Grid grid = make_grid(quad, p, &q);
  const double before =
      divergence_on_grid(g, p.log_density(grid.points), q.log_density(grid.points), grid.weights);
  const Grid image = transform_grid(grid, map.linear(), map.offset());
  const Density pp = pushforward(p, map);
  const Density qq = pushforward(q, map);
  const double after =
      divergence_on_grid(g, pp.log_density(image.points), qq.log_density(image.points), image.weights);
  return std::abs(after - before);
}

}  // namespace symvi
