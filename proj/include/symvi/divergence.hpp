#pragma once

#include "symvi/density.hpp"
#include "symvi/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace symvi {

/// Convex generator f with f(1) = 0 defining D_f(P||Q) =
/// int_{q>0} q f(p/q) dmu + f'(inf) P(q = 0).
struct DivergenceGenerator {
  std::string name;
  std::function<double(double)> f;
  double f_at_zero = 0.0;       // lim_{t->0} f(t)
  double f_prime_at_inf = 0.0;  // lim_{t->0} t f(1/t)
  // Optional exact log-space forms, both for r <= 0:
  //   f_exp(r)      = f(e^r)
  //   dual_f_exp(r) = e^r f(e^{-r})
  // Without them the ratio is formed with exp() and clamped.
  std::function<double(double)> f_exp;
  std::function<double(double)> dual_f_exp;
};

DivergenceGenerator forward_kl();
DivergenceGenerator reverse_kl();
DivergenceGenerator chi_squared();
DivergenceGenerator total_variation();
DivergenceGenerator squared_hellinger();

/// The five built-in generators, in a fixed order.
const std::vector<DivergenceGenerator>& builtin_generators();

/// Looks up a built-in generator by name ("kl", "reverse-kl", "chi2", "tv",
/// "hellinger"); throws InvalidInput for unknown names.
DivergenceGenerator generator_by_name(const std::string& name);

/// Generator of the argument-swapped divergence, f~(t) = t f(1/t).
DivergenceGenerator dual(const DivergenceGenerator& g);

/// f(t) for t in (0, inf]; f(0) for t = 0.
double eval_generator(const DivergenceGenerator& g, double t);

/// q f(p/q) at a point, from log-densities. log_q must be finite.
double perspective(const DivergenceGenerator& g, double log_p, double log_q);

/// Default quadrature covering both densities: for light tails the box
/// mean +/- 8 marginal standard deviations (hull over P and Q); for heavy
/// tails the algebraically mapped rule; for S^2 the 400 x 800 product grid.
QuadratureSpec default_quadrature(const Density& p, const Density* q = nullptr);

/// Materializes a spec, filling unset boxes/centers from the densities.
Grid make_grid(const QuadratureSpec& quad, const Density& p, const Density* q = nullptr);

/// D_f from log-density values at grid nodes. Both densities are normalized
/// to unit mass on the grid before the divergence is formed.
double divergence_on_grid(const DivergenceGenerator& g, const Vector& log_p, const Vector& log_q,
                          const Vector& weights);

double divergence_quadrature(const DivergenceGenerator& g, const Density& p, const Density& q,
                             const QuadratureSpec& quad);
double divergence_quadrature(const DivergenceGenerator& g, const Density& p, const Density& q);

/// Total mass of a density on a grid (without normalization).
double total_mass(const Density& p, const QuadratureSpec& quad);

/// Draws n points (columns) from a distribution.
using Sampler = std::function<Matrix(std::size_t n, std::mt19937_64& rng)>;

Sampler gaussian_sampler(const Vector& mean, const Matrix& covariance);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  // Set when some draw hit p(X) = 0 with f(0) = +inf.
  bool infinite = false;
};

/// E_Q[f(p(X)/q(X))] over n draws from `sample_q`; deterministic in `seed`.
MonteCarloEstimate divergence_monte_carlo(const DivergenceGenerator& g, const Density& p, const Density& q,
                                          const Sampler& sample_q, std::size_t n, std::uint64_t seed);

/// |D_f(T#P || T#Q) - D_f(P || Q)|, with the pushforward side integrated over
/// the image of the original grid.
double check_pushforward_invariance(const DivergenceGenerator& g, const Density& p, const Density& q,
                                    const AffineMap& map, const QuadratureSpec& quad);

}  // namespace symvi
