#pragma once

#include "symvi/divergence.hpp"
#include "symvi/euclidean.hpp"
#include "symvi/sphere.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace symvi {

enum class OptMethod { QuasiNewton, DirectSearch };

struct OptConfig {
  OptMethod method = OptMethod::QuasiNewton;
  int max_iters = 300;
  double grad_step = 1e-5;  // relative central-difference step
  double tol_obj = 1e-13;
  double tol_param = 1e-9;
  int n_starts = 4;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t mc_samples = 4096;  // per objective evaluation on the Monte Carlo path

  void validate() const;
};

template <class Params>
struct StartResult {
  Params params;
  double objective = kInf;
  int n_evals = 0;
  bool converged = false;
};

template <class Params>
struct FitResult {
  Params params;
  double objective = kInf;
  int n_evals = 0;
  double start_dispersion = 0.0;
  bool converged = false;
  std::vector<StartResult<Params>> starts;
  std::vector<double> history;  // best objective per iteration, winning start
};

using LocScaleFit = FitResult<LocScaleParams>;
using VmfFit = FitResult<VmfParams>;

/// Unconstrained minimization of `f` from `x0`. `recenter`, when set, may
/// re-express the current point in a new chart (value-preserving) and returns
/// true when it did.
struct MinimizeResult {
  Vector x;
  double value = kInf;
  int n_evals = 0;
  bool converged = false;
  std::vector<double> history;
};

MinimizeResult minimize(const std::function<double(const Vector&)>& f, const Vector& x0, const OptConfig& cfg,
                        const std::function<bool(Vector&)>& recenter = {});

/// Lower-triangular factor with log-diagonal, column-major.
Vector encode_scale(const Matrix& S);
Matrix decode_scale(const Vector& theta, int d);

/// Minimizes D_f(target || Q_{nu,S}) over (nu, S), or over nu alone when
/// fix_S is given.
LocScaleFit fit_locscale(const Density& target, const LocScaleFamily& family, const DivergenceGenerator& g,
                         const QuadratureSpec& quad, const OptConfig& cfg,
                         const std::optional<Matrix>& fix_S = std::nullopt);

/// Minimizes D_f(target || vMF(nu, kappa)) over nu in S^{d-1} and kappa > 0,
/// or over nu alone when kappa0 is given. With use_closed_form the objective
/// is reverse_kl_objective; otherwise a Monte Carlo estimate with common
/// random numbers.
VmfFit fit_vmf(const AxialTarget& target, const DivergenceGenerator& g, const OptConfig& cfg,
               std::optional<double> kappa0, bool use_closed_form);

/// max over maps of |D_f(target || Q_params) - D_f(target || Q_{map(params)})|.
double orbit_objective_check(const Density& target, const LocScaleFamily& family, const DivergenceGenerator& g,
                             const LocScaleParams& params, const std::vector<AffineMap>& maps,
                             const QuadratureSpec& quad);

}  // namespace symvi
