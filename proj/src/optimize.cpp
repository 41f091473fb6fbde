#include "symvi/optimize.hpp"

#include "symvi/errors.hpp"
#include "symvi/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace symvi {

void OptConfig::validate() const {
  if (max_iters < 1) throw InvalidInput("OptConfig: max_iters must be >= 1");
  if (!(grad_step > 0.0) || !(tol_obj > 0.0) || !(tol_param > 0.0)) {
    throw InvalidInput("OptConfig: step and tolerances must be positive");
  }
  if (n_starts < 1) throw InvalidInput("OptConfig: n_starts must be >= 1");
  if (threads < 1) throw InvalidInput("OptConfig: threads must be >= 1");
  if (mc_samples < 100) throw InvalidInput("OptConfig: mc_samples must be >= 100");
}

namespace {

struct Counted {
  const std::function<double(const Vector&)>& f;
  int evals = 0;
  double operator()(const Vector& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  }
};

Vector numeric_gradient(Counted& f, const Vector& x, double rel_step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

MinimizeResult minimize_bfgs(Counted& f, const Vector& x0, const OptConfig& cfg,
                             const std::function<bool(Vector&)>& recenter) {
  const Eigen::Index n = x0.size();
  MinimizeResult out;
  Vector x = x0;
  double fx = f(x);
  out.history.push_back(fx);
  if (!std::isfinite(fx)) {
    out.x = x;
    out.value = fx;
    return out;
  }
  Vector g = numeric_gradient(f, x, cfg.grad_step);
  Matrix H = Matrix::Identity(n, n);
  bool fresh = true;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (!g.allFinite()) break;
    Vector p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      fresh = true;
      p = -g;
      slope = -g.squaredNorm();
    }
    if (slope == 0.0) {
      out.converged = true;
      break;
    }
    double t = 1.0;
    if (fresh) t = std::min(1.0, 1.0 / std::max(1e-300, p.lpNorm<Eigen::Infinity>()));
    double f_new = kInf;
    Vector x_new;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = x + t * p;
      f_new = f(x_new);
      if (f_new <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        H.setIdentity();
        fresh = true;
        continue;
      }
      out.converged = g.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + std::abs(fx));
      break;
    }
    const Vector s = x_new - x;
    const double df = fx - f_new;
    x = x_new;
    fx = f_new;
    out.history.push_back(fx);
    const bool small_step = s.lpNorm<Eigen::Infinity>() <= cfg.tol_param * (1.0 + x.lpNorm<Eigen::Infinity>());
    const bool small_gain = df <= cfg.tol_obj * (1.0 + std::abs(fx));
    if (small_step || small_gain) {
      out.converged = true;
      break;
    }
    if (recenter && recenter(x)) {
      fx = f(x);
      out.history.push_back(std::min(fx, out.history.back()));
      g = numeric_gradient(f, x, cfg.grad_step);
      H.setIdentity();
      fresh = true;
      continue;
    }
    const Vector g_new = numeric_gradient(f, x, cfg.grad_step);
    const Vector y = g_new - g;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
      fresh = false;
    }
  }
  out.x = x;
  out.value = fx;
  return out;
}

MinimizeResult minimize_nelder_mead(Counted& f, const Vector& x0, const OptConfig& cfg,
                                    const std::function<bool(Vector&)>& recenter) {
  const Eigen::Index n = x0.size();
  MinimizeResult out;
  std::vector<Vector> simplex;
  std::vector<double> values;
  auto build = [&](const Vector& base, double base_value, double scale) {
    simplex.assign(1, base);
    values.assign(1, base_value);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector v = base;
      v[i] += scale * std::max(1.0, std::abs(base[i]));
      simplex.push_back(v);
      values.push_back(f(v));
    }
  };
  build(x0, f(x0), 0.25);
  out.history.push_back(values[0]);
  std::vector<std::size_t> order(simplex.size());
  auto sort = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Vector> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };
  sort();
  if (!std::isfinite(values[0])) {
    out.x = simplex[0];
    out.value = values[0];
    return out;
  }
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    double diameter = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
      diameter = std::max(diameter, (simplex[i] - simplex[0]).lpNorm<Eigen::Infinity>());
    }
    if (values.back() - values.front() <= cfg.tol_obj * (1.0 + std::abs(values.front())) ||
        diameter <= cfg.tol_param * (1.0 + simplex[0].lpNorm<Eigen::Infinity>())) {
      out.converged = true;
      break;
    }
    Vector centroid = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(n);
    const Vector& worst = simplex.back();
    const Vector xr = centroid + (centroid - worst);
    const double fr = f(xr);
    if (fr < values.front()) {
      const Vector xe = centroid + 2.0 * (centroid - worst);
      const double fe = f(xe);
      if (fe < fr) {
        simplex.back() = xe;
        values.back() = fe;
      } else {
        simplex.back() = xr;
        values.back() = fr;
      }
    } else if (fr < values[values.size() - 2]) {
      simplex.back() = xr;
      values.back() = fr;
    } else {
      const bool outside = fr < values.back();
      const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid)) : Vector(centroid + 0.5 * (worst - centroid));
      const double fc = f(xc);
      if (fc < std::min(fr, values.back())) {
        simplex.back() = xc;
        values.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          values[i] = f(simplex[i]);
        }
      }
    }
    sort();
    out.history.push_back(values.front());
    Vector best = simplex.front();
    if (recenter && recenter(best)) {
      build(best, f(best), std::max(diameter, 1e-3));
      order.resize(simplex.size());
      sort();
      out.history.push_back(std::min(values.front(), out.history.back()));
    }
  }
  out.x = simplex.front();
  out.value = values.front();
  return out;
}

template <class Params>
std::vector<StartResult<Params>> run_starts(int n_starts, int threads,
                                            const std::function<StartResult<Params>(int, std::vector<double>&)>& one,
                                            std::vector<std::vector<double>>& histories) {
  std::vector<StartResult<Params>> results(static_cast<std::size_t>(n_starts));
  histories.assign(static_cast<std::size_t>(n_starts), {});
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_starts));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int k = next++; k < n_starts; k = next++) {
      try {
        results[static_cast<std::size_t>(k)] = one(k, histories[static_cast<std::size_t>(k)]);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(threads, n_starts);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

template <class Params>
FitResult<Params> merge_starts(std::vector<StartResult<Params>> starts, std::vector<std::vector<double>>& histories,
                               const std::function<double(const Params&, const Params&)>& distance) {
  FitResult<Params> fit;
  std::size_t best = starts.size();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    fit.n_evals += starts[k].n_evals;
    if (!std::isfinite(starts[k].objective)) continue;
    if (best == starts.size() || starts[k].objective < starts[best].objective) best = k;
  }
  if (best == starts.size()) throw OptimizationFailed("objective is non-finite at every start");
  fit.params = starts[best].params;
  fit.objective = starts[best].objective;
  fit.converged = starts[best].converged;
  fit.history = std::move(histories[best]);
  for (std::size_t a = 0; a < starts.size(); ++a) {
    if (!std::isfinite(starts[a].objective)) continue;
    for (std::size_t b = a + 1; b < starts.size(); ++b) {
      if (!std::isfinite(starts[b].objective)) continue;
      fit.start_dispersion = std::max(fit.start_dispersion, distance(starts[a].params, starts[b].params));
    }
  }
  fit.starts = std::move(starts);
  return fit;
}

std::mt19937_64 start_rng(std::uint64_t seed, int start) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start)};
  return std::mt19937_64(seq);
}

double log_uniform_scale(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log(0.25), std::log(4.0));
  return std::exp(u(rng));
}

}  // namespace

MinimizeResult minimize(const std::function<double(const Vector&)>& f, const Vector& x0, const OptConfig& cfg,
                        const std::function<bool(Vector&)>& recenter) {
  cfg.validate();
  Counted counted{f};
  MinimizeResult out = cfg.method == OptMethod::QuasiNewton ? minimize_bfgs(counted, x0, cfg, recenter)
                                                            : minimize_nelder_mead(counted, x0, cfg, recenter);
  out.n_evals = counted.evals;
  return out;
}

Vector encode_scale(const Matrix& S) {
  require_spd(S, "encode_scale");
  const Eigen::Index d = S.rows();
  const Matrix L = S.llt().matrixL();
  Vector theta(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = j; i < d; ++i) theta[k++] = i == j ? std::log(L(i, j)) : L(i, j);
  }
  return theta;
}

Matrix decode_scale(const Vector& theta, int d) {
  if (theta.size() != d * (d + 1) / 2) throw InvalidInput("decode_scale: wrong parameter count");
  Matrix L = Matrix::Zero(d, d);
  Eigen::Index k = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) L(i, j) = i == j ? std::exp(theta[k++]) : theta[k++];
  }
  Matrix S = L * L.transpose();
  return 0.5 * (S + S.transpose());
}

LocScaleFit fit_locscale(const Density& target, const LocScaleFamily& family, const DivergenceGenerator& g,
                         const QuadratureSpec& quad, const OptConfig& cfg, const std::optional<Matrix>& fix_S) {
  cfg.validate();
  const int d = family.dim;
  if (target.dim() != d) throw InvalidInput("fit_locscale: target and family dimensions differ");
  if (fix_S) {
    if (fix_S->rows() != d || fix_S->cols() != d) throw InvalidInput("fit_locscale: fix_S has wrong shape");
    require_spd(*fix_S, "fit_locscale fix_S");
  }
  const Grid grid = make_grid(quad, target);
  const Vector log_p = target.log_density(grid.points);

  auto decode = [&](const Vector& x) {
    LocScaleParams params;
    params.nu = x.head(d);
    params.S = fix_S ? *fix_S : decode_scale(x.tail(x.size() - d), d);
    return params;
  };
  const std::function<double(const Vector&)> objective = [&](const Vector& x) {
    if (!x.allFinite()) return kInf;
    try {
      const Density q = member_density(family, decode(x));
      return divergence_on_grid(g, log_p, q.log_density(grid.points), grid.weights);
    } catch (const InvalidInput&) {
      return kInf;
    }
  };

  const Vector center = target.extent().center;
  const Vector sd = target.extent().covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  auto one = [&](int k, std::vector<double>& history) {
    std::mt19937_64 rng = start_rng(cfg.seed, k);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector nu(d);
    for (int i = 0; i < d; ++i) nu[i] = center[i] + 2.0 * sd[i] * u(rng);
    const double scale = log_uniform_scale(rng);
    Vector x0 = nu;
    if (!fix_S) {
      const Vector theta = encode_scale(scale * Matrix::Identity(d, d));
      x0.conservativeResize(d + theta.size());
      x0.tail(theta.size()) = theta;
    }
    const MinimizeResult r = minimize(objective, x0, cfg);
    history = r.history;
    return StartResult<LocScaleParams>{decode(r.x), r.value, r.n_evals, r.converged && std::isfinite(r.value)};
  };
  std::vector<std::vector<double>> histories;
  auto starts = run_starts<LocScaleParams>(cfg.n_starts, cfg.threads, one, histories);
  return merge_starts<LocScaleParams>(std::move(starts), histories, [](const LocScaleParams& a, const LocScaleParams& b) {
    return std::sqrt((a.nu - b.nu).squaredNorm() + (a.S - b.S).squaredNorm());
  });
}

namespace {

// nu(v) = normalize(nu0 + B v) with B an orthonormal basis of nu0's complement.
struct SphereChart {
  Vector nu0;
  Matrix basis;

  explicit SphereChart(const Vector& nu) : nu0(nu.normalized()), basis(orthonormal_complement(nu0)) {}
  Vector at(const Vector& v) const { return (nu0 + basis * v).normalized(); }
};

}  // namespace

VmfFit fit_vmf(const AxialTarget& target, const DivergenceGenerator& g, const OptConfig& cfg,
               std::optional<double> kappa0, bool use_closed_form) {
  cfg.validate();
  target.validate();
  if (kappa0 && (!(*kappa0 > 0.0) || !std::isfinite(*kappa0))) throw InvalidInput("fit_vmf: kappa0 must be positive");
  if (use_closed_form && g.name != "reverse-kl") {
    throw InvalidInput("fit_vmf: the closed-form objective exists only for reverse KL");
  }
  const int d = target.dim();
  const Density p = axial_density(target);
  const std::uint64_t crn_seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;

  auto value = [&](const Vector& nu, double kappa) -> double {
    if (!(kappa > 0.0) || !std::isfinite(kappa) || kappa > 1e6) return kInf;
    if (use_closed_form) return reverse_kl_objective(nu, target, kappa);
    const VmfParams params{nu, kappa};
    const MonteCarloEstimate mc =
        divergence_monte_carlo(g, p, vmf_density(params), vmf_sampler(params), cfg.mc_samples, crn_seed);
    return mc.infinite ? kInf : mc.estimate;
  };

  auto one = [&](int k, std::vector<double>& history) {
    std::mt19937_64 rng = start_rng(cfg.seed, k);
    const Vector nu_start = sample_uniform_sphere(d, 1, rng).col(0);
    const double kappa_start = log_uniform_scale(rng);
    SphereChart chart(nu_start);
    auto kappa_of = [&](const Vector& x) { return kappa0 ? *kappa0 : std::exp(x[d - 1]); };
    const std::function<double(const Vector&)> objective = [&](const Vector& x) {
      if (!x.allFinite()) return kInf;
      return value(chart.at(x.head(d - 1)), kappa_of(x));
    };
    const std::function<bool(Vector&)> recenter = [&](Vector& x) {
      if (x.head(d - 1).norm() <= 0.5) return false;
      chart = SphereChart(chart.at(x.head(d - 1)));
      x.head(d - 1).setZero();
      return true;
    };
    Vector x0 = Vector::Zero(kappa0 ? d - 1 : d);
    if (!kappa0) x0[d - 1] = std::log(kappa_start);
    const MinimizeResult r = minimize(objective, x0, cfg, recenter);
    history = r.history;
    const VmfParams params{chart.at(r.x.head(d - 1)), kappa_of(r.x)};
    return StartResult<VmfParams>{params, r.value, r.n_evals, r.converged && std::isfinite(r.value)};
  };
  std::vector<std::vector<double>> histories;
  auto starts = run_starts<VmfParams>(cfg.n_starts, cfg.threads, one, histories);
  return merge_starts<VmfParams>(std::move(starts), histories, [](const VmfParams& a, const VmfParams& b) {
    const double line = Line(a.nu).distance(Line(b.nu));
    return std::sqrt(line * line + (a.kappa - b.kappa) * (a.kappa - b.kappa));
  });
}

double orbit_objective_check(const Density& target, const LocScaleFamily& family, const DivergenceGenerator& g,
                             const LocScaleParams& params, const std::vector<AffineMap>& maps,
                             const QuadratureSpec& quad) {
  const double base = divergence_quadrature(g, target, member_density(family, params), quad);
  double gap = 0.0;
  for (const auto& map : maps) {
    const double moved = divergence_quadrature(g, target, member_density(family, pushforward_params(params, map)), quad);
    gap = std::max(gap, std::abs(moved - base));
  }
  return gap;
}

}  // namespace symvi
