#ifndef NSADMM_DIAGNOSTICS_HPP_
#define NSADMM_DIAGNOSTICS_HPP_

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/problem.hpp"
#include "nsadmm/prox.hpp"
#include "nsadmm/solver_config.hpp"

namespace nsadmm {

//! The three squared gaps of the stationarity measure: constraint violation,
//! gradient-vs-dual mismatch, and regularizer subdifferential distance.
//! total is their sum; the triple vanishes exactly at a stationary point.
struct StationarityTriple {
  double feas = 0.0;     //!< ||A x + sum_j B_j y_j - c||^2
  double grad = 0.0;     //!< ||F'(x) - A' z||^2
  double subdiff = 0.0;  //!< sum_j dist(B_j' z, d reg_j(y_j))^2
  double total = 0.0;
  bool surrogate = false;  //!< gradient estimated by sampling (online mode)
};

//! Per-iteration log row.
struct TraceRecord {
  Index k = 0;
  std::int64_t samples_used = 0;
  StationarityTriple stat;
  double aug_lag = 0.0;
  double potential = 0.0;
  double dual_step_norm = 0.0;
};

inline Vector constraint_residual(const ProblemInstance& problem, const Vector& x,
                                  const std::vector<Vector>& y) {
  Vector r = problem.A * x - problem.c;
  for (int j = 0; j < problem.m(); ++j)
    r += problem.B[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
  return r;
}

//! Large-sample gradient estimate for online oracles, where exact component
//! means do not exist.
inline Vector surrogate_nested_gradient(const CompositionOracle& oracle, const Vector& x,
                                        Index samples, Rng& rng) {
  const auto inner = draw_batch(rng, oracle.num_inner(), samples);
  const auto jac = draw_batch(rng, oracle.num_inner(), samples);
  const auto outer = draw_batch(rng, oracle.num_outer(), samples);
  const Vector w = eval_f1(oracle, inner, x);
  const Matrix J = eval_jac_f1(oracle, jac, x);
  const Vector g = eval_grad_f2(oracle, outer, w);
  return J.transpose() * g;
}

constexpr Index kSurrogateGradientSamples = 10000;

inline StationarityTriple stationarity(const ProblemInstance& problem, const Vector& x,
                                       const std::vector<Vector>& y, const Vector& z,
                                       Rng* surrogate_rng = nullptr) {
  StationarityTriple out;
  Vector grad_F;
  if (problem.oracle->mode() == OracleMode::finite_sum) {
    grad_F = exact_nested_gradient(problem, x);
  } else {
    if (surrogate_rng == nullptr)
      throw UnsupportedMode(
          "stationarity: online oracle needs a seeded rng for the surrogate gradient");
    grad_F = surrogate_nested_gradient(*problem.oracle, x, kSurrogateGradientSamples,
                                       *surrogate_rng);
    out.surrogate = true;
  }
  out.feas = constraint_residual(problem, x, y).squaredNorm();
  out.grad = (grad_F - problem.A.transpose() * z).squaredNorm();
  out.subdiff = 0.0;
  for (int j = 0; j < problem.m(); ++j) {
    const double dj = subdiff_distance(problem.regs[static_cast<std::size_t>(j)],
                                       y[static_cast<std::size_t>(j)],
                                       problem.B[static_cast<std::size_t>(j)].transpose() * z);
    out.subdiff += dj * dj;
  }
  out.total = out.feas + out.grad + out.subdiff;
  return out;
}

//! F(x) + sum_j reg_j(y_j) - <z, r> + (rho/2) ||r||^2 with r the constraint
//! residual.
inline double augmented_lagrangian(const ProblemInstance& problem, const Vector& x,
                                   const std::vector<Vector>& y, const Vector& z, double rho) {
  if (z.size() != problem.A.rows())
    throw DimensionError("augmented_lagrangian: dual dimension mismatch");
  const Vector r = constraint_residual(problem, x, y);
  return full_objective(problem, x, y) - z.dot(r) + 0.5 * rho * r.squaredNorm();
}

namespace detail {

//! First iteration of the epoch containing k (refresh points start epochs).
inline Index epoch_start(Index k, Index q) {
  if (k <= 0) return 0;
  const Index n_k = (k + q - 1) / q;  // ceil(k/q)
  return (n_k - 1) * q;
}

}  // namespace detail

//! Potential R_k: the augmented Lagrangian plus a damped last-displacement
//! term and, for the recursive estimator, the accumulated squared
//! displacements of the current epoch. xs spans iterates
//! base_index..base_index+len-1 and must cover epoch_start(k)..k.
inline double potential(const ProblemInstance& problem, const SolverConfig& cfg,
                        std::span<const Vector> xs, Index base_index,
                        const std::vector<Vector>& y_k, const Vector& z_k, Index k) {
  const SpectralSummary& sp = problem.spectral;
  const Index start = cfg.estimator == EstimatorKind::spider ? detail::epoch_start(k, cfg.plan.q)
                                                             : k;
  if (base_index > std::min(start, k > 0 ? k - 1 : k) ||
      base_index + static_cast<Index>(xs.size()) <= k)
    throw InsufficientHistory("potential: iterate window does not cover the epoch");
  const auto at = [&](Index i) -> const Vector& {
    return xs[static_cast<std::size_t>(i - base_index)];
  };

  double R = augmented_lagrangian(problem, at(k), y_k, z_k, cfg.rho);
  const double smax_G = cfg.sigma_max_G(sp);
  const double coef_last = 3.0 * smax_G * smax_G / (cfg.rho * sp.sigma_min_A * cfg.eta * cfg.eta) +
                           9.0 * problem.profile.LF * problem.profile.LF /
                               (cfg.rho * sp.sigma_min_A);
  const Vector& xk = at(k);
  const Vector& xk_prev = k > 0 ? at(k - 1) : at(k);  // x^{-1} := x^0
  R += coef_last * (xk - xk_prev).squaredNorm();

  if (cfg.estimator == EstimatorKind::spider) {
    const double c2 = variance_bound_spider(problem.profile, cfg.plan, cfg.mode).second;
    double acc = 0.0;
    for (Index i = start; i < k; ++i) acc += (at(i + 1) - at(i)).squaredNorm();
    R += 2.0 * c2 / (cfg.rho * sp.sigma_min_A) * acc;
  }
  return R;
}

//! Central finite differences of F along each coordinate.
inline Vector finite_diff_gradient(const ProblemInstance& problem, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidStep("finite_diff_gradient: h must be positive");
  require_finite_sum(*problem.oracle, "finite_diff_gradient");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = objective_value(*problem.oracle, xp);
    xp[i] = xi - h;
    const double fm = objective_value(*problem.oracle, xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

//! Distance of 0 to the unpenalized Lagrangian's subgradient, the aggregate
//! form of the stationarity triple.
inline double lagrangian_subgrad_dist(const ProblemInstance& problem, const Vector& x,
                                      const std::vector<Vector>& y, const Vector& z) {
  return std::sqrt(stationarity(problem, x, y, z).total);
}

//! Right-hand side of the per-iteration dual-step bound
//!   E||z_{k+1}-z_k||^2 <= rhs, assembled from logged displacements. The
//! variance contribution is 18C for the mini-batch estimator and
//! 6(C1 + C2 * epoch_sum) for the recursive one.
inline double dual_bound_rhs(const ProblemInstance& problem, const SolverConfig& cfg,
                             double dx_next_sq, double dx_prev_sq, double epoch_sum_sq) {
  const SpectralSummary& sp = problem.spectral;
  const double smax_G = cfg.sigma_max_G(sp);
  const double gg = 3.0 * smax_G * smax_G / (sp.sigma_min_A * cfg.eta * cfg.eta);
  const double lf = problem.profile.LF;
  double variance_term;
  if (cfg.estimator == EstimatorKind::minibatch) {
    variance_term = 18.0 * variance_bound_minibatch(problem.profile, cfg.plan) / sp.sigma_min_A;
  } else {
    const auto [c1, c2] = variance_bound_spider(problem.profile, cfg.plan, cfg.mode);
    variance_term = (6.0 * c1 + 6.0 * c2 * epoch_sum_sq) / sp.sigma_min_A;
  }
  return variance_term + gg * dx_next_sq + (gg + 9.0 * lf * lf / sp.sigma_min_A) * dx_prev_sq;
}

}  // namespace nsadmm

#endif  // NSADMM_DIAGNOSTICS_HPP_
