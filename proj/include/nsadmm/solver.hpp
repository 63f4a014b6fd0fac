#ifndef NSADMM_SOLVER_HPP_
#define NSADMM_SOLVER_HPP_

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "nsadmm/diagnostics.hpp"
#include "nsadmm/errors.hpp"
#include "nsadmm/estimator.hpp"
#include "nsadmm/problem.hpp"
#include "nsadmm/solver_config.hpp"

namespace nsadmm {

//! Primal/dual iterate. x_prev lags x by exactly one accepted iteration.
struct IterateState {
  Vector x;
  std::vector<Vector> y;
  Vector z;
  Vector x_prev;
  Index k = 0;
};

struct SolveReport {
  Vector x_out;
  std::vector<Vector> y_out;
  Vector z_out;
  Index output_index = 0;  //!< trace index the output triple was drawn from
  std::vector<TraceRecord> trace;  //!< records for k = 0..K
  std::vector<Vector> x_history;   //!< x^0..x^K
  std::vector<std::vector<Vector>> y_history;
  std::vector<Vector> z_history;
  //! ||A'z^{k+1} - v^k - (G/eta)(x^{k+1}-x^k)|| for k = 0..K-1; zero up to
  //! roundoff because the x and z updates enforce it.
  std::vector<double> key_identity_residuals;
  std::int64_t total_samples = 0;
  double wall_seconds = 0.0;
  double lambda_margin = 0.0;  //!< descent margin of the potential analysis (diagnostic)
  double gamma = 0.0;          //!< min(lambda_margin, min_j sigma_min(H_j)) (diagnostic)
};

//! Parameter calibration. Fixes (rho, eta, r, tau) from the smoothness
//! profile and spectral data, then sizes the batches for a target accuracy:
//! the finite-sum recursion uses q = ceil(sqrt(2 N1 + N2)) with full
//! refreshes, the online recursion uses q = ceil(1/eps), and refresh /
//! mini-batch sizes invert the corresponding variance bound at eps^2/3 with
//! the budget split equally across its three terms.
//!
//! eta depends on sigma_min(G), which depends on r, which depends on eta.
//! Since r sits exactly at its lower bound, sigma_min(G) = 1 identically, so
//! the two-pass resolution (provisional eta at the sigma_min(G) >= 1 lower
//! bound, then r, then final eta) terminates immediately and is
//! deterministic.
inline SolverConfig calibrate(const ProblemInstance& problem, const SmoothnessProfile& profile,
                              OracleMode mode, EstimatorKind estimator, double alpha,
                              double eps_target, std::optional<Index> q_override = std::nullopt) {
  if (!(eps_target > 0.0)) throw InvalidTolerance("calibrate: eps_target must be positive");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("calibrate: alpha must lie in (0,1)");
  profile.validate();
  const SpectralSummary& sp = problem.spectral;
  sp.validate();

  SolverConfig cfg;
  cfg.alpha = alpha;
  cfg.mode = mode;
  cfg.estimator = estimator;
  cfg.rho = std::sqrt(98.0) * profile.LF * sp.kappa_G / (sp.sigma_min_A * alpha);
  const double eta_prov = 2.0 * alpha / (3.0 * profile.LF);
  cfg.r = cfg.rho * eta_prov * sp.sigma_max_A + 1.0;
  const double smin_G = cfg.r - cfg.rho * eta_prov * sp.sigma_max_A;  // = 1 by construction
  cfg.eta = 2.0 * alpha * smin_G / (3.0 * profile.LF);
  cfg.tau.resize(static_cast<std::size_t>(problem.m()));
  for (int j = 0; j < problem.m(); ++j)
    cfg.tau[static_cast<std::size_t>(j)] =
        cfg.rho * sp.sigma_max_B[static_cast<std::size_t>(j)] + 1.0;

  const auto ceil_pos = [](double v) {
    return std::max<Index>(1, static_cast<Index>(std::ceil(v - 1e-12)));
  };
  const double eps_sq = eps_target * eps_target;
  const double l1sq = profile.l1 * profile.l1;
  BatchPlan plan;
  if (estimator == EstimatorKind::spider) {
    if (mode == OracleMode::finite_sum) {
      const double n_total =
          static_cast<double>(2 * problem.oracle->num_inner() + problem.oracle->num_outer());
      plan.q = q_override ? *q_override : ceil_pos(std::sqrt(n_total));
      plan.S = problem.oracle->num_inner();
      plan.B1 = problem.oracle->num_inner();
      plan.B2 = problem.oracle->num_outer();
    } else {
      plan.q = q_override ? *q_override : ceil_pos(1.0 / eps_target);
      // Refresh sizes solve C1 = eps^2/3, one third of the budget per term.
      plan.B2 = ceil_pos(243.0 * l1sq * profile.sigma2 * profile.sigma2 / eps_sq);
      plan.S = ceil_pos(243.0 * l1sq * profile.delta * profile.delta / eps_sq);
      plan.B1 = ceil_pos(27.0 * profile.l2 * profile.l2 * profile.sigma1 * profile.sigma1 / eps_sq);
    }
    const double lfsq = profile.LF * profile.LF;
    const double qd = static_cast<double>(plan.q);
    plan.b2 = ceil_pos(27.0 * l1sq * l1sq * profile.L2 * profile.L2 * qd / lfsq);
    plan.s = ceil_pos(27.0 * l1sq * l1sq * qd / lfsq);
    plan.b1 = ceil_pos(3.0 * profile.l2 * profile.l2 * profile.L1 * profile.L1 * qd / lfsq);
  } else {
    // Mini-batch sizes solve C = eps^2/3 with the same equal split.
    plan.q = q_override ? *q_override : 1;
    plan.b2 = ceil_pos(243.0 * l1sq * profile.sigma2 * profile.sigma2 / eps_sq);
    plan.s = ceil_pos(243.0 * l1sq * profile.L2 * profile.L2 * profile.delta * profile.delta / eps_sq);
    plan.b1 = ceil_pos(27.0 * profile.l2 * profile.l2 * profile.sigma1 * profile.sigma1 / eps_sq);
    plan.S = plan.s;
    plan.B1 = plan.b1;
    plan.B2 = plan.b2;
  }
  cfg.plan = plan;
  validate_config(problem, cfg);
  return cfg;
}

//! Closed-form Gauss-Seidel update of block j. Blocks before j must already
//! hold their new values in state.y. The H_j metric cancels the quadratic
//! coupling, leaving a single prox evaluation at step 1/tau_j.
inline Vector update_y_block(const ProblemInstance& problem, const SolverConfig& cfg,
                             const IterateState& state, int j, const Vector& z_current) {
  const double tau_j = cfg.tau[static_cast<std::size_t>(j)];
  if (cfg.sigma_min_H(problem.spectral, j) < 1.0 - 1e-9)
    throw ConfigError("update_y_block: tau too small, H_j not identity-dominant");
  Vector inner = problem.A * state.x - problem.c - z_current / cfg.rho;
  for (int i = 0; i < problem.m(); ++i)
    inner += problem.B[static_cast<std::size_t>(i)] * state.y[static_cast<std::size_t>(i)];
  const Matrix& Bj = problem.B[static_cast<std::size_t>(j)];
  const Vector w =
      state.y[static_cast<std::size_t>(j)] - (cfg.rho / tau_j) * (Bj.transpose() * inner);
  return prox(problem.regs[static_cast<std::size_t>(j)], 1.0 / tau_j, w);
}

//! Closed-form x update: with G/eta + rho A'A = (r/eta) I the linearized
//! subproblem reduces to a scaled gradient step.
inline Vector update_x(const ProblemInstance& problem, const SolverConfig& cfg,
                       const IterateState& state, const Vector& v,
                       const std::vector<Vector>& y_new) {
  if (cfg.sigma_min_G(problem.spectral) < 1.0 - 1e-9)
    throw ConfigError("update_x: r too small, G not identity-dominant");
  const Vector resid = constraint_residual(problem, state.x, y_new);
  const Vector step =
      v - problem.A.transpose() * state.z + cfg.rho * (problem.A.transpose() * resid);
  return state.x - (cfg.eta / cfg.r) * step;
}

//! Dual ascent on the residual of the constraint A x + sum_j B_j y_j = c.
inline Vector update_z(const ProblemInstance& problem, const SolverConfig& cfg,
                       const Vector& x_new, const std::vector<Vector>& y_new, const Vector& z) {
  return z - cfg.rho * constraint_residual(problem, x_new, y_new);
}

using IterationCallback = std::function<void(const IterateState&, const TraceRecord&)>;

//! Descent margin Lambda of the potential analysis and
//! gamma = min(Lambda, min_j sigma_min(H_j)); diagnostic only, never gates
//! execution.
inline std::pair<double, double> descent_margins(const ProblemInstance& problem,
                                                 const SolverConfig& cfg) {
  const SpectralSummary& sp = problem.spectral;
  const double smin_G = cfg.sigma_min_G(sp);
  const double smax_G = cfg.sigma_max_G(sp);
  const double lf = problem.profile.LF;
  const double c2 = cfg.estimator == EstimatorKind::spider
                        ? variance_bound_spider(problem.profile, cfg.plan, cfg.mode).second
                        : 0.0;
  const double lambda =
      smin_G / cfg.eta + cfg.rho * sp.sigma_min_A / 2.0 - lf -
      6.0 * smax_G * smax_G / (cfg.rho * sp.sigma_min_A * cfg.eta * cfg.eta) -
      9.0 * lf * lf / (cfg.rho * sp.sigma_min_A) - 2.0 * c2 / (cfg.rho * sp.sigma_min_A);
  double smin_H = std::numeric_limits<double>::infinity();
  for (int j = 0; j < problem.m(); ++j) smin_H = std::min(smin_H, cfg.sigma_min_H(sp, j));
  return {lambda, std::min(lambda, smin_H)};
}

//! Runs K iterations: estimator step (mini-batch every iteration, or a
//! refresh when k mod q == 0 and the recursion otherwise), the Gauss-Seidel
//! y sweep, the linearized x step, and the dual update. The output triple is
//! drawn uniformly from the K recorded iterates with a dedicated substream
//! of the run seed, so it is reproducible from the seed alone.
inline SolveReport run(const ProblemInstance& problem, const SolverConfig& cfg,
                       const IterationCallback& callback = {},
                       std::optional<Vector> x0 = std::nullopt) {
  problem.validate();
  validate_config(problem, cfg);
  if (cfg.K < 1) throw EmptyRun("run: iteration budget must be positive");
  if (cfg.mode != problem.oracle->mode())
    throw ConfigError("run: config mode does not match the oracle mode");
  const auto t_start = std::chrono::steady_clock::now();

  const CompositionOracle& oracle = *problem.oracle;
  Rng rng_batches(derive_seed(cfg.seed, 1));
  Rng rng_output(derive_seed(cfg.seed, 2));
  Rng rng_surrogate(derive_seed(cfg.seed, 3));

  IterateState st;
  st.x = x0 ? std::move(*x0) : Vector(Vector::Zero(problem.dim_x()));
  if (st.x.size() != problem.dim_x()) throw DimensionError("run: bad initial point dimension");
  st.x_prev = st.x;
  st.y.resize(static_cast<std::size_t>(problem.m()));
  for (int j = 0; j < problem.m(); ++j)
    st.y[static_cast<std::size_t>(j)] = Vector::Zero(problem.block_dim(j));
  st.z = Vector::Zero(problem.dim_p());
  st.k = 0;

  SolveReport report;
  report.trace.reserve(static_cast<std::size_t>(cfg.K) + 1);
  report.x_history.reserve(static_cast<std::size_t>(cfg.K) + 1);
  report.key_identity_residuals.reserve(static_cast<std::size_t>(cfg.K));

  const bool finite_sum = oracle.mode() == OracleMode::finite_sum;
  const auto record = [&](Index k, std::int64_t samples, double dual_step) {
    report.x_history.push_back(st.x);
    report.y_history.push_back(st.y);
    report.z_history.push_back(st.z);
    TraceRecord rec;
    rec.k = k;
    rec.samples_used = samples;
    rec.stat = stationarity(problem, st.x, st.y, st.z, finite_sum ? nullptr : &rng_surrogate);
    rec.aug_lag = augmented_lagrangian(problem, st.x, st.y, st.z, cfg.rho);
    rec.potential = potential(problem, cfg, report.x_history, 0, st.y, st.z, k);
    rec.dual_step_norm = dual_step;
    report.trace.push_back(rec);
    if (callback) callback(st, rec);
  };
  record(0, 0, 0.0);

  EstimatorState est;
  std::int64_t samples = 0;
  for (Index k = 0; k < cfg.K; ++k) {
    if (cfg.estimator == EstimatorKind::minibatch) {
      est = minibatch_step(oracle, st.x, cfg.plan, rng_batches, samples);
    } else if (k % cfg.plan.q == 0) {
      est = spider_refresh(oracle, st.x, cfg.plan, cfg.mode, rng_batches, samples);
    } else {
      est = spider_recurse(oracle, est, st.x, st.x_prev, cfg.plan, rng_batches);
    }
    samples = est.samples_used;

    for (int j = 0; j < problem.m(); ++j)
      st.y[static_cast<std::size_t>(j)] = update_y_block(problem, cfg, st, j, st.z);
    const Vector x_new = update_x(problem, cfg, st, est.v, st.y);
    const Vector z_new = update_z(problem, cfg, x_new, st.y, st.z);
    const double dual_step = (z_new - st.z).norm();

    const Vector dx = x_new - st.x;
    const Vector g_over_eta_dx = (cfg.r / cfg.eta) * dx -
                                 cfg.rho * (problem.A.transpose() * (problem.A * dx));
    report.key_identity_residuals.push_back(
        (problem.A.transpose() * z_new - est.v - g_over_eta_dx).norm());

    st.x_prev = st.x;
    st.x = x_new;
    st.z = z_new;
    st.k = k + 1;
    record(k + 1, samples, dual_step);
  }

  report.total_samples = samples;
  const Index pick = 1 + rng_output.uniform_index(cfg.K);  // uniform over iterates 1..K
  report.output_index = pick;
  report.x_out = report.x_history[static_cast<std::size_t>(pick)];
  report.y_out = report.y_history[static_cast<std::size_t>(pick)];
  report.z_out = report.z_history[static_cast<std::size_t>(pick)];
  const auto [lambda, gamma] = descent_margins(problem, cfg);
  report.lambda_margin = lambda;
  report.gamma = gamma;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace nsadmm

#endif  // NSADMM_SOLVER_HPP_
