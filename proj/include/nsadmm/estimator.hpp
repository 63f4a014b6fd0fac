#ifndef NSADMM_ESTIMATOR_HPP_
#define NSADMM_ESTIMATOR_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/oracle.hpp"
#include "nsadmm/parallel.hpp"
#include "nsadmm/problem.hpp"
#include "nsadmm/rng.hpp"

namespace nsadmm {

//! Batch sizes of the nested-gradient estimators. S/B1/B2 are the refresh
//! sizes (ignored for finite-sum refreshes, which sweep the full component
//! sets), s/b1/b2 the per-step sizes, q the epoch length between refreshes.
struct BatchPlan {
  Index S = 1;
  Index B1 = 1;
  Index B2 = 1;
  Index s = 1;
  Index b1 = 1;
  Index b2 = 1;
  Index q = 1;

  void validate() const {
    if (S < 1 || B1 < 1 || B2 < 1 || s < 1 || b1 < 1 || b2 < 1 || q < 1)
      throw ConfigError("batch plan entries must be positive");
  }
};

//! Running estimate of (f1(x), f1'(x), f2'(Y)) and the assembled nested
//! gradient v = Z1' Z2. `samples_used` counts cumulative component
//! evaluations: one per sampled index at a single point, two per sampled
//! index inside a recursion correction (paired evaluation).
struct EstimatorState {
  Vector Y;
  Matrix Z1;
  Vector Z2;
  Vector v;
  Index k_in_epoch = 0;
  std::int64_t samples_used = 0;

  void refresh_v() { v = Z1.transpose() * Z2; }
};

namespace detail {

//! Sampling is with replacement, except that a finite-sum batch at least as
//! large as the component pool degenerates to the exact full sweep.
inline std::vector<Index> draw_or_sweep(Rng& rng, const CompositionOracle& oracle, Index pool,
                                        Index size) {
  if (oracle.mode() == OracleMode::finite_sum && size >= pool) return full_index_set(pool);
  return draw_batch(rng, pool, size);
}

}  // namespace detail

//! One-shot mini-batch estimate at x: independent batches for the inner
//! value, the inner Jacobian, and the outer gradient.
inline EstimatorState minibatch_step(const CompositionOracle& oracle, const Vector& x,
                                     const BatchPlan& plan, Rng& rng,
                                     std::int64_t samples_so_far = 0) {
  plan.validate();
  const auto sample_set = detail::draw_or_sweep(rng, oracle, oracle.num_inner(), plan.s);
  const auto jac_set = detail::draw_or_sweep(rng, oracle, oracle.num_inner(), plan.b1);
  const auto grad_set = detail::draw_or_sweep(rng, oracle, oracle.num_outer(), plan.b2);
  EstimatorState st;
  st.Y = eval_f1(oracle, sample_set, x);
  st.Z1 = eval_jac_f1(oracle, jac_set, x);
  st.Z2 = eval_grad_f2(oracle, grad_set, st.Y);
  st.refresh_v();
  st.k_in_epoch = 0;
  st.samples_used = samples_so_far + static_cast<std::int64_t>(sample_set.size()) +
                    static_cast<std::int64_t>(jac_set.size()) +
                    static_cast<std::int64_t>(grad_set.size());
  return st;
}

//! Epoch refresh. Finite-sum mode sweeps the full component sets, so the
//! refreshed estimate equals the exact nested gradient; online mode samples
//! with the large refresh sizes S, B1, B2.
inline EstimatorState spider_refresh(const CompositionOracle& oracle, const Vector& x,
                                     const BatchPlan& plan, OracleMode mode, Rng& rng,
                                     std::int64_t samples_so_far = 0) {
  plan.validate();
  EstimatorState st;
  if (mode == OracleMode::finite_sum) {
    const auto inner = full_index_set(oracle.num_inner());
    const auto outer = full_index_set(oracle.num_outer());
    st.Y = eval_f1(oracle, inner, x);
    st.Z1 = eval_jac_f1(oracle, inner, x);
    st.Z2 = eval_grad_f2(oracle, outer, st.Y);
    st.samples_used = samples_so_far + 2 * oracle.num_inner() + oracle.num_outer();
  } else {
    const auto sample_set = draw_batch(rng, oracle.num_inner(), plan.S);
    const auto jac_set = draw_batch(rng, oracle.num_inner(), plan.B1);
    const auto grad_set = draw_batch(rng, oracle.num_outer(), plan.B2);
    st.Y = eval_f1(oracle, sample_set, x);
    st.Z1 = eval_jac_f1(oracle, jac_set, x);
    st.Z2 = eval_grad_f2(oracle, grad_set, st.Y);
    st.samples_used = samples_so_far + plan.S + plan.B1 + plan.B2;
  }
  st.refresh_v();
  st.k_in_epoch = 0;
  return st;
}

//! One recursion step from x_prev to x_new. Each tier draws a single batch
//! reused at both evaluation points; the outer correction is evaluated at
//! (Y_new, Y_prev) with Y_prev taken from the stored state.
inline EstimatorState spider_recurse(const CompositionOracle& oracle, const EstimatorState& prev,
                                     const Vector& x_new, const Vector& x_prev,
                                     const BatchPlan& plan, Rng& rng) {
  plan.validate();
  if (prev.k_in_epoch >= plan.q - 1)
    throw EpochBoundary("spider_recurse: epoch exhausted, refresh required");
  const auto sample_set = detail::draw_or_sweep(rng, oracle, oracle.num_inner(), plan.s);
  const auto jac_set = detail::draw_or_sweep(rng, oracle, oracle.num_inner(), plan.b1);
  const auto grad_set = detail::draw_or_sweep(rng, oracle, oracle.num_outer(), plan.b2);

  // The corrections are differenced before being added so that a zero
  // displacement cancels exactly.
  EstimatorState st;
  st.Y = prev.Y + (eval_f1(oracle, sample_set, x_new) - eval_f1(oracle, sample_set, x_prev));
  st.Z1 =
      prev.Z1 + (eval_jac_f1(oracle, jac_set, x_new) - eval_jac_f1(oracle, jac_set, x_prev));
  st.Z2 = prev.Z2 +
          (eval_grad_f2(oracle, grad_set, st.Y) - eval_grad_f2(oracle, grad_set, prev.Y));
  st.refresh_v();
  st.k_in_epoch = prev.k_in_epoch + 1;
  st.samples_used = prev.samples_used + 2 * (static_cast<std::int64_t>(sample_set.size()) +
                                             static_cast<std::int64_t>(jac_set.size()) +
                                             static_cast<std::int64_t>(grad_set.size()));
  return st;
}

//! Mean-squared-error bound of the mini-batch estimator:
//!   C = 27 l1^2 sigma2^2 / b2 + 27 l1^2 L2^2 delta^2 / s + 3 l2^2 sigma1^2 / b1.
inline double variance_bound_minibatch(const SmoothnessProfile& p, const BatchPlan& plan) {
  plan.validate();
  const double l1sq = p.l1 * p.l1;
  return 27.0 * l1sq * p.sigma2 * p.sigma2 / static_cast<double>(plan.b2) +
         27.0 * l1sq * p.L2 * p.L2 * p.delta * p.delta / static_cast<double>(plan.s) +
         3.0 * p.l2 * p.l2 * p.sigma1 * p.sigma1 / static_cast<double>(plan.b1);
}

//! Constants (C1, C2) of the recursive estimator's error bound
//!   E||v_k - F'(x_k)||^2 <= C1 + C2 * sum ||x_{i+1} - x_i||^2  over the epoch.
//! C1 vanishes in finite-sum mode because refreshes are exact.
inline std::pair<double, double> variance_bound_spider(const SmoothnessProfile& p,
                                                       const BatchPlan& plan, OracleMode mode) {
  plan.validate();
  const double l1sq = p.l1 * p.l1;
  double c1 = 0.0;
  if (mode == OracleMode::online) {
    c1 = 27.0 * l1sq * p.sigma2 * p.sigma2 / static_cast<double>(plan.B2) +
         27.0 * l1sq * p.delta * p.delta / static_cast<double>(plan.S) +
         3.0 * p.l2 * p.l2 * p.sigma1 * p.sigma1 / static_cast<double>(plan.B1);
  }
  const double c2 = 27.0 * l1sq * l1sq * p.L2 * p.L2 / static_cast<double>(plan.b2) +
                    27.0 * l1sq * l1sq / static_cast<double>(plan.s) +
                    3.0 * p.l2 * p.l2 * p.L1 * p.L1 / static_cast<double>(plan.b1);
  return {c1, c2};
}

enum class EstimatorKind { minibatch, spider };

inline const char* to_string(EstimatorKind k) {
  return k == EstimatorKind::minibatch ? "minibatch" : "spider";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "minibatch" || s == "mini-batch") return EstimatorKind::minibatch;
  if (s == "spider" || s == "sarah" || s == "spider-sarah") return EstimatorKind::spider;
  throw ConfigError("unknown estimator kind: " + s);
}

//! Monte-Carlo mean of ||v - F'(x)||^2 at each point of a path, over
//! independently seeded trials. The spider variant refreshes at the first
//! path point and recurses along the rest; the mini-batch variant estimates
//! each point independently. Requires exact gradients (finite-sum oracle).
inline std::vector<double> empirical_mse(const ProblemInstance& problem,
                                         const std::vector<Vector>& x_path, EstimatorKind kind,
                                         const BatchPlan& plan, int trials, std::uint64_t seed) {
  const CompositionOracle& oracle = *problem.oracle;
  require_finite_sum(oracle, "empirical_mse");
  if (trials < 1) throw ConfigError("empirical_mse: trials must be >= 1");
  if (x_path.empty()) throw ConfigError("empirical_mse: empty path");
  if (kind == EstimatorKind::spider && static_cast<Index>(x_path.size()) > plan.q)
    throw EpochBoundary("empirical_mse: path longer than one epoch");

  std::vector<Vector> exact(x_path.size());
  for (std::size_t i = 0; i < x_path.size(); ++i)
    exact[i] = exact_nested_gradient(problem, x_path[i]);

  std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(trials));
  parallel_for(trials, [&](std::int64_t t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> errs(x_path.size());
    if (kind == EstimatorKind::minibatch) {
      for (std::size_t i = 0; i < x_path.size(); ++i) {
        const EstimatorState st = minibatch_step(oracle, x_path[i], plan, rng);
        errs[i] = (st.v - exact[i]).squaredNorm();
      }
    } else {
      EstimatorState st = spider_refresh(oracle, x_path[0], plan, oracle.mode(), rng);
      errs[0] = (st.v - exact[0]).squaredNorm();
      for (std::size_t i = 1; i < x_path.size(); ++i) {
        st = spider_recurse(oracle, st, x_path[i], x_path[i - 1], plan, rng);
        errs[i] = (st.v - exact[i]).squaredNorm();
      }
    }
    per_trial[static_cast<std::size_t>(t)] = std::move(errs);
  });

  std::vector<double> mse(x_path.size(), 0.0);
  for (const auto& errs : per_trial)
    for (std::size_t i = 0; i < errs.size(); ++i) mse[i] += errs[i];
  for (double& v : mse) v /= static_cast<double>(trials);
  return mse;
}

}  // namespace nsadmm

#endif  // NSADMM_ESTIMATOR_HPP_
