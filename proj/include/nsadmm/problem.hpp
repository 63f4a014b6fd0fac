#ifndef NSADMM_PROBLEM_HPP_
#define NSADMM_PROBLEM_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/oracle.hpp"
#include "nsadmm/prox.hpp"
#include "nsadmm/spectral.hpp"

namespace nsadmm {

//! Smoothness and variance constants of the composition. l1/l2 are the
//! Lipschitz constants of the component maps, L1/L2 of their Jacobians,
//! LF of the composed objective's gradient; delta bounds the inner
//! function-value variance and sigma1/sigma2 the Jacobian/gradient variances.
struct SmoothnessProfile {
  double l1 = 1.0;
  double l2 = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  double LF = 1.0;
  double delta = 1.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;

  void validate() const {
    const double vals[] = {l1, l2, L1, L2, LF, delta, sigma1, sigma2};
    for (double v : vals)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("smoothness profile entries must be positive and finite");
  }
};

//! The constrained problem  min F(x) + sum_j reg_j(y_j)  s.t.  A x + sum_j B_j y_j = c.
struct ProblemInstance {
  Matrix A;                 // p x d
  std::vector<Matrix> B;    // m blocks, p x l_j
  Vector c;                 // p
  std::vector<Regularizer> regs;
  std::shared_ptr<const CompositionOracle> oracle;
  SpectralSummary spectral;
  SmoothnessProfile profile;

  int m() const noexcept { return static_cast<int>(B.size()); }
  int dim_x() const noexcept { return static_cast<int>(A.cols()); }
  int dim_p() const noexcept { return static_cast<int>(A.rows()); }
  int block_dim(int j) const { return static_cast<int>(B[static_cast<std::size_t>(j)].cols()); }

  void validate() const {
    if (!oracle) throw ConfigError("problem has no composition oracle");
    if (B.empty()) throw DimensionError("problem needs at least one y block");
    if (B.size() != regs.size())
      throw DimensionError("one regularizer required per y block");
    if (c.size() != A.rows()) throw DimensionError("c and A row counts differ");
    for (const Matrix& Bj : B)
      if (Bj.rows() != A.rows()) throw DimensionError("B block and A row counts differ");
    if (oracle->dim_x() != A.cols())
      throw DimensionError("oracle x dimension and A column count differ");
    for (const Regularizer& r : regs) r.validate();
    spectral.validate();
  }
};

//! Assembles a problem, computing and caching the spectral summary.
inline ProblemInstance make_problem(Matrix A, std::vector<Matrix> B, Vector c,
                                    std::vector<Regularizer> regs,
                                    std::shared_ptr<const CompositionOracle> oracle,
                                    std::optional<SmoothnessProfile> profile = std::nullopt) {
  ProblemInstance p;
  p.A = std::move(A);
  p.B = std::move(B);
  p.c = std::move(c);
  p.regs = std::move(regs);
  p.oracle = std::move(oracle);
  p.spectral = make_spectral_summary(p.A, p.B);
  if (profile) p.profile = *profile;
  p.validate();
  return p;
}

inline void require_finite_sum(const CompositionOracle& oracle, const char* who) {
  if (oracle.mode() != OracleMode::finite_sum)
    throw UnsupportedMode(std::string(who) + ": requires a finite-sum oracle");
}

//! Exact inner mean f1(x) over the full component set (finite-sum only).
inline Vector mean_f1_full(const CompositionOracle& oracle, const Vector& x) {
  require_finite_sum(oracle, "mean_f1_full");
  const auto idx = full_index_set(oracle.num_inner());
  return eval_f1(oracle, idx, x);
}

//! Exact objective value F(x) = mean_j f2_j(mean_i f1_i(x)) (finite-sum only).
inline double objective_value(const CompositionOracle& oracle, const Vector& x) {
  require_finite_sum(oracle, "objective_value");
  const Vector w = mean_f1_full(oracle, x);
  double acc = 0.0;
  for (Index j = 0; j < oracle.num_outer(); ++j) acc += oracle.f2_value(j, w);
  return acc / static_cast<double>(oracle.num_outer());
}

//! Chain-rule gradient F'(x) = (mean f1')' (mean f2')(mean f1(x)) with exact means.
inline Vector exact_nested_gradient(const ProblemInstance& problem, const Vector& x) {
  const CompositionOracle& oracle = *problem.oracle;
  require_finite_sum(oracle, "exact_nested_gradient");
  const auto inner = full_index_set(oracle.num_inner());
  const auto outer = full_index_set(oracle.num_outer());
  const Vector w = eval_f1(oracle, inner, x);
  const Matrix J = eval_jac_f1(oracle, inner, x);
  const Vector g = eval_grad_f2(oracle, outer, w);
  return J.transpose() * g;
}

//! F(x) + sum_j reg_j(y_j); no constraint term.
inline double full_objective(const ProblemInstance& problem, const Vector& x,
                             const std::vector<Vector>& y_blocks) {
  if (static_cast<int>(y_blocks.size()) != problem.m())
    throw DimensionError("full_objective: wrong number of y blocks");
  for (int j = 0; j < problem.m(); ++j)
    if (y_blocks[static_cast<std::size_t>(j)].size() != problem.block_dim(j))
      throw DimensionError("full_objective: y block dimension mismatch");
  double val = objective_value(*problem.oracle, x);
  for (int j = 0; j < problem.m(); ++j)
    val += eval_reg(problem.regs[static_cast<std::size_t>(j)],
                    y_blocks[static_cast<std::size_t>(j)]);
  return val;
}

//! Empirical smoothness profile from probe points. Maxima of component
//! Jacobian/gradient norms give l1, l2; difference quotients over probe pairs
//! give L1, L2; component scatter gives delta, sigma1, sigma2. Every measured
//! constant is inflated by `safety` and LF is the composition bound
//! l1^2 L2 + l2 L1 of the inflated values. A user-supplied profile bypasses
//! estimation entirely.
inline SmoothnessProfile estimate_profile(const CompositionOracle& oracle,
                                          const std::vector<Vector>& probe_points, Rng& rng,
                                          double safety = 1.5,
                                          std::optional<SmoothnessProfile> user = std::nullopt) {
  if (user) return *user;
  if (probe_points.size() < 2)
    throw InsufficientProbes("estimate_profile: need at least 2 probe points");

  constexpr Index kMaxComponents = 256;
  const auto sample_components = [&](Index pool) {
    if (oracle.mode() == OracleMode::finite_sum && pool <= kMaxComponents)
      return full_index_set(pool);
    return draw_batch(rng, pool, kMaxComponents);
  };
  const auto inner = sample_components(oracle.num_inner());
  const auto outer = sample_components(oracle.num_outer());
  const std::size_t P = probe_points.size();

  std::vector<Vector> w_probes(P);
  std::vector<std::vector<Matrix>> jacs(P);
  double l1 = 0.0, delta_sq = 0.0, sigma1_sq = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const Vector& x = probe_points[p];
    std::vector<Vector> vals;
    vals.reserve(inner.size());
    jacs[p].reserve(inner.size());
    Vector vmean = Vector::Zero(oracle.dim_inner());
    Matrix jmean = Matrix::Zero(oracle.dim_inner(), oracle.dim_x());
    for (Index i : inner) {
      vals.push_back(oracle.f1_component(i, x));
      jacs[p].push_back(oracle.f1_jacobian(i, x));
      vmean += vals.back();
      jmean += jacs[p].back();
      l1 = std::max(l1, operator_norm(jacs[p].back()));
    }
    vmean /= static_cast<double>(inner.size());
    jmean /= static_cast<double>(inner.size());
    double dsq = 0.0, ssq = 0.0;
    for (std::size_t t = 0; t < inner.size(); ++t) {
      dsq += (vals[t] - vmean).squaredNorm();
      ssq += (jacs[p][t] - jmean).squaredNorm();
    }
    delta_sq = std::max(delta_sq, dsq / static_cast<double>(inner.size()));
    sigma1_sq = std::max(sigma1_sq, ssq / static_cast<double>(inner.size()));
    w_probes[p] = vmean;
  }

  double l2 = 0.0, sigma2_sq = 0.0;
  std::vector<std::vector<Vector>> grads(P);
  for (std::size_t p = 0; p < P; ++p) {
    Vector gmean = Vector::Zero(oracle.dim_inner());
    grads[p].reserve(outer.size());
    for (Index j : outer) {
      grads[p].push_back(oracle.f2_gradient(j, w_probes[p]));
      gmean += grads[p].back();
      l2 = std::max(l2, grads[p].back().norm());
    }
    gmean /= static_cast<double>(outer.size());
    double ssq = 0.0;
    for (const Vector& g : grads[p]) ssq += (g - gmean).squaredNorm();
    sigma2_sq = std::max(sigma2_sq, ssq / static_cast<double>(outer.size()));
  }

  double L1 = 0.0, L2 = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t r = p + 1; r < P; ++r) {
      const double dx = (probe_points[p] - probe_points[r]).norm();
      if (dx > 1e-12) {
        for (std::size_t t = 0; t < inner.size(); ++t)
          L1 = std::max(L1, operator_norm(jacs[p][t] - jacs[r][t]) / dx);
      }
      const double dw = (w_probes[p] - w_probes[r]).norm();
      if (dw > 1e-12) {
        for (std::size_t t = 0; t < outer.size(); ++t)
          L2 = std::max(L2, (grads[p][t] - grads[r][t]).norm() / dw);
      }
    }
  }

  constexpr double kFloor = 1e-12;
  SmoothnessProfile out;
  out.l1 = std::max(safety * l1, kFloor);
  out.l2 = std::max(safety * l2, kFloor);
  out.L1 = std::max(safety * L1, kFloor);
  out.L2 = std::max(safety * L2, kFloor);
  out.delta = std::max(safety * std::sqrt(delta_sq), kFloor);
  out.sigma1 = std::max(safety * std::sqrt(sigma1_sq), kFloor);
  out.sigma2 = std::max(safety * std::sqrt(sigma2_sq), kFloor);
  out.LF = std::max(out.l1 * out.l1 * out.L2 + out.l2 * out.L1, kFloor);
  return out;
}

}  // namespace nsadmm

#endif  // NSADMM_PROBLEM_HPP_
