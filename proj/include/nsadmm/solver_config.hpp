#ifndef NSADMM_SOLVER_CONFIG_HPP_
#define NSADMM_SOLVER_CONFIG_HPP_

#include <cstdint>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/estimator.hpp"
#include "nsadmm/problem.hpp"

namespace nsadmm {

//! All scalars the iteration needs. The linearization metrics
//! G = r I - rho eta A'A and H_j = tau_j I - rho B_j'B_j are never
//! materialized; r and tau_j define them implicitly and must satisfy
//! r >= rho eta sigma_max_A + 1 and tau_j >= rho sigma_max_Bj + 1 so that
//! G and every H_j dominate the identity.
struct SolverConfig {
  double rho = 1.0;             //!< augmented-Lagrangian penalty
  double eta = 0.1;             //!< primal step scale
  double alpha = 0.5;           //!< step fraction in (0,1) used by calibration
  double r = 1.0;               //!< x-linearization scalar
  std::vector<double> tau;      //!< y-linearization scalars, one per block
  BatchPlan plan;
  Index K = 1000;               //!< iteration budget
  EstimatorKind estimator = EstimatorKind::spider;
  OracleMode mode = OracleMode::finite_sum;
  std::uint64_t seed = 0;

  double sigma_min_G(const SpectralSummary& s) const { return r - rho * eta * s.sigma_max_A; }
  double sigma_max_G(const SpectralSummary& s) const { return r - rho * eta * s.sigma_min_A; }
  double sigma_min_H(const SpectralSummary& s, int j) const {
    return tau[static_cast<std::size_t>(j)] - rho * s.sigma_max_B[static_cast<std::size_t>(j)];
  }
  double sigma_max_H(const SpectralSummary& s, int j) const {
    return tau[static_cast<std::size_t>(j)];
  }
};

inline void validate_config(const ProblemInstance& problem, const SolverConfig& cfg) {
  if (!(cfg.rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  cfg.plan.validate();
  if (static_cast<int>(cfg.tau.size()) != problem.m())
    throw ConfigError("one tau per y block required");
  constexpr double kSlack = 1e-9;
  if (cfg.r < cfg.rho * cfg.eta * problem.spectral.sigma_max_A + 1.0 - kSlack)
    throw ConfigError("r violates r >= rho*eta*sigma_max_A + 1; G would lose identity dominance");
  for (int j = 0; j < problem.m(); ++j) {
    const double bound =
        cfg.rho * problem.spectral.sigma_max_B[static_cast<std::size_t>(j)] + 1.0;
    if (cfg.tau[static_cast<std::size_t>(j)] < bound - kSlack)
      throw ConfigError("tau[" + std::to_string(j) + "] violates tau >= rho*sigma_max_B + 1");
  }
  if (cfg.mode == OracleMode::finite_sum && cfg.estimator == EstimatorKind::spider) {
    if (cfg.plan.S != problem.oracle->num_inner() || cfg.plan.B1 != problem.oracle->num_inner() ||
        cfg.plan.B2 != problem.oracle->num_outer())
      throw ConfigError("finite-sum spider refresh must sweep the full component sets");
  }
}

}  // namespace nsadmm

#endif  // NSADMM_SOLVER_CONFIG_HPP_
