#ifndef NSADMM_ORACLE_HPP_
#define NSADMM_ORACLE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/rng.hpp"

namespace nsadmm {

using Index = std::int64_t;

enum class OracleMode { finite_sum, online };

inline const char* to_string(OracleMode m) {
  return m == OracleMode::finite_sum ? "finite-sum" : "online";
}

inline OracleMode oracle_mode_from_string(const std::string& s) {
  if (s == "finite-sum" || s == "finite_sum") return OracleMode::finite_sum;
  if (s == "online") return OracleMode::online;
  throw ConfigError("unknown mode: " + s);
}

//! Component access for the two-level composition
//!     F(x) = mean_j f2_j( mean_i f1_i(x) ).
//!
//! Component evaluations are deterministic functions of (index, input). In
//! online mode the component pool acts as the sampling population and index
//! draws come from the caller's seeded stream; full-population sweeps are
//! reserved for finite-sum mode.
class CompositionOracle {
 public:
  virtual ~CompositionOracle() = default;

  virtual OracleMode mode() const noexcept = 0;
  virtual Index num_inner() const noexcept = 0;  //!< N1
  virtual Index num_outer() const noexcept = 0;  //!< N2
  virtual int dim_x() const noexcept = 0;        //!< d
  virtual int dim_inner() const noexcept = 0;    //!< l

  virtual Eigen::VectorXd f1_component(Index i, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd f1_jacobian(Index i, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd f2_gradient(Index j, const Eigen::VectorXd& w) const = 0;
  virtual double f2_value(Index j, const Eigen::VectorXd& w) const = 0;
};

namespace detail {

inline void check_batch(const CompositionOracle& oracle, std::span<const Index> batch,
                        Index pool, const char* who) {
  if (batch.empty()) throw EmptyBatch(std::string(who) + ": empty index set");
  if (oracle.mode() == OracleMode::finite_sum) {
    for (Index i : batch)
      if (i < 0 || i >= pool)
        throw IndexError(std::string(who) + ": component index " + std::to_string(i) +
                         " out of range [0, " + std::to_string(pool) + ")");
  }
}

}  // namespace detail

//! Mean of f1 components over an index set (with multiplicity).
inline Eigen::VectorXd eval_f1(const CompositionOracle& oracle, std::span<const Index> batch,
                               const Eigen::VectorXd& x) {
  detail::check_batch(oracle, batch, oracle.num_inner(), "eval_f1");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(oracle.dim_inner());
  for (Index i : batch) acc += oracle.f1_component(i, x);
  return acc / static_cast<double>(batch.size());
}

//! Mean Jacobian of f1 components over an index set.
inline Eigen::MatrixXd eval_jac_f1(const CompositionOracle& oracle, std::span<const Index> batch,
                                   const Eigen::VectorXd& x) {
  detail::check_batch(oracle, batch, oracle.num_inner(), "eval_jac_f1");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(oracle.dim_inner(), oracle.dim_x());
  for (Index i : batch) acc += oracle.f1_jacobian(i, x);
  return acc / static_cast<double>(batch.size());
}

//! Mean gradient of f2 components at w over an index set.
inline Eigen::VectorXd eval_grad_f2(const CompositionOracle& oracle, std::span<const Index> batch,
                                    const Eigen::VectorXd& w) {
  detail::check_batch(oracle, batch, oracle.num_outer(), "eval_grad_f2");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(oracle.dim_inner());
  for (Index j : batch) acc += oracle.f2_gradient(j, w);
  return acc / static_cast<double>(batch.size());
}

//! All indices 0..n-1, used for exact full-population means.
inline std::vector<Index> full_index_set(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

//! Draws `size` indices uniformly with replacement from [0, pool).
inline std::vector<Index> draw_batch(Rng& rng, Index pool, Index size) {
  std::vector<Index> idx(static_cast<std::size_t>(size));
  for (auto& i : idx) i = rng.uniform_index(pool);
  return idx;
}

}  // namespace nsadmm

#endif  // NSADMM_ORACLE_HPP_
