#ifndef NSADMM_PROX_HPP_
#define NSADMM_PROX_HPP_

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "nsadmm/errors.hpp"

namespace nsadmm {

enum class RegKind { zero, l1, l2_norm, squared_l2 };

inline const char* to_string(RegKind k) {
  switch (k) {
    case RegKind::zero: return "zero";
    case RegKind::l1: return "l1";
    case RegKind::l2_norm: return "l2-norm";
    case RegKind::squared_l2: return "squared-l2";
  }
  return "?";
}

inline RegKind reg_kind_from_string(const std::string& s) {
  if (s == "zero") return RegKind::zero;
  if (s == "l1") return RegKind::l1;
  if (s == "l2-norm" || s == "l2_norm") return RegKind::l2_norm;
  if (s == "squared-l2" || s == "squared_l2") return RegKind::squared_l2;
  throw ConfigError("unknown regularizer kind: " + s);
}

//! Convex block penalty: weight * base(.), base one of the closed-form kinds.
struct Regularizer {
  RegKind kind = RegKind::zero;
  double weight = 0.0;

  void validate() const {
    if (weight < 0.0) throw ConfigError("regularizer weight must be nonnegative");
  }
};

inline double eval_reg(const Regularizer& reg, const Eigen::VectorXd& y) {
  switch (reg.kind) {
    case RegKind::zero: return 0.0;
    case RegKind::l1: return reg.weight * y.lpNorm<1>();
    case RegKind::l2_norm: return reg.weight * y.norm();
    case RegKind::squared_l2: return reg.weight * y.squaredNorm();
  }
  return 0.0;
}

//! prox_{t*reg}(v) = argmin_u (1/2t)||u - v||^2 + reg(u).
//! Soft-threshold ties resolve to exactly 0.
inline Eigen::VectorXd prox(const Regularizer& reg, double t, const Eigen::VectorXd& v) {
  if (!(t > 0.0)) throw InvalidStep("prox: step must be positive");
  const double tl = t * reg.weight;
  switch (reg.kind) {
    case RegKind::zero:
      return v;
    case RegKind::l1: {
      Eigen::VectorXd out(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]) - tl;
        out[i] = a > 0.0 ? (v[i] > 0.0 ? a : -a) : 0.0;
      }
      return out;
    }
    case RegKind::l2_norm: {
      const double n = v.norm();
      if (n <= tl) return Eigen::VectorXd::Zero(v.size());
      return v * (1.0 - tl / n);
    }
    case RegKind::squared_l2:
      return v / (1.0 + 2.0 * tl);
  }
  return v;
}

//! Euclidean distance from g to the subdifferential of reg at y.
inline double subdiff_distance(const Regularizer& reg, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& g) {
  const double lam = reg.weight;
  switch (reg.kind) {
    case RegKind::zero:
      return g.norm();
    case RegKind::l1: {
      // Coordinate-wise: {lam*sign(y_i)} when y_i != 0, the interval
      // [-lam, lam] when y_i == 0.
      double sq = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        double di;
        if (y[i] != 0.0) {
          di = g[i] - (y[i] > 0.0 ? lam : -lam);
        } else {
          di = std::max(std::abs(g[i]) - lam, 0.0);
        }
        sq += di * di;
      }
      return std::sqrt(sq);
    }
    case RegKind::l2_norm: {
      const double n = y.norm();
      if (n > 0.0) return (g - (lam / n) * y).norm();
      return std::max(g.norm() - lam, 0.0);  // subdifferential at 0 is the lam-ball
    }
    case RegKind::squared_l2:
      return (g - 2.0 * lam * y).norm();
  }
  return g.norm();
}

}  // namespace nsadmm

#endif  // NSADMM_PROX_HPP_
