#ifndef NSADMM_SPECTRAL_HPP_
#define NSADMM_SPECTRAL_HPP_

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/rng.hpp"

namespace nsadmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct SpectralBounds {
  double sigma_min = 0.0;  //!< smallest eigenvalue of M'M
  double sigma_max = 0.0;  //!< largest eigenvalue of M'M
};

namespace detail {

constexpr double kPowerIterTol = 1e-10;
constexpr long kPowerIterMax = 10000;

//! Largest eigenvalue of a symmetric positive semidefinite matrix by power
//! iteration, to relative tolerance kPowerIterTol on the Rayleigh quotient.
inline double psd_top_eigenvalue(const Matrix& S) {
  const auto n = S.rows();
  Rng rng(0x5eedb07u ^ static_cast<std::uint64_t>(n));
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v.normalize();

  double lambda = 0.0;
  for (long it = 0; it < kPowerIterMax; ++it) {
    Vector w = S * v;
    const double wn = w.norm();
    if (wn <= 1e-300) return 0.0;  // v lies in the kernel; S is (numerically) zero on it
    const double next = v.dot(w);
    w /= wn;
    const double change = std::abs(next - lambda);
    lambda = next;
    v = w;
    if (it > 0 && change <= kPowerIterTol * std::max(1.0, std::abs(lambda))) return lambda;
  }
  throw NumericalFailure("power iteration did not converge", kPowerIterMax);
}

}  // namespace detail

//! Extreme eigenvalues of M'M. The top eigenvalue comes from power iteration
//! on M'M; the bottom one from power iteration on the shifted matrix
//! sigma_max*I - M'M, which avoids inverse iteration.
inline SpectralBounds spectral_bounds(const Matrix& M) {
  if (M.size() == 0 || M.norm() == 0.0) throw InvalidMatrix("spectral_bounds: zero matrix");
  const Matrix S = M.transpose() * M;
  SpectralBounds out;
  out.sigma_max = detail::psd_top_eigenvalue(S);
  Matrix shifted = -S;
  shifted.diagonal().array() += out.sigma_max;
  const double gap = detail::psd_top_eigenvalue(shifted);
  out.sigma_min = std::max(0.0, out.sigma_max - gap);
  return out;
}

//! Spectral norm (largest singular value) of M.
inline double operator_norm(const Matrix& M) {
  if (M.size() == 0 || M.norm() == 0.0) return 0.0;
  return std::sqrt(detail::psd_top_eigenvalue(Matrix(M.transpose() * M)));
}

//! Cached spectral data of the coupling matrices.
struct SpectralSummary {
  double sigma_min_A = 0.0;
  double sigma_max_A = 0.0;
  std::vector<double> sigma_max_B;  //!< per block, largest eigenvalue of Bj'Bj
  double kappa_G = 1.0;             //!< sigma_max_A / sigma_min_A

  void validate() const {
    if (!(sigma_min_A > 0.0))
      throw InvalidMatrix("constraint matrix A must have full column rank (sigma_min of A'A is 0)");
    if (!(sigma_min_A <= sigma_max_A) || !(kappa_G >= 1.0 - 1e-12))
      throw InvalidMatrix("inconsistent spectral summary");
  }
};

inline SpectralSummary make_spectral_summary(const Matrix& A, const std::vector<Matrix>& B) {
  SpectralSummary s;
  const SpectralBounds a = spectral_bounds(A);
  s.sigma_min_A = a.sigma_min;
  s.sigma_max_A = a.sigma_max;
  s.sigma_max_B.reserve(B.size());
  for (const Matrix& Bj : B)
    s.sigma_max_B.push_back(Bj.norm() == 0.0 ? 0.0 : spectral_bounds(Bj).sigma_max);
  s.kappa_G = s.sigma_min_A > 0.0 ? s.sigma_max_A / s.sigma_min_A
                                  : std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace nsadmm

#endif  // NSADMM_SPECTRAL_HPP_
