#ifndef NSADMM_GENERATORS_HPP_
#define NSADMM_GENERATORS_HPP_

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/oracle.hpp"
#include "nsadmm/problem.hpp"
#include "nsadmm/rng.hpp"

namespace nsadmm {

enum class GeneratorKind { quadratic_composition, logistic_composition, graph_guided_lasso };

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::quadratic_composition: return "quadratic-composition";
    case GeneratorKind::logistic_composition: return "logistic-composition";
    case GeneratorKind::graph_guided_lasso: return "graph-guided-lasso";
  }
  return "?";
}

inline GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "quadratic-composition" || s == "quadratic") return GeneratorKind::quadratic_composition;
  if (s == "logistic-composition" || s == "logistic") return GeneratorKind::logistic_composition;
  if (s == "graph-guided-lasso" || s == "graph") return GeneratorKind::graph_guided_lasso;
  throw ConfigError("unknown generator kind: " + s);
}

//! Recipe for a synthetic instance. For the graph generator, p counts the
//! constraint rows of A = [E; 0.1 I] and must exceed d; the graph then has
//! p - d edges. Radius is the certification region for the smoothness
//! profile: the attached constants are valid while ||x|| stays within it.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::quadratic_composition;
  int d = 8;
  int l = 4;
  int p = 6;
  Index n1 = 40;
  Index n2 = 20;
  int m = 1;
  double noise = 0.2;
  std::uint64_t seed = 0;
  std::vector<double> reg_weights = {0.1};
  std::vector<RegKind> reg_kinds = {};  //!< defaults to l1 for every block
  OracleMode mode = OracleMode::finite_sum;
  double radius = 10.0;

  void validate() const {
    if (d < 1 || l < 1 || p < 1 || n1 < 1 || n2 < 1 || m < 1)
      throw GeneratorError("generator dimensions and counts must be positive");
    if (static_cast<int>(reg_weights.size()) != m && reg_weights.size() != 1)
      throw GeneratorError("need one regularizer weight per block (or a single shared one)");
    if (!(noise >= 0.0)) throw GeneratorError("noise scale must be nonnegative");
    if (!(radius > 0.0)) throw GeneratorError("certification radius must be positive");
    if (!reg_kinds.empty() && static_cast<int>(reg_kinds.size()) != m && reg_kinds.size() != 1)
      throw GeneratorError("need one regularizer kind per block (or a single shared one)");
    if (kind == GeneratorKind::graph_guided_lasso) {
      if (p <= d) throw GeneratorError("graph generator needs p > d (p - d edges plus the ridge rows)");
      if (m != 1) throw GeneratorError("graph generator uses a single y block");
    }
  }
};

//! Affine inner components f1_i(x) = M_i x + b_i and quadratic outer
//! components f2_j(w) = 0.5 ||C_j w - d_j||^2. Component deviations are
//! centered, so the pool means equal the stored mean parameters exactly and
//! the composed objective is an analytic quadratic.
class QuadraticCompositionOracle final : public CompositionOracle {
 public:
  QuadraticCompositionOracle(std::vector<Matrix> M, std::vector<Vector> b, std::vector<Matrix> C,
                             std::vector<Vector> d, OracleMode mode)
      : M_(std::move(M)), b_(std::move(b)), C_(std::move(C)), d_(std::move(d)), mode_(mode) {
    if (M_.empty() || C_.empty() || M_.size() != b_.size() || C_.size() != d_.size())
      throw GeneratorError("quadratic oracle: inconsistent component lists");
  }

  OracleMode mode() const noexcept override { return mode_; }
  Index num_inner() const noexcept override { return static_cast<Index>(M_.size()); }
  Index num_outer() const noexcept override { return static_cast<Index>(C_.size()); }
  int dim_x() const noexcept override { return static_cast<int>(M_[0].cols()); }
  int dim_inner() const noexcept override { return static_cast<int>(M_[0].rows()); }

  Vector f1_component(Index i, const Vector& x) const override {
    return M_[idx(i, M_.size())] * x + b_[idx(i, b_.size())];
  }
  Matrix f1_jacobian(Index i, const Vector&) const override { return M_[idx(i, M_.size())]; }
  Vector f2_gradient(Index j, const Vector& w) const override {
    const auto& C = C_[idx(j, C_.size())];
    return C.transpose() * (C * w - d_[idx(j, d_.size())]);
  }
  double f2_value(Index j, const Vector& w) const override {
    const auto& C = C_[idx(j, C_.size())];
    return 0.5 * (C * w - d_[idx(j, d_.size())]).squaredNorm();
  }

  const std::vector<Matrix>& inner_maps() const noexcept { return M_; }
  const std::vector<Vector>& inner_offsets() const noexcept { return b_; }
  const std::vector<Matrix>& outer_maps() const noexcept { return C_; }
  const std::vector<Vector>& outer_targets() const noexcept { return d_; }

 private:
  static std::size_t idx(Index i, std::size_t n) {
    if (i < 0 || static_cast<std::size_t>(i) >= n)
      throw IndexError("quadratic oracle: component index out of range");
    return static_cast<std::size_t>(i);
  }
  std::vector<Matrix> M_;
  std::vector<Vector> b_;
  std::vector<Matrix> C_;
  std::vector<Vector> d_;
  OracleMode mode_;
};

//! Affine inner components with smoothed logistic outer losses
//! f2_j(w) = log(1 + exp(a_j'w - t_j)). Gradients are globally bounded by
//! ||a_j|| and gradient Lipschitz constants by ||a_j||^2/4.
class LogisticCompositionOracle final : public CompositionOracle {
 public:
  LogisticCompositionOracle(std::vector<Matrix> M, std::vector<Vector> b, std::vector<Vector> a,
                            std::vector<double> t, OracleMode mode)
      : M_(std::move(M)), b_(std::move(b)), a_(std::move(a)), t_(std::move(t)), mode_(mode) {
    if (M_.empty() || a_.empty() || M_.size() != b_.size() || a_.size() != t_.size())
      throw GeneratorError("logistic oracle: inconsistent component lists");
  }

  OracleMode mode() const noexcept override { return mode_; }
  Index num_inner() const noexcept override { return static_cast<Index>(M_.size()); }
  Index num_outer() const noexcept override { return static_cast<Index>(a_.size()); }
  int dim_x() const noexcept override { return static_cast<int>(M_[0].cols()); }
  int dim_inner() const noexcept override { return static_cast<int>(M_[0].rows()); }

  Vector f1_component(Index i, const Vector& x) const override {
    return M_[idx(i, M_.size())] * x + b_[idx(i, b_.size())];
  }
  Matrix f1_jacobian(Index i, const Vector&) const override { return M_[idx(i, M_.size())]; }
  Vector f2_gradient(Index j, const Vector& w) const override {
    const std::size_t jj = idx(j, a_.size());
    const double u = a_[jj].dot(w) - t_[jj];
    return sigmoid(u) * a_[jj];
  }
  double f2_value(Index j, const Vector& w) const override {
    const std::size_t jj = idx(j, a_.size());
    const double u = a_[jj].dot(w) - t_[jj];
    // log(1+e^u), overflow-safe
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
  }

  const std::vector<Vector>& outer_directions() const noexcept { return a_; }

 private:
  static double sigmoid(double u) { return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }
  static std::size_t idx(Index i, std::size_t n) {
    if (i < 0 || static_cast<std::size_t>(i) >= n)
      throw IndexError("logistic oracle: component index out of range");
    return static_cast<std::size_t>(i);
  }
  std::vector<Matrix> M_;
  std::vector<Vector> b_;
  std::vector<Vector> a_;
  std::vector<double> t_;
  OracleMode mode_;
};

//! Edge incidence matrix of an undirected graph: one row per edge with +1 at
//! the lower endpoint and -1 at the upper one.
inline Matrix edge_incidence(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  Matrix E = Matrix::Zero(static_cast<Eigen::Index>(edges.size()), num_nodes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes || u == v)
      throw GeneratorError("edge_incidence: bad edge");
    E(static_cast<Eigen::Index>(e), u) = 1.0;
    E(static_cast<Eigen::Index>(e), v) = -1.0;
  }
  return E;
}

namespace detail {

inline Matrix gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * rng.normal();
  return M;
}

inline Vector gaussian_vector(Rng& rng, int n, double scale) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

//! Random p x d matrix with singular values spread over [1, 2], so A'A has
//! eigenvalues in [1, 4] and a small, known condition number.
inline Matrix conditioned_matrix(Rng& rng, int p, int d) {
  if (p < d) throw GeneratorError("constraint matrix needs p >= d for full column rank");
  const Matrix GU = gaussian_matrix(rng, p, d, 1.0);
  const Matrix GV = gaussian_matrix(rng, d, d, 1.0);
  const Matrix U = Eigen::HouseholderQR<Matrix>(GU).householderQ() * Matrix::Identity(p, d);
  const Matrix V = Eigen::HouseholderQR<Matrix>(GV).householderQ() * Matrix::Identity(d, d);
  Vector sv(d);
  for (int i = 0; i < d; ++i)
    sv[i] = d == 1 ? 1.5 : 1.0 + static_cast<double>(i) / static_cast<double>(d - 1);
  return U * sv.asDiagonal() * V.transpose();
}

//! Centers a family of matrices/vectors so the pool mean equals `mean`.
template <typename T>
std::vector<T> centered_family(Rng& rng, const T& mean, Index count, double noise,
                               int rows, int cols) {
  std::vector<T> out(static_cast<std::size_t>(count));
  if (count == 1 || noise == 0.0) {
    for (auto& t : out) t = mean;
    return out;
  }
  T dev_mean;
  if constexpr (std::is_same_v<T, Matrix>) dev_mean = Matrix::Zero(rows, cols);
  else dev_mean = Vector::Zero(rows);
  for (auto& t : out) {
    if constexpr (std::is_same_v<T, Matrix>) t = gaussian_matrix(rng, rows, cols, noise);
    else t = gaussian_vector(rng, rows, noise);
    dev_mean += t;
  }
  dev_mean /= static_cast<double>(count);
  for (auto& t : out) t = mean + (t - dev_mean);
  return out;
}

//! Largest eigenvalue of a symmetric PSD matrix.
inline double psd_norm(const Matrix& S) {
  return S.norm() == 0.0 ? 0.0 : nsadmm::detail::psd_top_eigenvalue(S);
}

//! sup over ||u|| <= R of the quadratic u'Qu + 2 p'u + c (Q PSD).
inline double quad_sup(const Matrix& Q, const Vector& p, double c, double R) {
  return psd_norm(Q) * R * R + 2.0 * p.norm() * R + std::max(c, 0.0);
}

struct AffineFamily {
  std::vector<Matrix> M;
  std::vector<Vector> b;
  Matrix M_mean;
  Vector b_mean;
};

inline AffineFamily make_affine_family(Rng& rng, int l, int d, Index n1, double noise) {
  AffineFamily fam;
  fam.M_mean = gaussian_matrix(rng, l, d, 1.0 / std::sqrt(static_cast<double>(d)));
  fam.b_mean = gaussian_vector(rng, l, 0.5);
  fam.M = centered_family<Matrix>(rng, fam.M_mean, n1, noise / std::sqrt(static_cast<double>(d * l)), l, d);
  fam.b = centered_family<Vector>(rng, fam.b_mean, n1, noise / std::sqrt(static_cast<double>(l)), l, 0);
  return fam;
}

//! Exact profile of the affine inner family over ||x|| <= R: Lipschitz and
//! variance constants computed from the component parameters, no sampling.
inline void certify_inner(const AffineFamily& fam, double R, SmoothnessProfile* prof) {
  const Index n1 = static_cast<Index>(fam.M.size());
  double l1 = 0.0;
  Matrix Q = Matrix::Zero(fam.M_mean.cols(), fam.M_mean.cols());
  Vector pv = Vector::Zero(fam.M_mean.cols());
  double c0 = 0.0;
  double s1 = 0.0;
  for (Index i = 0; i < n1; ++i) {
    const Matrix D = fam.M[static_cast<std::size_t>(i)] - fam.M_mean;
    const Vector e = fam.b[static_cast<std::size_t>(i)] - fam.b_mean;
    l1 = std::max(l1, operator_norm(fam.M[static_cast<std::size_t>(i)]));
    Q += D.transpose() * D;
    pv += D.transpose() * e;
    c0 += e.squaredNorm();
    s1 += D.squaredNorm();
  }
  const double n = static_cast<double>(n1);
  prof->l1 = std::max(l1, 1e-12);
  prof->L1 = 1e-9;  // constant Jacobians
  prof->delta = std::sqrt(quad_sup(Q / n, pv / n, c0 / n, R)) + 1e-12;
  prof->sigma1 = std::sqrt(s1 / n) + 1e-12;
}

}  // namespace detail

//! Builds a synthetic instance with a certified smoothness profile attached.
//! Regeneration with the same spec is bit-identical.
inline ProblemInstance generate_instance(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  const auto weight_of = [&](int j) {
    return spec.reg_weights.size() == 1 ? spec.reg_weights[0]
                                        : spec.reg_weights[static_cast<std::size_t>(j)];
  };
  const auto kind_of = [&](int j) {
    if (spec.reg_kinds.empty()) return RegKind::l1;
    return spec.reg_kinds.size() == 1 ? spec.reg_kinds[0]
                                      : spec.reg_kinds[static_cast<std::size_t>(j)];
  };

  // Inner affine family, shared by all generator kinds.
  detail::AffineFamily fam = detail::make_affine_family(rng, spec.l, spec.d, spec.n1, spec.noise);
  SmoothnessProfile prof;
  detail::certify_inner(fam, spec.radius, &prof);
  // Reachable inner-value radius for ||x|| <= radius.
  double r_w = 0.0;
  for (std::size_t i = 0; i < fam.M.size(); ++i)
    r_w = std::max(r_w, operator_norm(fam.M[i]) * spec.radius + fam.b[i].norm());

  std::shared_ptr<const CompositionOracle> oracle;
  if (spec.kind == GeneratorKind::logistic_composition) {
    std::vector<Vector> a(static_cast<std::size_t>(spec.n2));
    std::vector<double> t(static_cast<std::size_t>(spec.n2));
    Matrix a_outer = Matrix::Zero(spec.l, spec.l);
    double l2 = 0.0;
    for (auto& ai : a) {
      ai = detail::gaussian_vector(rng, spec.l, 1.0 / std::sqrt(static_cast<double>(spec.l)));
      l2 = std::max(l2, ai.norm());
      a_outer += ai * ai.transpose();
    }
    for (auto& ti : t) ti = rng.normal();
    a_outer /= static_cast<double>(spec.n2);
    prof.l2 = l2 + 1e-12;
    prof.L2 = l2 * l2 / 4.0 + 1e-12;
    // Gradients live in the ball of radius max ||a_j||; scatter is at most a
    // diameter apart.
    prof.sigma2 = 2.0 * l2 + 1e-12;
    prof.LF = 0.25 * detail::psd_norm(Matrix(fam.M_mean.transpose() * a_outer * fam.M_mean)) + 1e-12;
    oracle = std::make_shared<LogisticCompositionOracle>(fam.M, fam.b, std::move(a), std::move(t),
                                                         spec.mode);
  } else {
    Matrix C_mean = detail::gaussian_matrix(rng, spec.l, spec.l,
                                            1.0 / std::sqrt(static_cast<double>(spec.l)));
    Vector d_mean = detail::gaussian_vector(rng, spec.l, 0.5);
    // Keep the map-noise a quarter of the offset-noise so the gradient
    // variance stays nearly constant over the certification region.
    auto C = detail::centered_family<Matrix>(rng, C_mean, spec.n2,
                                             0.25 * spec.noise / static_cast<double>(spec.l),
                                             spec.l, spec.l);
    auto dv = detail::centered_family<Vector>(rng, d_mean, spec.n2,
                                              spec.noise / std::sqrt(static_cast<double>(spec.l)),
                                              spec.l, 0);
    // Exact outer constants over ||w|| <= r_w.
    Matrix H_mean = Matrix::Zero(spec.l, spec.l);
    Vector e_mean = Vector::Zero(spec.l);
    double L2 = 0.0;
    for (std::size_t j = 0; j < C.size(); ++j) {
      H_mean += C[j].transpose() * C[j];
      e_mean += C[j].transpose() * dv[j];
      L2 = std::max(L2, detail::psd_norm(Matrix(C[j].transpose() * C[j])));
    }
    H_mean /= static_cast<double>(spec.n2);
    e_mean /= static_cast<double>(spec.n2);
    double l2 = 0.0;
    Matrix Q2 = Matrix::Zero(spec.l, spec.l);
    Vector p2 = Vector::Zero(spec.l);
    double c2 = 0.0;
    for (std::size_t j = 0; j < C.size(); ++j) {
      const Matrix Hj = C[j].transpose() * C[j];
      const Vector ej = C[j].transpose() * dv[j];
      l2 = std::max(l2, detail::psd_norm(Hj) * r_w + ej.norm());
      const Matrix DH = Hj - H_mean;
      const Vector de = ej - e_mean;
      Q2 += DH.transpose() * DH;
      p2 -= DH.transpose() * de;
      c2 += de.squaredNorm();
    }
    const double n2 = static_cast<double>(spec.n2);
    prof.l2 = l2 + 1e-12;
    prof.L2 = L2 + 1e-12;
    prof.sigma2 = std::sqrt(detail::quad_sup(Q2 / n2, p2 / n2, c2 / n2, r_w)) + 1e-12;
    prof.LF = detail::psd_norm(Matrix(fam.M_mean.transpose() * H_mean * fam.M_mean)) + 1e-12;
    oracle = std::make_shared<QuadraticCompositionOracle>(fam.M, fam.b, std::move(C),
                                                          std::move(dv), spec.mode);
  }

  Matrix A;
  std::vector<Matrix> B;
  Vector c;
  std::vector<Regularizer> regs;
  if (spec.kind == GeneratorKind::graph_guided_lasso) {
    const int edges_needed = spec.p - spec.d;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(edges_needed));
    // Random spanning path first, extra random edges after.
    std::vector<int> order(static_cast<std::size_t>(spec.d));
    for (int i = 0; i < spec.d; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = spec.d - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
    for (int i = 0; i + 1 < spec.d && static_cast<int>(edges.size()) < edges_needed; ++i)
      edges.emplace_back(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i + 1)]);
    while (static_cast<int>(edges.size()) < edges_needed) {
      const int u = static_cast<int>(rng.uniform_index(spec.d));
      const int v = static_cast<int>(rng.uniform_index(spec.d));
      if (u != v) edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    const Matrix E = edge_incidence(spec.d, edges);
    A.resize(spec.p, spec.d);
    A.topRows(E.rows()) = E;
    A.bottomRows(spec.d) = 0.1 * Matrix::Identity(spec.d, spec.d);
    B.push_back(-Matrix::Identity(spec.p, spec.p));
    c = Vector::Zero(spec.p);
    regs.push_back({kind_of(0), weight_of(0)});
  } else {
    A = detail::conditioned_matrix(rng, std::max(spec.p, spec.d), spec.d);
    for (int j = 0; j < spec.m; ++j) {
      B.push_back(detail::gaussian_matrix(rng, static_cast<int>(A.rows()), spec.l,
                                          1.0 / std::sqrt(static_cast<double>(A.rows()))));
      regs.push_back({kind_of(j), weight_of(j)});
    }
    c = detail::gaussian_vector(rng, static_cast<int>(A.rows()), 0.5);
  }

  return make_problem(std::move(A), std::move(B), std::move(c), std::move(regs),
                      std::move(oracle), prof);
}

inline ProblemInstance generate_instance(const GeneratorSpec& spec) {
  Rng rng(spec.seed);
  return generate_instance(spec, rng);
}

}  // namespace nsadmm

#endif  // NSADMM_GENERATORS_HPP_
