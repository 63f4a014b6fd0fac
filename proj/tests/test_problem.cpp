#include <catch2/catch_amalgamated.hpp>

#include "nsadmm/problem.hpp"

#include <memory>
#include <vector>

#include "nsadmm/diagnostics.hpp"
#include "nsadmm/generators.hpp"
#include "test_helpers.hpp"

using nsadmm::Index;
using nsadmm::Matrix;
using nsadmm::Vector;

namespace {

nsadmm::ProblemInstance quadratic_problem(std::uint64_t seed) {
  return nsadmm_test::small_quadratic_problem(seed);
}

}  // namespace

TEST_CASE("batch means reduce to components") {
  const auto problem = quadratic_problem(1);
  const auto& oracle = *problem.oracle;
  nsadmm::Rng rng(2);
  const Vector x = nsadmm_test::random_vector(rng, oracle.dim_x());

  const std::vector<Index> single = {3};
  CHECK((nsadmm::eval_f1(oracle, single, x) - oracle.f1_component(3, x)).norm() == 0.0);
  CHECK((nsadmm::eval_jac_f1(oracle, single, x) - oracle.f1_jacobian(3, x)).norm() == 0.0);
  const Vector w = nsadmm_test::random_vector(rng, oracle.dim_inner());
  const std::vector<Index> single2 = {5};
  CHECK((nsadmm::eval_grad_f2(oracle, single2, w) - oracle.f2_gradient(5, w)).norm() == 0.0);

  const std::vector<Index> dup = {4, 4};
  CHECK((nsadmm::eval_f1(oracle, dup, x) - oracle.f1_component(4, x)).norm() < 1e-15);
}

TEST_CASE("full-batch mean equals the direct summation oracle") {
  const auto problem = quadratic_problem(3);
  const auto* q =
      dynamic_cast<const nsadmm::QuadraticCompositionOracle*>(problem.oracle.get());
  REQUIRE(q != nullptr);
  nsadmm::Rng rng(4);
  const Vector x = nsadmm_test::random_vector(rng, q->dim_x());

  Matrix M_bar = Matrix::Zero(q->dim_inner(), q->dim_x());
  Vector b_bar = Vector::Zero(q->dim_inner());
  for (std::size_t i = 0; i < q->inner_maps().size(); ++i) {
    M_bar += q->inner_maps()[i];
    b_bar += q->inner_offsets()[i];
  }
  M_bar /= static_cast<double>(q->inner_maps().size());
  b_bar /= static_cast<double>(q->inner_maps().size());

  const auto idx = nsadmm::full_index_set(q->num_inner());
  CHECK((nsadmm::eval_f1(*q, idx, x) - (M_bar * x + b_bar)).norm() < 1e-12);
  CHECK((nsadmm::eval_jac_f1(*q, idx, x) - M_bar).norm() < 1e-12);
}

TEST_CASE("mean gradient of identical quadratic components is the point itself") {
  const auto oracle = nsadmm_test::identity_oracle(4);
  nsadmm::Rng rng(5);
  const Vector w = nsadmm_test::random_vector(rng, 4);
  const std::vector<Index> batch = {0, 0, 0};
  CHECK((nsadmm::eval_grad_f2(*oracle, batch, w) - w).norm() < 1e-14);
}

TEST_CASE("batch means are order invariant") {
  const auto problem = quadratic_problem(6);
  const auto& oracle = *problem.oracle;
  nsadmm::Rng rng(7);
  const Vector x = nsadmm_test::random_vector(rng, oracle.dim_x());
  auto idx = nsadmm::full_index_set(oracle.num_inner());
  const Vector a = nsadmm::eval_f1(oracle, idx, x);
  std::reverse(idx.begin(), idx.end());
  const Vector b = nsadmm::eval_f1(oracle, idx, x);
  CHECK((a - b).norm() < 1e-13);
}

TEST_CASE("empty batches are rejected") {
  const auto problem = quadratic_problem(8);
  const std::vector<Index> empty;
  const Vector x = Vector::Zero(problem.oracle->dim_x());
  CHECK_THROWS_AS(nsadmm::eval_f1(*problem.oracle, empty, x), nsadmm::EmptyBatch);
  CHECK_THROWS_AS(nsadmm::eval_jac_f1(*problem.oracle, empty, x), nsadmm::EmptyBatch);
  CHECK_THROWS_AS(nsadmm::eval_grad_f2(*problem.oracle, empty, x), nsadmm::EmptyBatch);
}

TEST_CASE("chain rule on the linear/quadratic composition") {
  const auto oracle = nsadmm_test::identity_oracle(5);
  nsadmm::Rng rng(9);
  const Matrix M = nsadmm_test::random_matrix(rng, 5, 5);
  std::vector<Matrix> M1 = {M};
  std::vector<Vector> b1 = {Vector::Zero(5)};
  std::vector<Matrix> C1 = {Matrix::Identity(5, 5)};
  std::vector<Vector> d1 = {Vector::Zero(5)};
  auto lin = std::make_shared<nsadmm::QuadraticCompositionOracle>(
      M1, b1, C1, d1, nsadmm::OracleMode::finite_sum);
  auto problem = nsadmm::make_problem(Matrix::Identity(5, 5), {Matrix::Zero(5, 2)},
                                      Vector::Zero(5), {{nsadmm::RegKind::zero, 0.0}}, lin);
  const Vector x = nsadmm_test::random_vector(rng, 5);
  // f1 = Mx, f2 = 0.5||w||^2  =>  F' = M'Mx
  CHECK((nsadmm::exact_nested_gradient(problem, x) - M.transpose() * (M * x)).norm() < 1e-12);

  // f1(0) = 0 and f2 minimized at 0 => gradient vanishes at the origin.
  CHECK(nsadmm::exact_nested_gradient(problem, Vector::Zero(5)).norm() == 0.0);
}

TEST_CASE("chain rule agrees with central finite differences") {
  const auto problem = quadratic_problem(10);
  nsadmm::Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Vector x = nsadmm_test::random_vector(rng, problem.dim_x());
    const Vector g = nsadmm::exact_nested_gradient(problem, x);
    const Vector fd = nsadmm::finite_diff_gradient(problem, x, 1e-5);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("exact operations reject online oracles") {
  const auto problem = nsadmm_test::small_quadratic_problem(12, nsadmm::OracleMode::online);
  const Vector x = Vector::Zero(problem.dim_x());
  CHECK_THROWS_AS(nsadmm::exact_nested_gradient(problem, x), nsadmm::UnsupportedMode);
  CHECK_THROWS_AS(nsadmm::objective_value(*problem.oracle, x), nsadmm::UnsupportedMode);
}

TEST_CASE("full objective") {
  const auto problem = quadratic_problem(13);
  nsadmm::Rng rng(14);
  const Vector x = nsadmm_test::random_vector(rng, problem.dim_x());
  std::vector<Vector> y = {nsadmm_test::random_vector(rng, problem.block_dim(0))};

  SECTION("zero weights leave F alone") {
    auto p2 = problem;
    p2.regs[0].weight = 0.0;
    CHECK(nsadmm::full_objective(p2, x, y) ==
          Catch::Approx(nsadmm::objective_value(*p2.oracle, x)));
  }

  SECTION("l1 block value") {
    auto p2 = problem;
    p2.regs[0] = {nsadmm::RegKind::l1, 1.0};
    Vector y1(problem.block_dim(0));
    y1.setZero();
    y1[0] = 1.0;
    y1[1] = -2.0;
    const std::vector<Vector> yb = {y1};
    CHECK(nsadmm::full_objective(p2, x, yb) ==
          Catch::Approx(nsadmm::objective_value(*p2.oracle, x) + 3.0));
  }

  SECTION("matches brute-force summation over all components") {
    const auto* q =
        dynamic_cast<const nsadmm::QuadraticCompositionOracle*>(problem.oracle.get());
    REQUIRE(q != nullptr);
    Vector w = Vector::Zero(q->dim_inner());
    for (Index i = 0; i < q->num_inner(); ++i) w += q->f1_component(i, x);
    w /= static_cast<double>(q->num_inner());
    double F = 0.0;
    for (Index j = 0; j < q->num_outer(); ++j)
      F += 0.5 * (q->outer_maps()[static_cast<std::size_t>(j)] * w -
                  q->outer_targets()[static_cast<std::size_t>(j)])
                     .squaredNorm();
    F /= static_cast<double>(q->num_outer());
    CHECK(nsadmm::full_objective(problem, x, y) ==
          Catch::Approx(F + nsadmm::eval_reg(problem.regs[0], y[0])).epsilon(1e-12));
  }

  SECTION("dimension mismatch is rejected") {
    const std::vector<Vector> bad = {Vector::Zero(problem.block_dim(0) + 1)};
    CHECK_THROWS_AS(nsadmm::full_objective(problem, x, bad), nsadmm::DimensionError);
  }
}

TEST_CASE("estimate_profile") {
  nsadmm::Rng rng(15);

  SECTION("identical linear components have zero scatter") {
    const auto oracle = nsadmm_test::identity_oracle(4);
    std::vector<Vector> probes = {nsadmm_test::random_vector(rng, 4),
                                  nsadmm_test::random_vector(rng, 4)};
    const auto prof = nsadmm::estimate_profile(*oracle, probes, rng, 1.0);
    CHECK(prof.sigma1 <= 1e-12);
    CHECK(prof.delta <= 1e-12);
  }

  SECTION("single linear component reports its spectral norm") {
    const Matrix M = nsadmm_test::random_matrix(rng, 3, 4);
    std::vector<Matrix> M1 = {M};
    std::vector<Vector> b1 = {Vector::Zero(3)};
    std::vector<Matrix> C1 = {Matrix::Identity(3, 3)};
    std::vector<Vector> d1 = {Vector::Zero(3)};
    const auto oracle = std::make_shared<nsadmm::QuadraticCompositionOracle>(
        M1, b1, C1, d1, nsadmm::OracleMode::finite_sum);
    std::vector<Vector> probes = {nsadmm_test::random_vector(rng, 4),
                                  nsadmm_test::random_vector(rng, 4)};
    const auto prof = nsadmm::estimate_profile(*oracle, probes, rng, 1.0);
    const auto ev = nsadmm_test::jacobi_eigenvalues(Matrix(M.transpose() * M));
    CHECK(prof.l1 == Catch::Approx(std::sqrt(ev.back())).margin(1e-8));
  }

  SECTION("safety factor scales the measured constants") {
    const auto problem = quadratic_problem(16);
    std::vector<Vector> probes = {nsadmm_test::random_vector(rng, problem.dim_x()),
                                  nsadmm_test::random_vector(rng, problem.dim_x())};
    nsadmm::Rng r1(100), r2(100);
    const auto raw = nsadmm::estimate_profile(*problem.oracle, probes, r1, 1.0);
    const auto inflated = nsadmm::estimate_profile(*problem.oracle, probes, r2);
    CHECK(inflated.l1 == Catch::Approx(1.5 * raw.l1));
    CHECK(inflated.sigma2 == Catch::Approx(1.5 * raw.sigma2));
  }

  SECTION("user-supplied profile bypasses estimation") {
    const auto problem = quadratic_problem(17);
    nsadmm::SmoothnessProfile user;
    user.l1 = 3.25;
    std::vector<Vector> probes = {Vector::Zero(problem.dim_x()),
                                  Vector::Ones(problem.dim_x())};
    const auto prof = nsadmm::estimate_profile(*problem.oracle, probes, rng, 1.5, user);
    CHECK(prof.l1 == 3.25);
  }

  SECTION("fewer than two probes is an error") {
    const auto problem = quadratic_problem(18);
    std::vector<Vector> probes = {Vector::Zero(problem.dim_x())};
    CHECK_THROWS_AS(nsadmm::estimate_profile(*problem.oracle, probes, rng),
                    nsadmm::InsufficientProbes);
  }
}
