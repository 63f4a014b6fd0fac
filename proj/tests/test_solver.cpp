#include <catch2/catch_amalgamated.hpp>

#include "nsadmm/solver.hpp"

#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "nsadmm/generators.hpp"
#include "test_helpers.hpp"

using nsadmm::BatchPlan;
using nsadmm::EstimatorKind;
using nsadmm::Index;
using nsadmm::IterateState;
using nsadmm::Matrix;
using nsadmm::OracleMode;
using nsadmm::SmoothnessProfile;
using nsadmm::SolverConfig;
using nsadmm::Vector;

namespace {

SmoothnessProfile unit_profile() {
  SmoothnessProfile p;
  p.l1 = p.l2 = p.L1 = p.L2 = p.LF = p.delta = p.sigma1 = p.sigma2 = 1.0;
  return p;
}

// Independent soft-threshold for the subproblem oracle.
Vector oracle_prox(const nsadmm::Regularizer& reg, double step, const Vector& v) {
  const double t = step * reg.weight;
  Vector u = v;
  switch (reg.kind) {
    case nsadmm::RegKind::zero:
      break;
    case nsadmm::RegKind::l1:
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (v[i] > t) u[i] = v[i] - t;
        else if (v[i] < -t) u[i] = v[i] + t;
        else u[i] = 0.0;
      }
      break;
    case nsadmm::RegKind::l2_norm: {
      const double n = v.norm();
      u = n <= t ? Vector(Vector::Zero(v.size())) : Vector((1.0 - t / n) * v);
      break;
    }
    case nsadmm::RegKind::squared_l2:
      u = v / (1.0 + 2.0 * t);
      break;
  }
  return u;
}

// Proximal-gradient minimization of the block-j subproblem, run with a
// deliberately different step size than the closed form so it follows its
// own trajectory to the minimizer.
Vector pg_subproblem_oracle(const nsadmm::ProblemInstance& problem, const SolverConfig& cfg,
                            const IterateState& state, int j, const Vector& z) {
  const auto uj = static_cast<std::size_t>(j);
  const Matrix& Bj = problem.B[uj];
  const double tau = cfg.tau[uj];
  Vector w_other = problem.A * state.x - problem.c;
  for (int i = 0; i < problem.m(); ++i)
    if (i != j) w_other += problem.B[static_cast<std::size_t>(i)] * state.y[static_cast<std::size_t>(i)];
  const Matrix Hj = tau * Matrix::Identity(Bj.cols(), Bj.cols()) -
                    cfg.rho * (Bj.transpose() * Bj);
  const double gamma = 0.4 / tau;
  Vector y = state.y[uj];
  for (int it = 0; it < 800; ++it) {
    const Vector grad = -Bj.transpose() * z +
                        cfg.rho * (Bj.transpose() * (w_other + Bj * y)) +
                        Hj * (y - state.y[uj]);
    y = oracle_prox(problem.regs[uj], gamma, y - gamma * grad);
  }
  return y;
}

nsadmm::ProblemInstance random_instance(std::uint64_t seed, int m = 1,
                                        nsadmm::RegKind kind = nsadmm::RegKind::l1) {
  nsadmm::Rng dims_rng(seed);
  nsadmm::GeneratorSpec spec;
  spec.seed = seed;
  spec.d = 2 + static_cast<int>(dims_rng.uniform_index(8));
  spec.l = 2 + static_cast<int>(dims_rng.uniform_index(6));
  spec.p = spec.d + static_cast<int>(dims_rng.uniform_index(6));
  spec.n1 = 6;
  spec.n2 = 5;
  spec.m = m;
  spec.noise = 0.2;
  spec.reg_kinds = {kind};
  spec.reg_weights = {0.3};
  return nsadmm::generate_instance(spec);
}

SolverConfig basic_config(const nsadmm::ProblemInstance& problem,
                          EstimatorKind kind = EstimatorKind::spider) {
  SolverConfig cfg = nsadmm::calibrate(problem, problem.profile, problem.oracle->mode(), kind,
                                       0.5, 1e-2);
  cfg.K = 10;
  return cfg;
}

IterateState random_state(const nsadmm::ProblemInstance& problem, nsadmm::Rng& rng) {
  IterateState st;
  st.x = nsadmm_test::random_vector(rng, problem.dim_x());
  st.x_prev = st.x;
  for (int j = 0; j < problem.m(); ++j)
    st.y.push_back(nsadmm_test::random_vector(rng, problem.block_dim(j)));
  st.z = nsadmm_test::random_vector(rng, problem.dim_p());
  return st;
}

}  // namespace

TEST_CASE("calibrate fixes the batch sizes from the epoch length") {
  auto problem = nsadmm_test::small_quadratic_problem(60);
  problem.profile = unit_profile();
  const SolverConfig cfg =
      nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum,
                        EstimatorKind::spider, 0.5, 1e-2, Index{100});
  CHECK(cfg.plan.q == 100);
  CHECK(cfg.plan.b2 == 2700);
  CHECK(cfg.plan.s == 2700);
  CHECK(cfg.plan.b1 == 300);
}

TEST_CASE("calibrate picks q from the component counts") {
  nsadmm::GeneratorSpec spec;
  spec.seed = 61;
  spec.d = 4;
  spec.l = 3;
  spec.p = 4;
  spec.n1 = 50;
  spec.n2 = 28;
  const auto problem = nsadmm::generate_instance(spec);
  const SolverConfig cfg = nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum,
                                             EstimatorKind::spider, 0.5, 1e-2);
  CHECK(cfg.plan.q == 12);  // ceil(sqrt(2*50 + 28))
  CHECK(cfg.plan.S == 50);
  CHECK(cfg.plan.B1 == 50);
  CHECK(cfg.plan.B2 == 28);
}

TEST_CASE("calibrate scales monotonically in alpha") {
  const auto problem = nsadmm_test::small_quadratic_problem(62);
  const auto lo = nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum,
                                    EstimatorKind::spider, 0.25, 1e-2);
  const auto hi = nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum,
                                    EstimatorKind::spider, 0.5, 1e-2);
  CHECK(hi.eta == Catch::Approx(2.0 * lo.eta));
  CHECK(hi.rho == Catch::Approx(0.5 * lo.rho));
}

TEST_CASE("calibrate rejects bad tolerances") {
  const auto problem = nsadmm_test::small_quadratic_problem(63);
  CHECK_THROWS_AS(nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum,
                                    EstimatorKind::spider, 0.5, 0.0),
                  nsadmm::InvalidTolerance);
}

TEST_CASE("calibrated metrics dominate the identity") {
  const auto problem = nsadmm_test::small_quadratic_problem(64, OracleMode::finite_sum, 0.2, 2);
  const SolverConfig cfg = basic_config(problem);
  CHECK(cfg.sigma_min_G(problem.spectral) == Catch::Approx(1.0));
  for (int j = 0; j < problem.m(); ++j)
    CHECK(cfg.sigma_min_H(problem.spectral, j) == Catch::Approx(1.0));
  nsadmm::validate_config(problem, cfg);
}

TEST_CASE("y update with zero regularizer and zero coupling is a fixed point") {
  auto problem = nsadmm_test::small_quadratic_problem(65);
  problem.B[0].setZero();
  problem.regs[0] = {nsadmm::RegKind::zero, 0.0};
  problem.spectral = nsadmm::make_spectral_summary(problem.A, problem.B);
  const SolverConfig cfg = basic_config(problem);
  nsadmm::Rng rng(66);
  const IterateState st = random_state(problem, rng);
  const Vector ynew = nsadmm::update_y_block(problem, cfg, st, 0, st.z);
  CHECK((ynew - st.y[0]).norm() == 0.0);
}

TEST_CASE("y update matches the proximal-gradient subproblem oracle") {
  const nsadmm::RegKind kinds[] = {nsadmm::RegKind::zero, nsadmm::RegKind::l1,
                                   nsadmm::RegKind::l2_norm, nsadmm::RegKind::squared_l2};
  int instance = 0;
  for (const auto kind : kinds) {
    for (int t = 0; t < 4; ++t) {
      const auto problem = random_instance(700 + static_cast<std::uint64_t>(instance), 2, kind);
      const SolverConfig cfg = basic_config(problem);
      nsadmm::Rng rng(800 + static_cast<std::uint64_t>(instance));
      IterateState st = random_state(problem, rng);
      for (int j = 0; j < problem.m(); ++j) {
        const Vector closed = nsadmm::update_y_block(problem, cfg, st, j, st.z);
        const Vector iterated = pg_subproblem_oracle(problem, cfg, st, j, st.z);
        CHECK((closed - iterated).norm() < 1e-6);
        st.y[static_cast<std::size_t>(j)] = closed;  // Gauss-Seidel order
      }
      ++instance;
    }
  }
}

TEST_CASE("x update first-order condition") {
  for (std::uint64_t seed = 90; seed < 95; ++seed) {
    const auto problem = random_instance(seed);
    const SolverConfig cfg = basic_config(problem);
    nsadmm::Rng rng(seed + 1000);
    IterateState st = random_state(problem, rng);
    const Vector v = nsadmm_test::random_vector(rng, problem.dim_x());
    const Vector x_new = nsadmm::update_x(problem, cfg, st, v, st.y);
    // v + (G/eta)(x+ - x) - A'z + rho A'(A x+ + By - c) = 0 with
    // G = rI - rho eta A'A.
    const Vector dx = x_new - st.x;
    const Vector g_dx = (cfg.r / cfg.eta) * dx - cfg.rho * (problem.A.transpose() * (problem.A * dx));
    const Vector resid = nsadmm::constraint_residual(problem, x_new, st.y);
    const Vector foc =
        v + g_dx - problem.A.transpose() * st.z + cfg.rho * (problem.A.transpose() * resid);
    CHECK(foc.norm() <= 1e-8);
  }
}

TEST_CASE("x update keeps feasible aligned points fixed") {
  const auto problem = nsadmm_test::small_quadratic_problem(96);
  const SolverConfig cfg = basic_config(problem);
  nsadmm::Rng rng(97);
  IterateState st = random_state(problem, rng);
  // Make (x, y) feasible by absorbing the residual into c.
  auto p2 = problem;
  p2.c = problem.A * st.x + problem.B[0] * st.y[0];
  const Vector v = p2.A.transpose() * st.z;
  const Vector x_new = nsadmm::update_x(p2, cfg, st, v, st.y);
  CHECK((x_new - st.x).norm() < 1e-14);
}

TEST_CASE("x update reduces to a preconditioned gradient step as rho vanishes") {
  const auto problem = nsadmm_test::small_quadratic_problem(98);
  SolverConfig cfg = basic_config(problem);
  cfg.rho = 1e-12;
  cfg.r = cfg.rho * cfg.eta * problem.spectral.sigma_max_A + 1.0;
  nsadmm::Rng rng(99);
  IterateState st = random_state(problem, rng);
  st.z.setZero();
  const Vector v = nsadmm_test::random_vector(rng, problem.dim_x());
  const Vector x_new = nsadmm::update_x(problem, cfg, st, v, st.y);
  CHECK((x_new - (st.x - (cfg.eta / cfg.r) * v)).norm() < 1e-9);
}

TEST_CASE("dual update") {
  const auto problem = nsadmm_test::small_quadratic_problem(100);
  SolverConfig cfg = basic_config(problem);
  nsadmm::Rng rng(101);
  IterateState st = random_state(problem, rng);

  SECTION("feasible points leave z unchanged") {
    auto p2 = problem;
    p2.c = problem.A * st.x + problem.B[0] * st.y[0];
    const Vector z_new = nsadmm::update_z(p2, cfg, st.x, st.y, st.z);
    CHECK((z_new - st.z).norm() < 1e-13);
  }

  SECTION("unit residual decrements z by rho") {
    auto p2 = problem;
    p2.c = problem.A * st.x + problem.B[0] * st.y[0];
    p2.c[0] -= 1.0;  // residual becomes e_1
    cfg.rho = 1.0;
    const Vector z_new = nsadmm::update_z(p2, cfg, st.x, st.y, st.z);
    Vector expect = st.z;
    expect[0] -= 1.0;
    CHECK((z_new - expect).norm() < 1e-13);
  }

  SECTION("dual step length equals rho times the residual norm") {
    const Vector z_new = nsadmm::update_z(problem, cfg, st.x, st.y, st.z);
    const double res = nsadmm::constraint_residual(problem, st.x, st.y).norm();
    CHECK((z_new - st.z).norm() == Catch::Approx(cfg.rho * res).epsilon(1e-12));
  }
}

TEST_CASE("single full-batch step is bitwise reproducible") {
  const auto problem = nsadmm_test::small_quadratic_problem(102);
  SolverConfig cfg = basic_config(problem);
  cfg.K = 1;
  cfg.seed = 424242;
  const auto rep1 = nsadmm::run(problem, cfg);
  const auto rep2 = nsadmm::run(problem, cfg);
  REQUIRE(rep1.x_history.size() == rep2.x_history.size());
  CHECK(std::memcmp(rep1.x_out.data(), rep2.x_out.data(),
                    sizeof(double) * static_cast<std::size_t>(rep1.x_out.size())) == 0);
  CHECK(std::memcmp(rep1.z_out.data(), rep2.z_out.data(),
                    sizeof(double) * static_cast<std::size_t>(rep1.z_out.size())) == 0);
  CHECK(rep1.trace.back().stat.total == rep2.trace.back().stat.total);
}

TEST_CASE("lasso-style run reduces the constraint residual") {
  nsadmm::GeneratorSpec spec;
  spec.kind = nsadmm::GeneratorKind::graph_guided_lasso;
  spec.seed = 103;
  spec.d = 6;
  spec.l = 4;
  spec.p = 10;
  spec.n1 = 10;
  spec.n2 = 8;
  spec.noise = 0.2;
  spec.reg_weights = {0.05};
  const auto problem = nsadmm::generate_instance(spec);
  SolverConfig cfg = basic_config(problem);
  cfg.K = 200;
  nsadmm::Rng rng(104);
  Vector x0 = nsadmm_test::random_vector(rng, problem.dim_x());
  const auto rep = nsadmm::run(problem, cfg, {}, x0);
  CHECK(rep.trace.back().stat.feas <= rep.trace.front().stat.feas);
  CHECK(rep.output_index >= 1);
  CHECK(rep.output_index <= cfg.K);
}

TEST_CASE("dual identities hold along a run") {
  const auto problem = nsadmm_test::small_quadratic_problem(105);
  SolverConfig cfg = basic_config(problem);
  cfg.K = 60;
  cfg.seed = 9;
  const auto rep = nsadmm::run(problem, cfg);
  for (std::size_t k = 1; k < rep.trace.size(); ++k) {
    const double resid_norm = std::sqrt(rep.trace[k].stat.feas);
    CHECK(rep.trace[k].dual_step_norm == Catch::Approx(cfg.rho * resid_norm).margin(1e-12));
  }
  for (double r : rep.key_identity_residuals) CHECK(r <= 1e-8);
}

TEST_CASE("run rejects inconsistent configs") {
  const auto problem = nsadmm_test::small_quadratic_problem(106);
  SolverConfig cfg = basic_config(problem);

  SECTION("zero iteration budget") {
    cfg.K = 0;
    CHECK_THROWS_AS(nsadmm::run(problem, cfg), nsadmm::EmptyRun);
  }
  SECTION("r below its lower bound") {
    cfg.r = 0.5;
    CHECK_THROWS_AS(nsadmm::run(problem, cfg), nsadmm::ConfigError);
  }
  SECTION("tau below its lower bound") {
    cfg.tau[0] = 0.1;
    CHECK_THROWS_AS(nsadmm::run(problem, cfg), nsadmm::ConfigError);
  }
  SECTION("partial finite-sum refresh") {
    cfg.plan.S = 1;
    CHECK_THROWS_AS(nsadmm::run(problem, cfg), nsadmm::ConfigError);
  }
}

TEST_CASE("mini-batch and spider runs both make progress on the small instance") {
  const auto problem = nsadmm_test::small_quadratic_problem(107);
  for (const auto kind : {EstimatorKind::spider, EstimatorKind::minibatch}) {
    SolverConfig cfg = nsadmm::calibrate(problem, problem.profile, OracleMode::finite_sum, kind,
                                         0.5, 0.05);
    cfg.K = 150;
    cfg.seed = 5;
    const auto rep = nsadmm::run(problem, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : rep.trace) best = std::min(best, rec.stat.total);
    CHECK(best < rep.trace.front().stat.total);
  }
}
