// Command-line front end: generate instances, run solves, compare
// estimators, and check instance invariants. Exit codes: 0 success,
// 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nsadmm/nsadmm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> estimator;
  std::optional<std::string> mode;
};

nsadmm::ExperimentConfig load_config(const CommonArgs& args) {
  nsadmm::ExperimentConfig cfg = nsadmm::load_experiment_config(args.config_path);
  if (args.seed) cfg.seeds = {*args.seed};
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.estimator) cfg.estimators = {nsadmm::estimator_kind_from_string(*args.estimator)};
  if (args.mode) cfg.generator.mode = nsadmm::oracle_mode_from_string(*args.mode);
  return cfg;
}

int cmd_generate(const CommonArgs& args) {
  nsadmm::ExperimentConfig cfg = load_config(args);
  const nsadmm::ProblemInstance problem = nsadmm::generate_instance(cfg.generator);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string name = std::string("instance_") + nsadmm::to_string(cfg.generator.kind) +
                           "_seed" + std::to_string(cfg.generator.seed) + ".txt";
  const std::string path = (std::filesystem::path(cfg.out_dir) / name).string();
  nsadmm::write_instance_file(path, problem, cfg.generator);
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

int cmd_solve(const CommonArgs& args) {
  nsadmm::ExperimentConfig cfg = load_config(args);
  const nsadmm::ExperimentResult res = nsadmm::run_experiment(cfg);
  for (const std::string& f : res.files_written) std::cout << "wrote " << f << "\n";
  for (const nsadmm::RunOutcome& oc : res.outcomes) {
    std::printf("seed=%llu estimator=%s eps=%g samples_to_eps=%lld final_stat=%.6g\n",
                static_cast<unsigned long long>(oc.seed), nsadmm::to_string(oc.estimator),
                oc.eps, static_cast<long long>(oc.samples_to_eps), oc.final_stat_total);
  }
  return kExitOk;
}

int cmd_compare(const CommonArgs& args) {
  nsadmm::ExperimentConfig cfg = load_config(args);
  const nsadmm::CompareResult res = nsadmm::compare_estimators(cfg);
  std::printf("%-10s %-10s %-22s %s\n", "estimator", "eps", "median_samples_to_eps",
              "fit_exponent");
  for (const nsadmm::CompareRow& row : res.rows)
    std::printf("%-10s %-10g %-22.6g %.3f\n", nsadmm::to_string(row.estimator), row.eps,
                row.median_samples, row.fit_exponent);
  for (const std::string& f : res.files_written) std::cout << "wrote " << f << "\n";
  return kExitOk;
}

bool report(const char* name, bool ok, std::string detail = "") {
  std::printf("%-34s %s%s%s\n", name, ok ? "PASS" : "FAIL", detail.empty() ? "" : "  ",
              detail.c_str());
  return ok;
}

//! Instance invariant suite: structural validity, spectral certificates, and
//! a sampled check that the attached smoothness constants dominate the
//! generated components inside the certification region.
int cmd_check(const CommonArgs& args) {
  nsadmm::ExperimentConfig cfg = load_config(args);
  const nsadmm::ProblemInstance problem = cfg.instance_path
                                              ? nsadmm::read_instance_file(*cfg.instance_path).problem
                                              : nsadmm::generate_instance(cfg.generator);
  bool all_ok = true;

  try {
    problem.validate();
    all_ok &= report("structure", true);
  } catch (const std::exception& e) {
    all_ok &= report("structure", false, e.what());
  }

  all_ok &= report("full column rank of A", problem.spectral.sigma_min_A > 0.0,
                   "sigma_min=" + std::to_string(problem.spectral.sigma_min_A));

  {
    nsadmm::Rng rng(nsadmm::derive_seed(cfg.generator.seed, 101));
    bool ok = true;
    for (int t = 0; t < 100 && ok; ++t) {
      nsadmm::Vector v(problem.dim_x());
      for (int i = 0; i < problem.dim_x(); ++i) v[i] = rng.normal();
      v.normalize();
      const double q = (problem.A * v).squaredNorm();
      ok = q >= problem.spectral.sigma_min_A - 1e-8 && q <= problem.spectral.sigma_max_A + 1e-8;
    }
    all_ok &= report("spectral bounds bracket A", ok);
  }

  {
    // Sampled profile certification inside the region ||x|| <= radius.
    const nsadmm::CompositionOracle& oracle = *problem.oracle;
    const nsadmm::SmoothnessProfile& prof = problem.profile;
    nsadmm::Rng rng(nsadmm::derive_seed(cfg.generator.seed, 202));
    const double R = cfg.generator.radius;
    bool lip_ok = true, var_ok = true;
    constexpr double kTol = 1e-9;
    for (int t = 0; t < 20; ++t) {
      nsadmm::Vector x(oracle.dim_x());
      for (int i = 0; i < oracle.dim_x(); ++i) x[i] = rng.normal();
      x *= rng.uniform01() * R / x.norm();
      const auto inner = nsadmm::draw_batch(rng, oracle.num_inner(), 64);
      const nsadmm::Vector w = nsadmm::eval_f1(oracle, inner, x);
      nsadmm::Vector vmean = nsadmm::Vector::Zero(oracle.dim_inner());
      double worst_jac = 0.0;
      for (nsadmm::Index i : inner) {
        worst_jac = std::max(worst_jac, nsadmm::operator_norm(oracle.f1_jacobian(i, x)));
        vmean += oracle.f1_component(i, x);
      }
      vmean /= static_cast<double>(inner.size());
      double dvar = 0.0;
      for (nsadmm::Index i : inner) dvar += (oracle.f1_component(i, x) - vmean).squaredNorm();
      dvar /= static_cast<double>(inner.size());
      lip_ok = lip_ok && worst_jac <= prof.l1 * (1.0 + kTol);
      var_ok = var_ok && dvar <= prof.delta * prof.delta * (1.0 + kTol) + 1e-12;
      const auto outer = nsadmm::draw_batch(rng, oracle.num_outer(), 64);
      nsadmm::Vector gmean = nsadmm::Vector::Zero(oracle.dim_inner());
      double worst_grad = 0.0;
      for (nsadmm::Index j : outer) {
        const nsadmm::Vector g = oracle.f2_gradient(j, w);
        worst_grad = std::max(worst_grad, g.norm());
        gmean += g;
      }
      gmean /= static_cast<double>(outer.size());
      double gvar = 0.0;
      for (nsadmm::Index j : outer)
        gvar += (oracle.f2_gradient(j, w) - gmean).squaredNorm();
      gvar /= static_cast<double>(outer.size());
      lip_ok = lip_ok && worst_grad <= prof.l2 * (1.0 + kTol);
      var_ok = var_ok && gvar <= prof.sigma2 * prof.sigma2 * (1.0 + kTol) + 1e-12;
    }
    all_ok &= report("certified Lipschitz constants", lip_ok);
    all_ok &= report("certified variance bounds", var_ok);
  }

  if (problem.oracle->mode() == nsadmm::OracleMode::finite_sum) {
    nsadmm::Rng rng(nsadmm::derive_seed(cfg.generator.seed, 303));
    bool ok = true;
    for (int t = 0; t < 5 && ok; ++t) {
      nsadmm::Vector x(problem.dim_x());
      for (int i = 0; i < problem.dim_x(); ++i) x[i] = rng.normal();
      const nsadmm::Vector g = nsadmm::exact_nested_gradient(problem, x);
      const nsadmm::Vector fd = nsadmm::finite_diff_gradient(problem, x, 1e-5);
      ok = (g - fd).norm() <= 1e-5 * std::max(1.0, g.norm());
    }
    all_ok &= report("chain rule vs finite differences", ok);
  }

  return all_ok ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic nested ADMM experiment harness"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&args](CLI::App* cmd, bool config_required = true) {
    cmd->add_option("--config", args.config_path, "config file path")->required(config_required);
    cmd->add_option("--seed", args.seed, "override the experiment seed list with one seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--estimator", args.estimator, "estimator kind (minibatch|spider)");
    cmd->add_option("--mode", args.mode, "oracle mode (finite-sum|online)");
  };

  CLI::App* generate = app.add_subcommand("generate", "generate an instance file from a spec");
  add_common(generate);
  CLI::App* solve = app.add_subcommand("solve", "run the solver and write trace CSVs");
  add_common(solve);
  CLI::App* compare = app.add_subcommand("compare", "compare estimator kinds on a shared grid");
  add_common(compare);
  CLI::App* check = app.add_subcommand("check", "run the instance invariant suite");
  add_common(check);

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return cmd_generate(args);
    if (solve->parsed()) return cmd_solve(args);
    if (compare->parsed()) return cmd_compare(args);
    if (check->parsed()) return cmd_check(args);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const nsadmm::ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nsadmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nsadmm::InvalidTolerance& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nsadmm::GeneratorError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nsadmm::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nsadmm::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
