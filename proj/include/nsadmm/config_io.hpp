#ifndef NSADMM_CONFIG_IO_HPP_
#define NSADMM_CONFIG_IO_HPP_

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsadmm/errors.hpp"
#include "nsadmm/generators.hpp"
#include "nsadmm/solver.hpp"

namespace nsadmm {

//! Explicit solver settings from a config file; calibrate fills the rest.
struct SolverOverrides {
  std::optional<double> rho, eta, alpha, r;
  std::optional<std::vector<double>> tau;
  std::optional<Index> K;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps_target;
};

struct EstimatorOverrides {
  std::optional<Index> q, s, b1, b2, S, B1, B2;
};

//! A full experiment: instance recipe, solver overrides, estimator kinds,
//! accuracy targets, and the seed list.
struct ExperimentConfig {
  GeneratorSpec generator;
  std::optional<std::string> instance_path;  //!< load instead of generating
  SolverOverrides solver;
  EstimatorOverrides estimator;
  std::vector<EstimatorKind> estimators = {EstimatorKind::spider};
  std::vector<std::uint64_t> seeds;
  std::vector<double> eps_targets = {1e-2};
  std::string out_dir = ".";

  void validate() const {
    if (seeds.empty()) throw ConfigParseError("experiment needs at least one seed");
    if (eps_targets.empty()) throw ConfigParseError("experiment needs at least one eps target");
    if (estimators.empty()) throw ConfigParseError("experiment needs an estimator kind");
    for (double e : eps_targets)
      if (!(e > 0.0)) throw ConfigParseError("eps targets must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T>
T parse_number(const std::string& s, long line) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigParseError("expected a number, got '" + s + "'", line);
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

//! Parses the sectioned key/value config format:
//!   [problem] kind, d, l, p, n1, n2, m, noise, seed, mode, radius,
//!             reg (kind weight, repeatable per block), instance
//!   [solver]  rho, eta, alpha, r, tau, K, seed, eps_target
//!   [estimator] kind{,s} (estimator names), q, s, b1, b2, S, B1, B2
//!   [experiment] seeds, eps, out
//! Unknown keys and malformed lines are rejected with their line number.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  cfg.generator.reg_weights.clear();
  std::string section;
  std::string raw;
  long line = 0;
  bool saw_reg = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigParseError("unterminated section header", line);
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "problem" && section != "solver" && section != "estimator" &&
          section != "experiment")
        throw ConfigParseError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigParseError("expected key = value", line);
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigParseError("expected key = value", line);

    try {
      if (section == "problem") {
        if (key == "kind") cfg.generator.kind = generator_kind_from_string(val);
        else if (key == "d") cfg.generator.d = detail::parse_number<int>(val, line);
        else if (key == "l") cfg.generator.l = detail::parse_number<int>(val, line);
        else if (key == "p") cfg.generator.p = detail::parse_number<int>(val, line);
        else if (key == "n1") cfg.generator.n1 = detail::parse_number<Index>(val, line);
        else if (key == "n2") cfg.generator.n2 = detail::parse_number<Index>(val, line);
        else if (key == "m") cfg.generator.m = detail::parse_number<int>(val, line);
        else if (key == "noise") cfg.generator.noise = detail::parse_number<double>(val, line);
        else if (key == "seed") cfg.generator.seed = detail::parse_number<std::uint64_t>(val, line);
        else if (key == "mode") cfg.generator.mode = oracle_mode_from_string(val);
        else if (key == "radius") cfg.generator.radius = detail::parse_number<double>(val, line);
        else if (key == "instance") cfg.instance_path = val;
        else if (key == "reg") {
          const auto parts = detail::split_ws(val);
          if (parts.size() != 2) throw ConfigParseError("reg expects: kind weight", line);
          if (!saw_reg) {
            cfg.generator.reg_kinds.clear();
            saw_reg = true;
          }
          cfg.generator.reg_kinds.push_back(reg_kind_from_string(parts[0]));
          cfg.generator.reg_weights.push_back(detail::parse_number<double>(parts[1], line));
        } else {
          throw ConfigParseError("unknown [problem] key '" + key + "'", line);
        }
      } else if (section == "solver") {
        if (key == "rho") cfg.solver.rho = detail::parse_number<double>(val, line);
        else if (key == "eta") cfg.solver.eta = detail::parse_number<double>(val, line);
        else if (key == "alpha") cfg.solver.alpha = detail::parse_number<double>(val, line);
        else if (key == "r") cfg.solver.r = detail::parse_number<double>(val, line);
        else if (key == "K") cfg.solver.K = detail::parse_number<Index>(val, line);
        else if (key == "seed") cfg.solver.seed = detail::parse_number<std::uint64_t>(val, line);
        else if (key == "eps_target") cfg.solver.eps_target = detail::parse_number<double>(val, line);
        else if (key == "tau") {
          std::vector<double> tau;
          for (const auto& t : detail::split_ws(val))
            tau.push_back(detail::parse_number<double>(t, line));
          cfg.solver.tau = std::move(tau);
        } else {
          throw ConfigParseError("unknown [solver] key '" + key + "'", line);
        }
      } else if (section == "estimator") {
        if (key == "kind" || key == "kinds") {
          cfg.estimators.clear();
          for (const auto& t : detail::split_ws(val))
            cfg.estimators.push_back(estimator_kind_from_string(t));
          if (cfg.estimators.empty()) throw ConfigParseError("empty estimator list", line);
        }
        else if (key == "q") cfg.estimator.q = detail::parse_number<Index>(val, line);
        else if (key == "s") cfg.estimator.s = detail::parse_number<Index>(val, line);
        else if (key == "b1") cfg.estimator.b1 = detail::parse_number<Index>(val, line);
        else if (key == "b2") cfg.estimator.b2 = detail::parse_number<Index>(val, line);
        else if (key == "S") cfg.estimator.S = detail::parse_number<Index>(val, line);
        else if (key == "B1") cfg.estimator.B1 = detail::parse_number<Index>(val, line);
        else if (key == "B2") cfg.estimator.B2 = detail::parse_number<Index>(val, line);
        else throw ConfigParseError("unknown [estimator] key '" + key + "'", line);
      } else if (section == "experiment") {
        if (key == "seeds") {
          for (const auto& t : detail::split_ws(val))
            cfg.seeds.push_back(detail::parse_number<std::uint64_t>(t, line));
        } else if (key == "eps") {
          cfg.eps_targets.clear();
          for (const auto& t : detail::split_ws(val))
            cfg.eps_targets.push_back(detail::parse_number<double>(t, line));
        } else if (key == "out") {
          cfg.out_dir = val;
        } else {
          throw ConfigParseError("unknown [experiment] key '" + key + "'", line);
        }
      } else {
        throw ConfigParseError("key outside of any section", line);
      }
    } catch (const ConfigError& e) {
      throw ConfigParseError(e.what(), line);
    }
  }
  if (cfg.generator.reg_weights.empty()) cfg.generator.reg_weights = {0.1};
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_experiment_config(in);
}

//! Applies calibration plus any explicit overrides, re-validating the result.
inline SolverConfig build_solver_config(const ProblemInstance& problem,
                                        const ExperimentConfig& exp, EstimatorKind estimator,
                                        std::uint64_t seed, double eps_target) {
  const double alpha = exp.solver.alpha.value_or(0.5);
  SolverConfig cfg = calibrate(problem, problem.profile, exp.generator.mode, estimator, alpha,
                               eps_target, exp.estimator.q);
  if (exp.solver.rho) cfg.rho = *exp.solver.rho;
  if (exp.solver.eta) cfg.eta = *exp.solver.eta;
  if (exp.solver.r) cfg.r = *exp.solver.r;
  if (exp.solver.tau) cfg.tau = *exp.solver.tau;
  if (exp.solver.K) cfg.K = *exp.solver.K;
  if (exp.estimator.s) cfg.plan.s = *exp.estimator.s;
  if (exp.estimator.b1) cfg.plan.b1 = *exp.estimator.b1;
  if (exp.estimator.b2) cfg.plan.b2 = *exp.estimator.b2;
  if (exp.estimator.S) cfg.plan.S = *exp.estimator.S;
  if (exp.estimator.B1) cfg.plan.B1 = *exp.estimator.B1;
  if (exp.estimator.B2) cfg.plan.B2 = *exp.estimator.B2;
  cfg.seed = seed;
  validate_config(problem, cfg);
  return cfg;
}

//! Writes an instance file: generator descriptor plus the coupling data in
//! row-major decimal text. The oracle itself is regenerated from the
//! descriptor on load, never serialized numerically.
inline void write_instance(std::ostream& out, const ProblemInstance& problem,
                           const GeneratorSpec& spec) {
  out << "nsadmm-instance 1\n";
  out << "generator " << to_string(spec.kind) << "\n";
  out << "mode " << to_string(spec.mode) << "\n";
  out << "seed " << spec.seed << "\n";
  out << "dims " << spec.d << " " << spec.l << " " << spec.p << "\n";
  out << "counts " << spec.n1 << " " << spec.n2 << "\n";
  out << "m " << spec.m << "\n";
  out << "noise " << detail::format_double(spec.noise) << "\n";
  out << "radius " << detail::format_double(spec.radius) << "\n";
  const auto write_matrix = [&out](const std::string& name, const Matrix& M) {
    out << "matrix " << name << " " << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j)
        out << (j ? " " : "") << detail::format_double(M(i, j));
      out << "\n";
    }
  };
  write_matrix("A", problem.A);
  for (int j = 0; j < problem.m(); ++j)
    write_matrix("B" + std::to_string(j), problem.B[static_cast<std::size_t>(j)]);
  out << "vector c " << problem.c.size() << "\n";
  for (Eigen::Index i = 0; i < problem.c.size(); ++i)
    out << (i ? " " : "") << detail::format_double(problem.c[i]);
  out << "\n";
  for (const Regularizer& r : problem.regs)
    out << "reg " << to_string(r.kind) << " " << detail::format_double(r.weight) << "\n";
}

inline void write_instance_file(const std::string& path, const ProblemInstance& problem,
                                const GeneratorSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open instance file for writing: " + path);
  write_instance(out, problem, spec);
  if (!out) throw IoError("failed writing instance file: " + path);
}

struct LoadedInstance {
  ProblemInstance problem;
  GeneratorSpec spec;
};

//! Reads an instance file back: the oracle and certified profile are
//! regenerated from the descriptor, the coupling data comes from the file.
inline LoadedInstance read_instance(std::istream& in) {
  std::string tok;
  auto expect = [&](const std::string& want) {
    if (!(in >> tok) || tok != want)
      throw IoError("instance file: expected '" + want + "', got '" + tok + "'");
  };
  expect("nsadmm-instance");
  int version = 0;
  in >> version;
  if (version != 1) throw IoError("instance file: unsupported version");
  GeneratorSpec spec;
  expect("generator");
  in >> tok;
  spec.kind = generator_kind_from_string(tok);
  expect("mode");
  in >> tok;
  spec.mode = oracle_mode_from_string(tok);
  expect("seed");
  in >> spec.seed;
  expect("dims");
  in >> spec.d >> spec.l >> spec.p;
  expect("counts");
  in >> spec.n1 >> spec.n2;
  expect("m");
  in >> spec.m;
  expect("noise");
  in >> spec.noise;
  expect("radius");
  in >> spec.radius;
  if (!in) throw IoError("instance file: malformed header");

  const auto read_matrix = [&in](Eigen::Index rows, Eigen::Index cols) {
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!(in >> M(i, j))) throw IoError("instance file: truncated matrix data");
    return M;
  };

  expect("matrix");
  expect("A");
  Eigen::Index rows = 0, cols = 0;
  in >> rows >> cols;
  Matrix A = read_matrix(rows, cols);
  std::vector<Matrix> B;
  for (int j = 0; j < spec.m; ++j) {
    expect("matrix");
    expect("B" + std::to_string(j));
    in >> rows >> cols;
    B.push_back(read_matrix(rows, cols));
  }
  expect("vector");
  expect("c");
  Eigen::Index n = 0;
  in >> n;
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(in >> c[i])) throw IoError("instance file: truncated vector data");
  std::vector<Regularizer> regs;
  spec.reg_kinds.clear();
  spec.reg_weights.clear();
  for (int j = 0; j < spec.m; ++j) {
    expect("reg");
    in >> tok;
    double w = 0.0;
    in >> w;
    if (!in) throw IoError("instance file: malformed regularizer");
    regs.push_back({reg_kind_from_string(tok), w});
    spec.reg_kinds.push_back(regs.back().kind);
    spec.reg_weights.push_back(w);
  }

  // Regenerate the oracle and certified profile from the descriptor, then
  // substitute the serialized coupling data.
  ProblemInstance generated = generate_instance(spec);
  LoadedInstance out{make_problem(std::move(A), std::move(B), std::move(c), std::move(regs),
                                  generated.oracle, generated.profile),
                     spec};
  return out;
}

inline LoadedInstance read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file: " + path);
  return read_instance(in);
}

}  // namespace nsadmm

#endif  // NSADMM_CONFIG_IO_HPP_
