#ifndef NSADMM_EXPERIMENT_HPP_
#define NSADMM_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsadmm/config_io.hpp"
#include "nsadmm/parallel.hpp"
#include "nsadmm/solver.hpp"

namespace nsadmm {

inline constexpr const char* kTraceCsvHeader =
    "k,samples,primal_residual,stat_x,stat_y,stat_z,stat_total,aug_lagrangian,potential";

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << kTraceCsvHeader << "\n";
  for (const TraceRecord& r : trace) {
    out << r.k << ',' << r.samples_used << ',' << detail::format_double(std::sqrt(r.stat.feas))
        << ',' << detail::format_double(r.stat.grad) << ','
        << detail::format_double(r.stat.subdiff) << ',' << detail::format_double(r.stat.feas)
        << ',' << detail::format_double(r.stat.total) << ','
        << detail::format_double(r.aug_lag) << ',' << detail::format_double(r.potential) << "\n";
  }
}

//! Cumulative samples at the first iterate whose stationarity root
//! sqrt(stat_total) reaches eps; -1 when the run never reaches it.
inline std::int64_t samples_to_eps(const std::vector<TraceRecord>& trace, double eps) {
  for (const TraceRecord& r : trace) {
    if (r.k == 0) continue;
    if (std::sqrt(r.stat.total) <= eps) return r.samples_used;
  }
  return -1;
}

//! One (seed, estimator, eps) measurement.
struct RunOutcome {
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::spider;
  double eps = 0.0;
  std::int64_t samples_to_eps = -1;
  double final_stat_total = 0.0;
  std::string trace_file;
};

struct ExperimentResult {
  std::vector<RunOutcome> outcomes;
  std::vector<std::string> files_written;
};

namespace detail {

inline std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", eps);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

//! Estimators whose calibrated batch sizes depend on the accuracy target get
//! one run per eps; the finite-sum recursion is target-independent, so a
//! single run serves every target.
inline bool per_eps_runs(EstimatorKind kind, OracleMode mode) {
  return kind == EstimatorKind::minibatch || mode == OracleMode::online;
}

inline ProblemInstance load_or_generate(const ExperimentConfig& cfg) {
  if (cfg.instance_path) return read_instance_file(*cfg.instance_path).problem;
  return generate_instance(cfg.generator);
}

}  // namespace detail

//! Runs one estimator kind over the seed list and accuracy grid, writing one
//! trace CSV per run and appending summary rows. Deterministic given the
//! config: seeds run in parallel workers but results are collected in order.
inline ExperimentResult run_experiment_kind(const ExperimentConfig& cfg, EstimatorKind kind,
                                            std::ostream* summary, const std::string& out_dir) {
  cfg.validate();
  const ProblemInstance problem = detail::load_or_generate(cfg);
  const bool per_eps = detail::per_eps_runs(kind, cfg.generator.mode);
  std::vector<double> eps_sorted = cfg.eps_targets;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());

  struct Job {
    std::uint64_t seed;
    double calib_eps;  //!< accuracy the batch plan is calibrated for
    std::vector<double> report_eps;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed : cfg.seeds) {
    if (per_eps) {
      for (double e : eps_sorted) jobs.push_back({seed, e, {e}});
    } else {
      jobs.push_back({seed, eps_sorted.back(), eps_sorted});
    }
  }

  struct JobResult {
    std::vector<RunOutcome> outcomes;
    std::string trace_path;
    std::vector<TraceRecord> trace;
  };
  std::vector<JobResult> results(jobs.size());
  parallel_for(static_cast<std::int64_t>(jobs.size()), [&](std::int64_t ji) {
    const Job& job = jobs[static_cast<std::size_t>(ji)];
    SolverConfig scfg = build_solver_config(problem, cfg, kind, job.seed, job.calib_eps);
    const SolveReport rep = run(problem, scfg);
    JobResult& res = results[static_cast<std::size_t>(ji)];
    std::string name = std::string("trace_") + to_string(kind) + "_seed" +
                       std::to_string(job.seed) +
                       (per_eps ? "_eps" + detail::eps_tag(job.calib_eps) : "") + ".csv";
    res.trace_path = (std::filesystem::path(out_dir) / name).string();
    res.trace = rep.trace;
    for (double e : job.report_eps) {
      RunOutcome oc;
      oc.seed = job.seed;
      oc.estimator = kind;
      oc.eps = e;
      oc.samples_to_eps = samples_to_eps(rep.trace, e);
      oc.final_stat_total = rep.trace.back().stat.total;
      oc.trace_file = res.trace_path;
      res.outcomes.push_back(oc);
    }
  });

  ExperimentResult out;
  for (JobResult& res : results) {
    std::ofstream tf(res.trace_path);
    if (!tf) throw IoError("cannot write trace file: " + res.trace_path);
    write_trace_csv(tf, res.trace);
    out.files_written.push_back(res.trace_path);
    for (const RunOutcome& oc : res.outcomes) {
      out.outcomes.push_back(oc);
      if (summary)
        *summary << oc.seed << ',' << to_string(oc.estimator) << ','
                 << detail::format_double(oc.eps) << ',' << oc.samples_to_eps << ','
                 << detail::format_double(oc.final_stat_total) << "\n";
    }
  }
  return out;
}

inline constexpr const char* kSummaryCsvHeader =
    "seed,estimator,eps,samples_to_eps,final_stat_total";

//! Full experiment for the first configured estimator kind; writes
//! summary.csv plus per-run traces under the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const std::string summary_path =
      (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
  std::ofstream summary(summary_path);
  if (!summary) throw IoError("cannot write summary file: " + summary_path);
  summary << kSummaryCsvHeader << "\n";
  ExperimentResult res = run_experiment_kind(cfg, cfg.estimators.front(), &summary, cfg.out_dir);
  res.files_written.push_back(summary_path);
  return res;
}

//! Aggregated view per (estimator, eps): the seed-median of samples-to-eps
//! plus a fitted scaling exponent of samples against 1/eps.
struct CompareRow {
  EstimatorKind estimator;
  double eps = 0.0;
  double median_samples = -1.0;
  double fit_exponent = std::numeric_limits<double>::quiet_NaN();
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<RunOutcome> outcomes;
  std::vector<std::string> files_written;
};

inline constexpr const char* kCompareCsvHeader =
    "estimator,eps,median_samples_to_eps,fit_exponent";

inline double median_of(std::vector<double> v) {
  if (v.empty()) return -1.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

//! Least-squares slope of log(samples) against log(1/eps).
inline double fit_scaling_exponent(const std::vector<std::pair<double, double>>& eps_samples) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [eps, samples] : eps_samples)
    if (samples > 0.0) pts.emplace_back(std::log(1.0 / eps), std::log(samples));
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

//! Runs every configured estimator kind over the common seed/eps grid and
//! aggregates medians and scaling fits into compare.csv.
inline CompareResult compare_estimators(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.estimators.size() < 2)
    throw ConfigParseError("compare needs at least two estimator kinds");
  std::filesystem::create_directories(cfg.out_dir);
  const std::string summary_path =
      (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
  std::ofstream summary(summary_path);
  if (!summary) throw IoError("cannot write summary file: " + summary_path);
  summary << kSummaryCsvHeader << "\n";

  CompareResult out;
  for (EstimatorKind kind : cfg.estimators) {
    ExperimentResult res = run_experiment_kind(cfg, kind, &summary, cfg.out_dir);
    out.outcomes.insert(out.outcomes.end(), res.outcomes.begin(), res.outcomes.end());
    out.files_written.insert(out.files_written.end(), res.files_written.begin(),
                             res.files_written.end());
  }
  out.files_written.push_back(summary_path);

  std::vector<double> eps_sorted = cfg.eps_targets;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());
  for (EstimatorKind kind : cfg.estimators) {
    std::vector<std::pair<double, double>> medians;
    for (double e : eps_sorted) {
      std::vector<double> samples;
      for (const RunOutcome& oc : out.outcomes)
        if (oc.estimator == kind && oc.eps == e && oc.samples_to_eps > 0)
          samples.push_back(static_cast<double>(oc.samples_to_eps));
      medians.emplace_back(e, median_of(samples));
    }
    const double exponent = fit_scaling_exponent(medians);
    for (const auto& [e, med] : medians) {
      CompareRow row;
      row.estimator = kind;
      row.eps = e;
      row.median_samples = med;
      row.fit_exponent = exponent;
      out.rows.push_back(row);
    }
  }

  const std::string compare_path =
      (std::filesystem::path(cfg.out_dir) / "compare.csv").string();
  std::ofstream cf(compare_path);
  if (!cf) throw IoError("cannot write compare file: " + compare_path);
  cf << kCompareCsvHeader << "\n";
  for (const CompareRow& row : out.rows)
    cf << to_string(row.estimator) << ',' << detail::format_double(row.eps) << ','
       << detail::format_double(row.median_samples) << ','
       << detail::format_double(row.fit_exponent) << "\n";
  out.files_written.push_back(compare_path);
  return out;
}

}  // namespace nsadmm

#endif  // NSADMM_EXPERIMENT_HPP_
