#pragma once

#include <filesystem>

#include "rbopt/adarhd.hpp"
#include "rbopt/benchmarks.hpp"
#include "rbopt/rhgd.hpp"

namespace rbopt {

/// Trace CSV columns:
///   t,hypergrad_sq,a,K_t,N_t,upper_obj,time_s,hypergrad_error,status
/// hypergrad_error is empty when not recorded; status repeats the run status
/// on every row. Numeric columns are printed with 17 significant digits so
/// replays compare bit-for-bit.
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
nlohmann::json trace_to_json(const RunTrace& trace);

struct SolverSpec {
  std::string algorithm = "adarhd";  // adarhd | adarhd_r | rhgd | minmax
  std::string inner_mode = "gd";     // gd | cg
  std::string map_mode;              // exp | retract; empty = algorithm default
  int T = 100;
  double a0 = 1.0, b0 = 1.0, c0 = 1.0;
  double eta_x = 0.5, eta_y = 0.5;
  int inner_iters = 50;
  std::optional<double> eps_y, eps_v;
  std::optional<int> cap_flat;
  int cg_cap = 50;
  double cg_tol = 1e-10;
  bool early_stop = false;
  bool record_hypergrad_error = false;
  int hypergrad_error_every = 1;
  unsigned long long seed = 0;
};

struct SweepSpec {
  std::vector<double> step_seeds;              // a0=b0=c0 or eta_x=eta_y
  std::vector<unsigned long long> random_seeds;
};

struct ExperimentSpec {
  ProblemSpec problem;
  SolverSpec solver;
  std::optional<SweepSpec> sweep;
  std::filesystem::path output_dir;
  int workers = 2;
};

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);
/// Parses a spec file; parse failures raise ConfigError naming the field.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct RunOutcome {
  double step_seed = 0.0;
  unsigned long long random_seed = 0;
  std::string status;
  double final_ergodic_min = 0.0;
  double wall_time_s = 0.0;
  /// First wall-clock time at which the ergodic min ||Ghat F||^2 fell below
  /// each threshold; absent = never reached ("/" in tables).
  std::map<double, std::optional<double>> time_to_threshold;
  std::filesystem::path trace_path;
};

inline const std::vector<double> kSummaryThresholds = {1e-2, 1e-3, 1e-4};

/// Executes a single run of the configured solver on the configured problem.
RunTrace execute_single(const ProblemSpec& problem, const SolverSpec& solver);

/// Runs the experiment (single run, or the sweep cross-product on a bounded
/// worker pool), writes one CSV trace per run plus summary.json and, for
/// sweeps, aggregate.csv with per-step-size mean/std time-to-threshold rows.
/// Solver divergence is recorded as a status, not an error.
std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec);

/// Aggregate table over a directory of trace CSVs grouped by
/// (algorithm, step) prefix parsed from the file names written by
/// run_experiment. Returns the rendered text table and writes aggregate
/// files when out_dir is non-empty.
std::string summarize_directory(const std::filesystem::path& dir);

/// Computes time-to-threshold entries from a trace.
std::map<double, std::optional<double>> time_to_thresholds(
    const RunTrace& trace, const std::vector<double>& thresholds);

/// Resolves an output directory against the RBOPT_OUTPUT_ROOT environment
/// variable when the configured path is relative.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

}  // namespace rbopt
