#include "rbopt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rbopt/errors.hpp"

namespace rbopt {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const RunTrace& trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file " + path.string());
  out << "t,hypergrad_sq,a,K_t,N_t,upper_obj,time_s,hypergrad_error,status\n";
  for (const TraceRow& r : trace.rows) {
    out << r.t << ',' << fmt_double(r.hypergrad_sq) << ',' << fmt_double(r.a)
        << ',' << r.K_t << ',' << r.N_t << ',' << fmt_double(r.upper_obj)
        << ',' << fmt_double(r.time_s) << ',';
    if (r.hypergrad_error) out << fmt_double(*r.hypergrad_error);
    out << ',' << trace.status << '\n';
  }
}

nlohmann::json trace_to_json(const RunTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TraceRow& r : trace.rows) {
    nlohmann::json row;
    row["t"] = r.t;
    row["hypergrad_sq"] = r.hypergrad_sq;
    row["a"] = r.a;
    row["K_t"] = r.K_t;
    row["N_t"] = r.N_t;
    row["upper_obj"] = r.upper_obj;
    row["time_s"] = r.time_s;
    if (r.hypergrad_error) row["hypergrad_error"] = *r.hypergrad_error;
    rows.push_back(std::move(row));
  }
  nlohmann::json j;
  j["rows"] = std::move(rows);
  j["status"] = trace.status;
  j["cap_hits"] = trace.cap_hits;
  j["early_stopped"] = trace.early_stopped;
  j["warnings"] = trace.warnings;
  return j;
}

namespace {

template <typename T>
std::optional<T> opt_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  try {
    spec.problem = problem_spec_from_json(j.at("problem"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: bad 'problem' block: ") +
                      e.what());
  }
  if (!j.contains("solver")) {
    throw ConfigError("experiment spec: missing 'solver' block");
  }
  const auto& s = j.at("solver");
  try {
    SolverSpec& out = spec.solver;
    out.algorithm = s.value("algorithm", std::string("adarhd"));
    out.inner_mode = s.value("inner_mode", std::string("gd"));
    out.map_mode = s.value("map_mode", std::string(""));
    out.T = s.value("T", 100);
    out.a0 = s.value("a0", 1.0);
    out.b0 = s.value("b0", 1.0);
    out.c0 = s.value("c0", 1.0);
    out.eta_x = s.value("eta_x", 0.5);
    out.eta_y = s.value("eta_y", 0.5);
    out.inner_iters = s.value("inner_iters", 50);
    out.eps_y = opt_field<double>(s, "eps_y");
    out.eps_v = opt_field<double>(s, "eps_v");
    out.cap_flat = opt_field<int>(s, "cap_flat");
    out.cg_cap = s.value("cg_cap", 50);
    out.cg_tol = s.value("cg_tol", 1e-10);
    out.early_stop = s.value("early_stop", false);
    out.record_hypergrad_error = s.value("record_hypergrad_error", false);
    out.hypergrad_error_every = s.value("hypergrad_error_every", 1);
    out.seed = s.value("seed", 0ULL);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: bad 'solver' block: ") +
                      e.what());
  }
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    SweepSpec sweep;
    try {
      sweep.step_seeds =
          j.at("sweep").value("step_seeds", std::vector<double>{});
      sweep.random_seeds = j.at("sweep").value(
          "random_seeds", std::vector<unsigned long long>{});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("experiment spec: bad 'sweep' block: ") +
                        e.what());
    }
    if (sweep.step_seeds.empty() || sweep.random_seeds.empty()) {
      throw ConfigError(
          "experiment spec: sweep needs step_seeds and random_seeds");
    }
    if (sweep.step_seeds.size() * sweep.random_seeds.size() > 10000) {
      throw ConfigError("experiment spec: sweep cross-product exceeds 10^4");
    }
    spec.sweep = std::move(sweep);
  }
  spec.output_dir = j.value("output_dir", std::string("out"));
  spec.workers = j.value("workers", 2);
  return spec;
}

nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["problem"] = problem_spec_to_json(spec.problem);
  nlohmann::json s;
  s["algorithm"] = spec.solver.algorithm;
  s["inner_mode"] = spec.solver.inner_mode;
  if (!spec.solver.map_mode.empty()) s["map_mode"] = spec.solver.map_mode;
  s["T"] = spec.solver.T;
  s["a0"] = spec.solver.a0;
  s["b0"] = spec.solver.b0;
  s["c0"] = spec.solver.c0;
  s["eta_x"] = spec.solver.eta_x;
  s["eta_y"] = spec.solver.eta_y;
  s["inner_iters"] = spec.solver.inner_iters;
  if (spec.solver.eps_y) s["eps_y"] = *spec.solver.eps_y;
  if (spec.solver.eps_v) s["eps_v"] = *spec.solver.eps_v;
  if (spec.solver.cap_flat) s["cap_flat"] = *spec.solver.cap_flat;
  s["cg_cap"] = spec.solver.cg_cap;
  s["cg_tol"] = spec.solver.cg_tol;
  s["early_stop"] = spec.solver.early_stop;
  s["record_hypergrad_error"] = spec.solver.record_hypergrad_error;
  s["hypergrad_error_every"] = spec.solver.hypergrad_error_every;
  s["seed"] = spec.solver.seed;
  j["solver"] = std::move(s);
  if (spec.sweep) {
    nlohmann::json w;
    w["step_seeds"] = spec.sweep->step_seeds;
    w["random_seeds"] = spec.sweep->random_seeds;
    j["sweep"] = std::move(w);
  }
  j["output_dir"] = spec.output_dir.string();
  j["workers"] = spec.workers;
  return j;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("spec parse error in " + path.string() + ": " + e.what());
  }
  return experiment_spec_from_json(j);
}

namespace {

MapMode parse_map_mode(const std::string& s, MapMode fallback) {
  if (s.empty()) return fallback;
  if (s == "exp") return MapMode::kExp;
  if (s == "retract") return MapMode::kRetract;
  throw ConfigError("unknown map_mode: " + s);
}

AdaRHDConfig build_adarhd_config(const SolverSpec& s, bool retract_default) {
  AdaRHDConfig cfg;
  cfg.T = s.T;
  cfg.a0 = s.a0;
  cfg.b0 = s.b0;
  cfg.c0 = s.c0;
  if (s.inner_mode == "gd") {
    cfg.inner_mode = InnerMode::kGd;
  } else if (s.inner_mode == "cg") {
    cfg.inner_mode = InnerMode::kCg;
  } else {
    throw ConfigError("unknown inner_mode: " + s.inner_mode);
  }
  cfg.map_mode = parse_map_mode(
      s.map_mode, retract_default ? MapMode::kRetract : MapMode::kExp);
  cfg.eps_y = s.eps_y;
  cfg.eps_v = s.eps_v;
  if (s.cap_flat) cfg.caps.flat = *s.cap_flat;
  cfg.cg_cap = s.cg_cap;
  if (cfg.inner_mode == InnerMode::kCg && !cfg.eps_v) {
    cfg.eps_v = s.cg_tol;  // experiment default: fixed CG residual tolerance
  }
  cfg.early_stop = s.early_stop;
  cfg.record_hypergrad_error = s.record_hypergrad_error;
  cfg.hypergrad_error_every = s.hypergrad_error_every;
  cfg.seed = s.seed;
  return cfg;
}

RHGDConfig build_rhgd_config(const SolverSpec& s) {
  RHGDConfig cfg;
  cfg.T = s.T;
  cfg.eta_x = s.eta_x;
  cfg.eta_y = s.eta_y;
  cfg.inner_iters = s.inner_iters;
  cfg.cg_tol = s.cg_tol;
  cfg.cg_cap = s.cg_cap;
  cfg.map_mode = parse_map_mode(s.map_mode, MapMode::kRetract);
  cfg.seed = s.seed;
  cfg.record_hypergrad_error = s.record_hypergrad_error;
  cfg.hypergrad_error_every = s.hypergrad_error_every;
  return cfg;
}

}  // namespace

RunTrace execute_single(const ProblemSpec& problem, const SolverSpec& solver) {
  const BilevelProblem p = make_problem(problem);
  if (solver.algorithm == "adarhd" || solver.algorithm == "adarhd_r") {
    const AdaRHDConfig cfg =
        build_adarhd_config(solver, solver.algorithm == "adarhd_r");
    try {
      return run_adarhd(p, cfg);
    } catch (const RunDivergence& e) {
      RunTrace t = e.partial_trace;
      t.status = "diverged";
      return t;
    }
  }
  if (solver.algorithm == "rhgd") {
    return run_rhgd(p, build_rhgd_config(solver));
  }
  if (solver.algorithm == "minmax") {
    const AdaRHDConfig cfg = build_adarhd_config(solver, false);
    try {
      return run_minmax(p, cfg);
    } catch (const RunDivergence& e) {
      RunTrace t = e.partial_trace;
      t.status = "diverged";
      return t;
    }
  }
  throw ConfigError("unknown algorithm: " + solver.algorithm);
}

std::map<double, std::optional<double>> time_to_thresholds(
    const RunTrace& trace, const std::vector<double>& thresholds) {
  std::map<double, std::optional<double>> out;
  for (const double th : thresholds) out[th] = std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const TraceRow& r : trace.rows) {
    best = std::min(best, r.hypergrad_sq);
    for (const double th : thresholds) {
      if (!out[th] && best <= th) out[th] = r.time_s;
    }
  }
  if (trace.status == "diverged") {
    for (auto& [th, v] : out) v = std::nullopt;
  }
  return out;
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("RBOPT_OUTPUT_ROOT")) {
    return std::filesystem::path(root) / dir;
  }
  return dir;
}

namespace {

std::string step_tag(double step) {
  std::ostringstream os;
  os << step;
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

RunOutcome run_one(const ExperimentSpec& spec, double step_seed,
                   unsigned long long random_seed,
                   const std::filesystem::path& out_dir) {
  ProblemSpec prob = spec.problem;
  prob.seed = random_seed;
  SolverSpec solver = spec.solver;
  solver.seed = random_seed;
  if (spec.sweep) {
    if (solver.algorithm == "rhgd") {
      solver.eta_x = solver.eta_y = step_seed;
    } else {
      solver.a0 = solver.b0 = solver.c0 = step_seed;
    }
  }
  const RunTrace trace = execute_single(prob, solver);

  RunOutcome outcome;
  outcome.step_seed = step_seed;
  outcome.random_seed = random_seed;
  outcome.status = trace.status;
  outcome.final_ergodic_min =
      trace.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : ergodic_min_gradnorm(trace).back();
  outcome.wall_time_s = trace.rows.empty() ? 0.0 : trace.rows.back().time_s;
  outcome.time_to_threshold = time_to_thresholds(trace, kSummaryThresholds);
  outcome.trace_path =
      out_dir / ("trace_" + solver.algorithm + "_" + solver.inner_mode +
                 "_s" + step_tag(step_seed) + "_r" +
                 std::to_string(random_seed) + ".csv");
  write_trace_csv(trace, outcome.trace_path);
  return outcome;
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

Stats mean_sd(const std::vector<double>& xs) {
  Stats s;
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
  return s;
}

}  // namespace

std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec) {
  const std::filesystem::path out_dir = resolve_output_dir(spec.output_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<std::pair<double, unsigned long long>> jobs;
  if (spec.sweep) {
    for (const double s : spec.sweep->step_seeds) {
      for (const unsigned long long r : spec.sweep->random_seeds) {
        jobs.emplace_back(s, r);
      }
    }
  } else {
    const double step = spec.solver.algorithm == "rhgd" ? spec.solver.eta_x
                                                        : spec.solver.a0;
    jobs.emplace_back(step, spec.solver.seed);
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  const int workers =
      std::max(1, std::min<int>(spec.workers,
                                static_cast<int>(
                                    std::thread::hardware_concurrency())));
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::exception_ptr> errors;
  const auto worker = [&] {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= jobs.size() || !errors.empty()) return;
        idx = next++;
      }
      try {
        outcomes[idx] =
            run_one(spec, jobs[idx].first, jobs[idx].second, out_dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        errors.push_back(std::current_exception());
        return;
      }
    }
  };
  if (workers == 1 || jobs.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!errors.empty()) std::rethrow_exception(errors.front());

  // Summary JSON (sorted by config key for order independence).
  std::sort(outcomes.begin(), outcomes.end(),
            [](const RunOutcome& a, const RunOutcome& b) {
              if (a.step_seed != b.step_seed) return a.step_seed < b.step_seed;
              return a.random_seed < b.random_seed;
            });
  nlohmann::json summary;
  summary["spec"] = experiment_spec_to_json(spec);
  nlohmann::json runs = nlohmann::json::array();
  for (const RunOutcome& o : outcomes) {
    nlohmann::json r;
    r["step_seed"] = o.step_seed;
    r["random_seed"] = o.random_seed;
    r["status"] = o.status;
    r["final_ergodic_min"] = o.final_ergodic_min;
    r["wall_time_s"] = o.wall_time_s;
    for (const auto& [th, t] : o.time_to_threshold) {
      const std::string key = "time_to_" + fmt_double(th);
      if (t) {
        r[key] = *t;
      } else {
        r[key] = "/";
      }
    }
    r["trace"] = o.trace_path.filename().string();
    runs.push_back(std::move(r));
  }
  summary["runs"] = std::move(runs);
  {
    std::ofstream out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
  }

  // Long-format aggregate rows (plot-ready) plus per-step mean/std table.
  if (spec.sweep) {
    std::ofstream agg(out_dir / "aggregate.csv");
    agg << "algorithm,inner_mode,step_seed,threshold,mean_time_s,sd_time_s,"
           "reached,total\n";
    for (const double s : spec.sweep->step_seeds) {
      for (const double th : kSummaryThresholds) {
        std::vector<double> times;
        int total = 0;
        for (const RunOutcome& o : outcomes) {
          if (o.step_seed != s) continue;
          ++total;
          const auto it = o.time_to_threshold.find(th);
          if (it != o.time_to_threshold.end() && it->second) {
            times.push_back(*it->second);
          }
        }
        const Stats st = mean_sd(times);
        agg << spec.solver.algorithm << ',' << spec.solver.inner_mode << ','
            << fmt_double(s) << ',' << fmt_double(th) << ',';
        if (st.count > 0) {
          agg << fmt_double(st.mean) << ',' << fmt_double(st.sd);
        } else {
          agg << "/,/";
        }
        agg << ',' << st.count << ',' << total << '\n';
      }
    }
  }
  return outcomes;
}

std::string summarize_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  struct TraceInfo {
    std::string config;
    std::map<double, std::optional<double>> times;
    std::string status;
  };
  std::vector<TraceInfo> infos;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv" &&
        entry.path().filename().string().rfind("trace_", 0) == 0) {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw ConfigError("summarize: no trace_*.csv files in " + dir.string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);  // header
    RunTrace trace;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      TraceRow r;
      std::getline(row, cell, ',');
      r.t = std::stoi(cell);
      std::getline(row, cell, ',');
      r.hypergrad_sq = std::stod(cell);
      std::getline(row, cell, ',');
      r.a = std::stod(cell);
      std::getline(row, cell, ',');
      r.K_t = std::stoi(cell);
      std::getline(row, cell, ',');
      r.N_t = std::stoi(cell);
      std::getline(row, cell, ',');
      r.upper_obj = std::stod(cell);
      std::getline(row, cell, ',');
      r.time_s = std::stod(cell);
      std::getline(row, cell, ',');
      if (!cell.empty()) r.hypergrad_error = std::stod(cell);
      std::getline(row, cell, ',');
      trace.status = cell;
      trace.rows.push_back(r);
    }
    // Config key: file name without the trailing _r<seed>.csv part.
    std::string name = file.stem().string();
    const auto pos = name.rfind("_r");
    TraceInfo info;
    info.config = pos == std::string::npos ? name : name.substr(0, pos);
    info.status = trace.rows.empty() ? "diverged" : trace.status;
    info.times = trace.rows.empty()
                     ? std::map<double, std::optional<double>>{}
                     : time_to_thresholds(trace, kSummaryThresholds);
    infos.push_back(std::move(info));
  }

  std::map<std::string, std::vector<TraceInfo*>> by_config;
  for (auto& info : infos) by_config[info.config].push_back(&info);

  std::ostringstream table;
  table << "config";
  for (const double th : kSummaryThresholds) {
    table << "\ttime_to_" << th << " (mean+-sd)";
  }
  table << "\truns\n";
  for (auto& [config, group] : by_config) {
    table << config;
    for (const double th : kSummaryThresholds) {
      std::vector<double> times;
      for (const TraceInfo* info : group) {
        const auto it = info->times.find(th);
        if (it != info->times.end() && it->second) times.push_back(*it->second);
      }
      if (times.empty()) {
        table << "\t/";
      } else {
        const Stats st = mean_sd(times);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "\t%.3f (%.3f) [%d/%zu]", st.mean,
                      st.sd, st.count, group.size());
        table << buf;
      }
    }
    table << '\t' << group.size() << '\n';
  }
  return table.str();
}

}  // namespace rbopt
