// Experiment runner for the Riemannian bilevel optimization toolkit.
//
// Subcommands:
//   run <spec.json>        execute a single configured run
//   sweep <spec.json>      execute the sweep cross-product from the spec
//   check                  manifold + benchmark diagnostics (text and JSON)
//   summarize <dir>        aggregate a directory of trace CSVs

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "rbopt/diagnostics.hpp"
#include "rbopt/errors.hpp"
#include "rbopt/experiment.hpp"

namespace {

using namespace rbopt;

int do_run(const std::string& spec_path, bool force_sweep) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  if (force_sweep && !spec.sweep) {
    throw ConfigError("sweep subcommand needs a 'sweep' block in the spec");
  }
  if (!force_sweep) spec.sweep.reset();
  const auto outcomes = run_experiment(spec);
  const auto out_dir = resolve_output_dir(spec.output_dir);
  int diverged = 0;
  for (const auto& o : outcomes) {
    if (o.status == "diverged") ++diverged;
    std::cout << "step=" << o.step_seed << " seed=" << o.random_seed
              << " status=" << o.status
              << " final_ergodic_min=" << o.final_ergodic_min
              << " time_s=" << o.wall_time_s << "\n";
  }
  std::cout << outcomes.size() << " run(s), " << diverged
            << " diverged; outputs in " << out_dir.string() << "\n";
  // Divergence is a recorded outcome, not a tool failure.
  return 0;
}

nlohmann::json report_to_json(const CheckReport& r) {
  nlohmann::json j;
  j["check"] = r.check_name;
  j["max_rel_error"] = r.max_rel_error;
  j["samples"] = r.samples;
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  return j;
}

void print_report_line(const CheckReport& r) {
  std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.check_name
            << "  max_rel_error=" << r.max_rel_error
            << "  samples=" << r.samples << "\n";
}

int do_check(const std::string& json_out) {
  nlohmann::json all = nlohmann::json::array();
  bool ok = true;

  const std::vector<ManifoldPtr> manifolds = {
      make_euclidean(50), make_spd(5), make_spd(20), make_stiefel(50, 10),
      make_simplex(20)};
  for (const auto& m : manifolds) {
    for (const CheckReport& r : check_manifold(m, 60, 1)) {
      print_report_line(r);
      all.push_back(report_to_json(r));
      ok = ok && r.pass;
    }
  }

  struct Named {
    const char* name;
    BilevelProblem problem;
  };
  std::vector<Named> problems;
  problems.push_back({"toy_quadratic", make_toy_quadratic(4, 3, 11).first});
  problems.push_back(
      {"simple_similarity", make_simple_similarity(16, 5, 2, 0.05, 11).first});
  problems.push_back(
      {"shallow_hyperrep",
       make_shallow_hyperrep(24, 8, 3, 0.1, 0.1, 11).first});
  problems.push_back(
      {"robust_km", make_robust(RobustLoss::kKarcherMean, 5, 3, 11).first});
  problems.push_back(
      {"robust_mle", make_robust(RobustLoss::kGaussianMle, 8, 4, 11).first});
  for (const auto& [name, problem] : problems) {
    for (CheckReport r : check_problem_gradients(problem, 5, 13)) {
      r.check_name = std::string(name) + "." + r.check_name;
      print_report_line(r);
      all.push_back(report_to_json(r));
      ok = ok && r.pass;
    }
    for (CheckReport r : check_problem_second_order(problem, 4, 17)) {
      r.check_name = std::string(name) + "." + r.check_name;
      print_report_line(r);
      all.push_back(report_to_json(r));
      ok = ok && r.pass;
    }
  }

  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << all.dump(2) << "\n";
    std::cout << "wrote " << json_out << "\n";
  }
  std::cout << (ok ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian bilevel optimization toolkit"};
  app.require_subcommand(1);

  std::string spec_path;
  auto* run_cmd = app.add_subcommand("run", "execute a single run");
  run_cmd->add_option("spec", spec_path, "experiment spec (JSON)")->required();

  std::string sweep_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "execute a sweep");
  sweep_cmd->add_option("spec", sweep_path, "experiment spec (JSON)")
      ->required();

  std::string check_json;
  auto* check_cmd = app.add_subcommand("check", "run diagnostics");
  check_cmd->add_option("--json", check_json, "also write a JSON report");

  std::string summarize_dir;
  auto* sum_cmd = app.add_subcommand("summarize", "aggregate trace CSVs");
  sum_cmd->add_option("dir", summarize_dir, "directory of trace_*.csv files")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(spec_path, false);
    if (sweep_cmd->parsed()) return do_run(sweep_path, true);
    if (check_cmd->parsed()) return do_check(check_json);
    if (sum_cmd->parsed()) {
      std::cout << rbopt::summarize_directory(summarize_dir);
      return 0;
    }
  } catch (const rbopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
