// Acceptance suite: one criterion per function, one pass/fail line each.
// Run with no arguments for the full suite, or pass criterion numbers to run
// a subset (e.g. "acceptance_tests 3 6").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rbopt/adarhd.hpp"
#include "rbopt/benchmarks.hpp"
#include "rbopt/diagnostics.hpp"
#include "rbopt/experiment.hpp"
#include "rbopt/hypergradient.hpp"
#include "rbopt/rhgd.hpp"

using namespace rbopt;

namespace {

Matrix colvec(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Manifold property suite: roundtrip <= 1e-8, transport isometry <= 1e-10
//    where asserted, SPD trig-bound slack >= -1e-8 over 100 random
//    triangles. Runtime < 30 s.
bool criterion1(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ManifoldPtr> manifolds = {
      make_euclidean(50), make_spd(5), make_spd(20), make_stiefel(50, 10),
      make_simplex(20)};
  bool ok = true;
  double worst_roundtrip = 0.0, worst_transport = 0.0, worst_slack = 0.0;
  for (const auto& m : manifolds) {
    for (const CheckReport& r : check_manifold(m, 100, 1)) {
      if (!r.pass) {
        ok = false;
        detail += m->name() + ":" + r.check_name + " err=" +
                  fmt(r.max_rel_error) + "; ";
      }
      if (r.check_name.rfind("roundtrip", 0) == 0) {
        worst_roundtrip = std::max(worst_roundtrip, r.max_rel_error);
      }
      if (r.check_name.rfind("transport_isometry", 0) == 0) {
        worst_transport = std::max(worst_transport, r.max_rel_error);
      }
      if (r.check_name.rfind("trig_distance_bound", 0) == 0) {
        worst_slack = std::min(worst_slack, r.metrics.at("min_slack"));
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  ok = ok && worst_roundtrip <= 1e-8 && worst_transport <= 1e-10 &&
       worst_slack >= -1e-8 && secs < 30.0;
  detail += "roundtrip=" + fmt(worst_roundtrip) +
            " transport=" + fmt(worst_transport) +
            " trig_slack=" + fmt(worst_slack) + " time=" + fmt(secs) + "s";
  return ok;
}

// ---------------------------------------------------------------------------
// 2. Benchmark oracle FD checks: gradients <= 1e-5, second-order vs FD
//    <= 1e-4, adjoint consistency <= 1e-3, over >= 10 random points each.
bool criterion2(std::string& detail) {
  struct Named {
    const char* name;
    BilevelProblem problem;
  };
  std::vector<Named> problems;
  problems.push_back({"toy", make_toy_quadratic(6, 5, 3).first});
  problems.push_back(
      {"similarity", make_simple_similarity(100, 50, 20, 0.01, 3).first});
  problems.push_back(
      {"shallow", make_shallow_hyperrep(200, 50, 10, 0.1, 0.1, 3).first});
  problems.push_back(
      {"robust_km", make_robust(RobustLoss::kKarcherMean, 10, 20, 3).first});
  problems.push_back(
      {"robust_mle", make_robust(RobustLoss::kGaussianMle, 100, 20, 3).first});
  bool ok = true;
  for (const auto& [name, p] : problems) {
    for (const CheckReport& r : check_problem_gradients(p, 10, 7)) {
      if (!r.pass) {
        ok = false;
        detail += std::string(name) + "." + r.check_name + "=" +
                  fmt(r.max_rel_error) + "; ";
      }
    }
    for (const CheckReport& r : check_problem_second_order(p, 10, 11)) {
      if (!r.pass) {
        ok = false;
        detail += std::string(name) + "." + r.check_name + "=" +
                  fmt(r.max_rel_error) + "; ";
      }
    }
  }
  if (ok) detail = "all oracle FD checks passed (5 problems, 10 points each)";
  return ok;
}

// ---------------------------------------------------------------------------
// 3. Toy-quadratic rate: AdaRHD-GD and AdaRHD-CG, a0=b0=c0=1, T in
//    {100,200,400}; log-log slope of min_t ||Ghat F||^2 vs T <= -0.8.
//    Runtime < 1 min.
bool criterion3(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  Matrix c(2, 2);
  c << 1.0, 0.0, 0.0, 2.0;
  auto [p, inst] = make_toy_quadratic(Matrix(c));
  // Start far enough out that the smallest budget cannot freeze at an exact
  // zero hypergradient (the cg-mode linear solve returns v = 0 once
  // ||G_y f|| <= eps_v, collapsing Ghat F to zero for this problem).
  const Point x0 = make_point(p.upper, colvec({5.0, 5.0}));
  const Point y0 = make_point(p.lower, colvec({0.0, 0.0}));
  bool ok = true;
  for (const InnerMode mode : {InnerMode::kGd, InnerMode::kCg}) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::vector<int> budgets = {100, 200, 400};
    for (const int T : budgets) {
      AdaRHDConfig cfg;
      cfg.T = T;
      cfg.a0 = cfg.b0 = cfg.c0 = 1.0;
      cfg.inner_mode = mode;
      cfg.caps.flat = 100000;
      const RunTrace trace = run_adarhd(p, cfg, x0, y0);
      const double lx = std::log(double(T));
      const double ly =
          std::log(std::max(ergodic_min_gradnorm(trace).back(), 1e-300));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = 3.0;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    detail += std::string(mode == InnerMode::kGd ? "gd" : "cg") +
              "_slope=" + fmt(slope) + " ";
    ok = ok && slope <= -0.8;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail += "time=" + fmt(secs) + "s";
  return ok && secs < 60.0;
}

// ---------------------------------------------------------------------------
// 4. Simple similarity (n=100, d=50, r=20, lambda=0.01, a0=b0=c0=2):
//    AdaRHD-CG hypergradient error (vs the closed-form oracle) falls below
//    1e-4 within 1000 outer iterations, and its final error is at most twice
//    AdaRHD-GD's. Runtime < 10 min. The lower tolerance is pinned tight
//    (1e-12) so the cap-limited inner solve keeps improving y; with the
//    loose default the error floor sits orders of magnitude higher.
bool criterion4(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const auto run_mode = [](InnerMode mode) {
    auto [p, inst] = make_simple_similarity(100, 50, 20, 0.01, 1);
    Rng rng(1);
    const Point w0 = random_point(p.upper, rng);
    const Point m0 = make_point(p.lower, Matrix(Matrix::Identity(50, 50)));
    AdaRHDConfig cfg;
    cfg.T = 1000;
    cfg.inner_mode = mode;
    cfg.map_mode = MapMode::kRetract;
    cfg.a0 = cfg.b0 = cfg.c0 = 2.0;
    cfg.eps_y = 1e-12;
    cfg.eps_v = mode == InnerMode::kCg ? 1e-10 : 1e-10;
    cfg.cg_cap = 300;  // cap 50 leaves a v-side error floor near 3e-4
    cfg.record_hypergrad_error = true;
    return run_adarhd(p, cfg, w0, m0);
  };
  auto cg_future = std::async(std::launch::async, run_mode, InnerMode::kCg);
  const RunTrace gd = run_mode(InnerMode::kGd);
  const RunTrace cg = cg_future.get();

  double cg_min_err = std::numeric_limits<double>::infinity();
  for (const TraceRow& r : cg.rows) {
    if (r.hypergrad_error) {
      cg_min_err = std::min(cg_min_err, *r.hypergrad_error);
    }
  }
  const double cg_final = *cg.rows.back().hypergrad_error;
  const double gd_final = *gd.rows.back().hypergrad_error;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail = "cg_min_err=" + fmt(cg_min_err) + " cg_final=" + fmt(cg_final) +
           " gd_final=" + fmt(gd_final) + " time=" + fmt(secs) + "s";
  return cg_min_err <= 1e-4 && cg_final <= 2.0 * gd_final && secs < 600.0;
}

// ---------------------------------------------------------------------------
// 5. Lower-level inner-iteration bound on the weighted-MLE problem (d=10,
//    n=50): b0 in {0.01, 1, 100} all reach ||G_y g||^2 <= 1e-6 within 2000
//    iterations; with b0=0.01 the accumulator grows first and the residual
//    then decays geometrically (last-quarter ratio < 1). Runtime < 1 min.
bool criterion5(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  auto [p, inst] = make_robust(RobustLoss::kGaussianMle, 50, 10, 5);
  Matrix uniform(50, 1);
  uniform.setConstant(1.0 / 50.0);
  const Point pw = make_point(p.upper, uniform);
  const Point y0 = make_point(p.lower, Matrix(Matrix::Identity(10, 10)));
  bool ok = true;
  for (const double b0 : {0.01, 1.0, 100.0}) {
    std::vector<double> residuals;
    AdaState state(b0);
    Point y = y0;
    int iters = 0;
    for (; iters < 2000; ++iters) {
      const Tangent grad = p.grad_g_y(pw, y);
      const double gsq = inner(grad, grad);
      residuals.push_back(gsq);
      if (gsq <= 1e-6) break;
      const double step = state.update(gsq);
      y = exp(y, -step * grad);
    }
    // Cross-check the replay against the packaged solver.
    const LowerSolveResult solver_res = adaptive_lower_solve(
        p, pw, y0, AdaState(b0), 1e-6, 2000, MapMode::kExp);
    const bool solver_ok = !solver_res.cap_hit &&
                           solver_res.final_residual_sq <= 1e-6 &&
                           solver_res.iterations == iters;
    detail += "b0=" + fmt(b0) + ":K=" + std::to_string(iters) + " ";
    if (residuals.back() > 1e-6 || !solver_ok) {
      ok = false;
      continue;
    }
    if (b0 == 0.01) {
      ok = ok && state.value() > 10.0 * b0;  // stage 1: accumulator growth
      const std::size_t q = residuals.size() * 3 / 4;
      double prod = 1.0;
      int count = 0;
      for (std::size_t i = q; i + 1 < residuals.size(); ++i) {
        prod *= residuals[i + 1] / residuals[i];
        ++count;
      }
      const double ratio = count ? std::pow(prod, 1.0 / count) : 1.0;
      detail += "last_quarter_ratio=" + fmt(ratio) + " ";
      ok = ok && ratio < 1.0;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail += "time=" + fmt(secs) + "s";
  return ok && secs < 60.0;
}

// ---------------------------------------------------------------------------
// 6. TSCG exactness: 20 random SPD tangent systems of dimension <= 15 solved
//    to residual <= 1e-10 within dim+2 iterations, matching a dense direct
//    solve within 1e-8.
bool criterion6(std::string& detail) {
  auto spd = make_spd(5);  // tangent dimension 15
  const Eigen::Index dim = spd->dim();
  Rng rng(13);
  std::normal_distribution<double> n01;
  bool ok = true;
  int worst_iters = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Point y = random_point(spd, rng);
    const auto basis = spd->tangent_basis(y.blocks);
    Matrix g(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) g(i, j) = n01(rng);
    const Matrix h =
        sym(g * g.transpose()) + 0.5 * Matrix::Identity(dim, dim);
    const auto h_apply = [&](const Tangent& v) {
      Vector coef(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        coef[i] = inner(Tangent{y, basis[static_cast<std::size_t>(i)]}, v);
      }
      const Vector hv = h * coef;
      Tangent out = zero_tangent(y);
      for (Eigen::Index i = 0; i < dim; ++i) {
        out = out + hv[i] * Tangent{y, basis[static_cast<std::size_t>(i)]};
      }
      return out;
    };
    const Tangent b = random_tangent(y, rng);
    const LinearSolveResult res =
        tscg_solve_operator(h_apply, b, zero_tangent(y), 1e-10, 1000);
    worst_iters = std::max(worst_iters, res.iterations);
    // Dense direct solve in the same basis.
    Vector rhs(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      rhs[i] = inner(Tangent{y, basis[static_cast<std::size_t>(i)]}, b);
    }
    const Vector direct = h.ldlt().solve(rhs);
    Tangent vd = zero_tangent(y);
    for (Eigen::Index i = 0; i < dim; ++i) {
      vd = vd + direct[i] * Tangent{y, basis[static_cast<std::size_t>(i)]};
    }
    const double gap = norm(res.v - vd);
    worst_gap = std::max(worst_gap, gap);
    ok = ok && std::sqrt(res.final_residual_sq) <= 1e-10 &&
         res.iterations <= dim + 2 && gap <= 1e-8;
  }
  detail = "worst_iters=" + std::to_string(worst_iters) + " (dim+2=" +
           std::to_string(dim + 2) + ") worst_gap_to_direct=" + fmt(worst_gap);
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Robustness sweep on shallow hyper-representation (n=200, d=50, r=10,
//    lambda=0.1): every AdaRHD run over step seeds {0.2,1,2,10,20} x 5
//    random seeds converges (ergodic min <= 1e-2); RHGD over eta in
//    {5,1,0.5,0.1,0.05} has at least one divergence for every random seed.
//    Runtime < 15 min.
bool criterion7(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> ada_seeds = {0.2, 1.0, 2.0, 10.0, 20.0};
  const std::vector<double> etas = {5.0, 1.0, 0.5, 0.1, 0.05};
  const std::vector<unsigned long long> seeds = {1, 2, 3, 4, 5};

  int ada_converged = 0, ada_total = 0;
  std::vector<int> rhgd_diverged_per_seed(seeds.size(), 0);

  struct Job {
    bool adaptive;
    double step;
    std::size_t seed_idx;
  };
  std::vector<Job> jobs;
  for (const double s : ada_seeds) {
    for (std::size_t i = 0; i < seeds.size(); ++i) jobs.push_back({true, s, i});
  }
  for (const double e : etas) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      jobs.push_back({false, e, i});
    }
  }

  std::mutex mu;
  std::size_t next = 0;
  const auto worker = [&] {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= jobs.size()) return;
        idx = next++;
      }
      const Job& job = jobs[idx];
      auto [p, inst] =
          make_shallow_hyperrep(200, 50, 10, 0.1, 0.1, seeds[job.seed_idx]);
      Rng rng(seeds[job.seed_idx]);
      const Point a0 = random_point(p.upper, rng);
      const Point beta0 =
          make_point(p.lower, Matrix(Matrix::Zero(p.lower->dim(), 1)));
      if (job.adaptive) {
        AdaRHDConfig cfg;
        cfg.T = 300;
        cfg.inner_mode = InnerMode::kCg;
        cfg.map_mode = MapMode::kRetract;
        cfg.a0 = cfg.b0 = cfg.c0 = job.step;
        cfg.eps_v = 1e-10;
        cfg.seed = seeds[job.seed_idx];
        bool converged = false;
        try {
          const RunTrace trace = run_adarhd(p, cfg, a0, beta0);
          converged = ergodic_min_gradnorm(trace).back() <= 1e-2;
        } catch (const RunDivergence&) {
          converged = false;
        }
        std::lock_guard<std::mutex> lock(mu);
        ++ada_total;
        if (converged) ++ada_converged;
      } else {
        RHGDConfig cfg;
        cfg.T = 300;
        cfg.eta_x = cfg.eta_y = job.step;
        cfg.inner_iters = 50;
        cfg.seed = seeds[job.seed_idx];
        const RunTrace trace = run_rhgd(p, cfg, a0, beta0);
        if (trace.status == "diverged") {
          std::lock_guard<std::mutex> lock(mu);
          ++rhgd_diverged_per_seed[job.seed_idx];
        }
      }
    }
  };
  std::thread t1(worker), t2(worker);
  t1.join();
  t2.join();

  bool every_seed_has_divergence = true;
  for (const int count : rhgd_diverged_per_seed) {
    if (count == 0) every_seed_has_divergence = false;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail = "ada_converged=" + std::to_string(ada_converged) + "/" +
           std::to_string(ada_total) + " rhgd_divergences_per_seed=[";
  for (std::size_t i = 0; i < rhgd_diverged_per_seed.size(); ++i) {
    detail += (i ? "," : "") + std::to_string(rhgd_diverged_per_seed[i]);
  }
  detail += "] time=" + fmt(secs) + "s";
  return ada_converged == ada_total && ada_total == 25 &&
         every_seed_has_divergence && secs < 900.0;
}

// ---------------------------------------------------------------------------
// 8. Robust KM (d=20, n=10) and MLE (d=20, n=100) with 1/a0 = eta = 0.1:
//    AdaRHD reaches ergodic min <= 1e-3 in less wall time than RHGD-50,
//    averaged over 5 seeds, with both reaching the accuracy. Runtime < 10
//    min.
bool criterion8(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  for (const RobustLoss loss :
       {RobustLoss::kKarcherMean, RobustLoss::kGaussianMle}) {
    const Eigen::Index n = loss == RobustLoss::kKarcherMean ? 10 : 100;
    const char* tag = loss == RobustLoss::kKarcherMean ? "km" : "mle";
    double ada_sum = 0.0, rhgd_sum = 0.0;
    int ada_reached = 0, rhgd_reached = 0;
    for (unsigned long long seed = 1; seed <= 5; ++seed) {
      auto [p, inst] = make_robust(loss, n, 20, seed);
      Matrix uniform(n, 1);
      uniform.setConstant(1.0 / double(n));
      const Point p0 = make_point(p.upper, uniform);
      const Point y0 = make_point(p.lower, Matrix(Matrix::Identity(20, 20)));

      AdaRHDConfig acfg;
      acfg.T = 300;
      acfg.inner_mode = InnerMode::kCg;
      acfg.map_mode = MapMode::kRetract;
      acfg.a0 = acfg.b0 = acfg.c0 = 10.0;  // step seeds 1/a0 = 0.1
      acfg.eps_v = 1e-10;
      const RunTrace ada = run_adarhd(p, acfg, p0, y0);
      const auto ada_times = time_to_thresholds(ada, {1e-3});
      if (ada_times.at(1e-3)) {
        ++ada_reached;
        ada_sum += *ada_times.at(1e-3);
      }

      RHGDConfig rcfg;
      rcfg.T = 600;
      rcfg.eta_x = rcfg.eta_y = 0.1;
      rcfg.inner_iters = 50;
      rcfg.map_mode = MapMode::kRetract;
      const RunTrace rhgd = run_rhgd(p, rcfg, p0, y0);
      const auto rhgd_times = time_to_thresholds(rhgd, {1e-3});
      if (rhgd_times.at(1e-3)) {
        ++rhgd_reached;
        rhgd_sum += *rhgd_times.at(1e-3);
      }
    }
    const double ada_mean = ada_reached ? ada_sum / ada_reached : 1e300;
    const double rhgd_mean = rhgd_reached ? rhgd_sum / rhgd_reached : 1e300;
    detail += std::string(tag) + ": ada=" + fmt(ada_mean) + "s(" +
              std::to_string(ada_reached) + "/5) rhgd=" + fmt(rhgd_mean) +
              "s(" + std::to_string(rhgd_reached) + "/5)  ";
    ok = ok && ada_reached == 5 && rhgd_reached == 5 && ada_mean < rhgd_mean;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  detail += "time=" + fmt(secs) + "s";
  return ok && secs < 600.0;
}

// ---------------------------------------------------------------------------
// 9. Min-max on the analytic Euclidean saddle: final |x - x*| <= 1e-2 at
//    T=500 in both exp and retract modes. The lower tolerance is pinned at
//    1e-8: the default 1/T leaves a lower-solve bias of sqrt(1/T) ~ 0.045
//    that the 1e-2 target cannot absorb.
bool criterion9(std::string& detail) {
  const BilevelProblem p = make_minmax_saddle();
  const Point x0 = make_point(p.upper, colvec({1.0}));
  const Point y0 = make_point(p.lower, colvec({-0.5}));
  bool ok = true;
  for (const MapMode mode : {MapMode::kExp, MapMode::kRetract}) {
    AdaRHDConfig cfg;
    cfg.T = 500;
    cfg.map_mode = mode;
    cfg.eps_y = 1e-8;
    cfg.caps.flat = 10000;
    const RunTrace trace = run_minmax(p, cfg, x0, y0);
    const double final_x = std::abs(trace.final_x->block()(0, 0));
    detail += std::string(mode == MapMode::kExp ? "exp" : "retract") +
              ":|x|=" + fmt(final_x) + " ";
    ok = ok && final_x <= 1e-2;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 10. Replay determinism: repeated runs of a spec yield identical numeric
//     trace columns (wall time excluded).
bool criterion10(std::string& detail) {
  nlohmann::json j;
  j["problem"] = {{"kind", "simple_similarity"},
                  {"n", 20},
                  {"d", 8},
                  {"r", 3},
                  {"lambda", 0.01},
                  {"seed", 7}};
  j["solver"] = {{"algorithm", "adarhd_r"}, {"inner_mode", "cg"}, {"T", 40},
                 {"a0", 2.0},               {"b0", 2.0},          {"c0", 2.0},
                 {"cap_flat", 200},         {"seed", 7}};
  const auto strip_time = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      int col = 0;
      while (std::getline(row, cell, ',')) {
        if (col != 6) out << cell << ',';
        ++col;
      }
      out << '\n';
    }
    return out.str();
  };
  std::vector<std::string> contents;
  for (int rep = 0; rep < 2; ++rep) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("rbopt_acceptance_replay_" + std::to_string(rep));
    std::filesystem::remove_all(dir);
    j["output_dir"] = dir.string();
    const auto outcomes = run_experiment(experiment_spec_from_json(j));
    contents.push_back(strip_time(outcomes.at(0).trace_path));
    std::filesystem::remove_all(dir);
  }
  const bool ok = contents[0] == contents[1] && !contents[0].empty();
  detail = ok ? "numeric columns bit-identical across replays"
              : "replay mismatch";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "manifold property suite", criterion1},
      {2, "benchmark oracle FD checks", criterion2},
      {3, "toy-quadratic 1/T rate", criterion3},
      {4, "simple-similarity hypergradient error", criterion4},
      {5, "adaptive lower-solve iteration bound", criterion5},
      {6, "TSCG exactness", criterion6},
      {7, "robustness sweep (shallow hyper-representation)", criterion7},
      {8, "robust KM/MLE time-to-accuracy", criterion8},
      {9, "min-max saddle", criterion9},
      {10, "replay determinism", criterion10},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s -- %s\n", pass ? "PASS" : "FAIL", c.id,
                c.name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
