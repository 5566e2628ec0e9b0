#include "rbopt/adarhd.hpp"

#include <chrono>
#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

std::vector<std::string> validate(const AdaRHDConfig& cfg) {
  if (cfg.T < 1) throw ConfigError("adarhd: T must be >= 1");
  if (cfg.a0 <= 0 || cfg.b0 <= 0 || cfg.c0 <= 0) {
    throw ConfigError("adarhd: step-size seeds must be > 0");
  }
  if ((cfg.eps_y && *cfg.eps_y <= 0) || (cfg.eps_v && *cfg.eps_v <= 0)) {
    throw ConfigError("adarhd: tolerances must be > 0");
  }
  if (cfg.hypergrad_error_every < 1) {
    throw ConfigError("adarhd: hypergrad_error_every must be >= 1");
  }
  std::vector<std::string> warnings;
  if (cfg.inner_mode == InnerMode::kCg && cfg.c0 != 1.0) {
    warnings.push_back(
        "c0 override has no effect in cg mode (c-accumulator unused)");
  }
  return warnings;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

RunTrace run_adarhd(const BilevelProblem& p, const AdaRHDConfig& cfg,
                    std::optional<Point> x0, std::optional<Point> y0,
                    const OuterObserver* observer) {
  RunTrace trace;
  trace.warnings = validate(cfg);

  Rng rng(cfg.seed);
  Point x = x0 ? *x0 : random_point(p.upper, rng);
  Point y = y0 ? *y0 : random_point(p.lower, rng);

  const double eps_y = cfg.eps_y ? *cfg.eps_y : 1.0 / cfg.T;
  const double eps_v = cfg.eps_v ? *cfg.eps_v : 1.0 / cfg.T;
  const double stop_sq = cfg.early_stop_hypergrad_sq
                             ? *cfg.early_stop_hypergrad_sq
                             : 1.0 / cfg.T;

  AdaState a_state(cfg.a0);
  AdaState b_state(cfg.b0);
  AdaState c_state(cfg.c0);
  std::optional<Tangent> v_carry;  // v_{t-1}^{N_{t-1}}, based at the previous y
  bool last_iter_cap_hit = false;

  const auto start = Clock::now();
  for (int t = 0; t < cfg.T; ++t) {
    last_iter_cap_hit = false;
    if (cfg.reset_accumulators_each_outer) {
      b_state = AdaState(cfg.b0);
      c_state = AdaState(cfg.c0);
    }
    const int cap = cfg.caps.at(t);

    LowerSolveResult lower;
    try {
      lower = adaptive_lower_solve(p, x, y, b_state, eps_y, cap, cfg.map_mode);
    } catch (const DivergenceError& e) {
      trace.status = "diverged";
      throw RunDivergence(std::string("run_adarhd: lower solve diverged at t=") +
                              std::to_string(t) + " (" + e.what() + ")",
                          std::move(trace));
    }
    y = lower.y;
    b_state = lower.state;
    if (lower.cap_hit) {
      ++trace.cap_hits;
      last_iter_cap_hit = true;
    }

    Tangent v = zero_tangent(y);
    int n_t = 0;
    const Tangent* v_warm_ptr = nullptr;
    Tangent v_warm = v;
    if (cfg.inner_mode == InnerMode::kGd) {
      // Warm start: transport the carried v to the new base point.
      if (v_carry) v_warm = transport(y, *v_carry);
      v_warm_ptr = &v_warm;
      LinearSolveResult lin;
      try {
        lin = adaptive_linear_solve_gd(p, x, y, v_warm, c_state, eps_v, cap);
      } catch (const DivergenceError& e) {
        trace.status = "diverged";
        throw RunDivergence(
            std::string("run_adarhd: linear solve diverged at t=") +
                std::to_string(t) + " (" + e.what() + ")",
            std::move(trace));
      }
      v = lin.v;
      n_t = lin.iterations;
      c_state = lin.state;
      if (lin.cap_hit) {
        ++trace.cap_hits;
        last_iter_cap_hit = true;
      }
    } else {
      const LinearSolveResult lin =
          tscg_solve(p, x, y, zero_tangent(y), eps_v, cfg.cg_cap);
      v = lin.v;
      n_t = lin.iterations;
      if (lin.cap_hit) {
        ++trace.cap_hits;
        last_iter_cap_hit = true;
      }
    }
    v_carry = v;

    const Tangent ghat = approx_hypergradient(p, x, y, v);
    const double gsq = inner(ghat, ghat);
    if (!std::isfinite(gsq)) {
      trace.status = "diverged";
      throw RunDivergence("run_adarhd: non-finite hypergradient at t=" +
                              std::to_string(t),
                          std::move(trace));
    }
    const double step = a_state.update(gsq);

    TraceRow row;
    row.t = t;
    row.hypergrad_sq = gsq;
    row.a = a_state.value();
    row.K_t = lower.iterations;
    row.N_t = n_t;
    row.upper_obj = p.f(x, y);
    row.time_s = seconds_since(start);
    if (cfg.record_hypergrad_error && p.exact_hypergradient &&
        t % cfg.hypergrad_error_every == 0) {
      row.hypergrad_error = norm(ghat - p.exact_hypergradient(x));
    }
    trace.rows.push_back(row);

    if (observer) {
      (*observer)(OuterObservation{t, x, y, v_warm_ptr, ghat});
    }

    if (cfg.early_stop && gsq <= stop_sq) {
      trace.early_stopped = true;
      break;
    }

    const Tangent move = -step * ghat;
    x = (cfg.map_mode == MapMode::kExp) ? exp(x, move) : retract(x, move);
  }

  if (last_iter_cap_hit) trace.status = "cap";
  trace.final_x = x;
  trace.final_y = y;
  trace.final_v = v_carry;
  return trace;
}

RunTrace run_minmax(const BilevelProblem& p, const AdaRHDConfig& cfg,
                    std::optional<Point> x0, std::optional<Point> y0) {
  BilevelProblem q = p;
  if (!q.g) {
    q.g = [f = p.f](const Point& x, const Point& y) { return -f(x, y); };
  }
  if (!q.grad_g_y) {
    q.grad_g_y = [gf = p.grad_f_y](const Point& x, const Point& y) {
      return -gf(x, y);
    };
  }

  RunTrace trace;
  trace.warnings = validate(cfg);

  Rng rng(cfg.seed);
  Point x = x0 ? *x0 : random_point(q.upper, rng);
  Point y = y0 ? *y0 : random_point(q.lower, rng);

  const double eps_y = cfg.eps_y ? *cfg.eps_y : 1.0 / cfg.T;
  const double stop_sq = cfg.early_stop_hypergrad_sq
                             ? *cfg.early_stop_hypergrad_sq
                             : 1.0 / cfg.T;
  AdaState a_state(cfg.a0);
  AdaState b_state(cfg.b0);
  bool last_iter_cap_hit = false;

  const auto start = Clock::now();
  for (int t = 0; t < cfg.T; ++t) {
    last_iter_cap_hit = false;
    if (cfg.reset_accumulators_each_outer) b_state = AdaState(cfg.b0);
    const int cap = cfg.caps.at(t);
    LowerSolveResult lower;
    try {
      lower = adaptive_lower_solve(q, x, y, b_state, eps_y, cap, cfg.map_mode);
    } catch (const DivergenceError& e) {
      trace.status = "diverged";
      throw RunDivergence(std::string("run_minmax: lower solve diverged at t=") +
                              std::to_string(t) + " (" + e.what() + ")",
                          std::move(trace));
    }
    y = lower.y;
    b_state = lower.state;
    if (lower.cap_hit) {
      ++trace.cap_hits;
      last_iter_cap_hit = true;
    }

    const Tangent ghat = q.grad_f_x(x, y);
    const double gsq = inner(ghat, ghat);
    if (!std::isfinite(gsq)) {
      trace.status = "diverged";
      throw RunDivergence("run_minmax: non-finite gradient at t=" +
                              std::to_string(t),
                          std::move(trace));
    }
    const double step = a_state.update(gsq);

    TraceRow row;
    row.t = t;
    row.hypergrad_sq = gsq;
    row.a = a_state.value();
    row.K_t = lower.iterations;
    row.N_t = 0;
    row.upper_obj = q.f(x, y);
    row.time_s = seconds_since(start);
    trace.rows.push_back(row);

    if (cfg.early_stop && gsq <= stop_sq) {
      trace.early_stopped = true;
      break;
    }

    const Tangent move = -step * ghat;
    x = (cfg.map_mode == MapMode::kExp) ? exp(x, move) : retract(x, move);
  }

  if (last_iter_cap_hit) trace.status = "cap";
  trace.final_x = x;
  trace.final_y = y;
  return trace;
}

std::vector<double> ergodic_min_gradnorm(const RunTrace& trace) {
  if (trace.rows.empty()) {
    throw ContractViolation("ergodic_min_gradnorm: empty trace");
  }
  std::vector<double> series;
  series.reserve(trace.rows.size());
  double best = trace.rows.front().hypergrad_sq;
  for (const TraceRow& r : trace.rows) {
    best = std::min(best, r.hypergrad_sq);
    series.push_back(best);
  }
  return series;
}

}  // namespace rbopt
