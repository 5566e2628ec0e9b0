#pragma once

#include <optional>

#include "rbopt/errors.hpp"
#include "rbopt/inner_solvers.hpp"

namespace rbopt {

enum class InnerMode { kGd, kCg };

/// Inner-iteration cap schedule. The default follows min{50 * floor(t/5),
/// 500} (which caps the first five outer iterations at zero inner steps);
/// set `flat` to override with a constant cap.
struct InnerCapSchedule {
  int base = 50;
  int period = 5;
  int max_cap = 500;
  std::optional<int> flat;

  int at(int t) const {
    if (flat) return *flat;
    return std::min(base * (t / period), max_cap);
  }
};

struct AdaRHDConfig {
  int T = 100;
  double a0 = 1.0;
  double b0 = 1.0;
  double c0 = 1.0;
  InnerMode inner_mode = InnerMode::kGd;
  MapMode map_mode = MapMode::kExp;
  /// Tolerances; default to 1/T when unset. In gd mode the linear loop
  /// compares the squared residual norm to eps_v; in cg mode the unsquared
  /// norm is compared, as the two solver listings are written.
  std::optional<double> eps_y;
  std::optional<double> eps_v;
  InnerCapSchedule caps;
  /// Cap for the conjugate-gradient linear solver (cg mode only).
  int cg_cap = 50;
  /// Optional early stop on ||Ghat F||^2; off by default. When enabled
  /// without an explicit threshold, 1/T is used.
  bool early_stop = false;
  std::optional<double> early_stop_hypergrad_sq;
  unsigned long long seed = 0;
  /// Ablation switch: reset the b/c accumulators at the start of every outer
  /// iteration instead of carrying them (the carried form is the default).
  bool reset_accumulators_each_outer = false;
  /// Record per-iteration hypergradient error against the problem's exact
  /// oracle (every `hypergrad_error_every` iterations).
  bool record_hypergrad_error = false;
  int hypergrad_error_every = 1;
};

/// Validates hard constraints (throws ConfigError) and returns soft
/// warnings, e.g. a c0 override in cg mode where the c-accumulator is
/// unused.
std::vector<std::string> validate(const AdaRHDConfig& cfg);

struct TraceRow {
  int t = 0;
  double hypergrad_sq = 0.0;  // ||Ghat F(x_t, y_t^{K_t}, v_t^{N_t})||^2
  double a = 0.0;             // a_{t+1}
  int K_t = 0;
  int N_t = 0;
  double upper_obj = 0.0;     // f(x_t, y_t^{K_t})
  double time_s = 0.0;
  std::optional<double> hypergrad_error;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::optional<Point> final_x;
  std::optional<Point> final_y;
  std::optional<Tangent> final_v;
  std::string status = "ok";  // ok | diverged | cap
  int cap_hits = 0;
  bool early_stopped = false;
  std::vector<std::string> warnings;
};

/// Thrown when the outer loop meets non-finite values; carries the partial
/// trace recorded so far.
struct RunDivergence : Error {
  RunDivergence(const std::string& what, RunTrace trace)
      : Error(what), partial_trace(std::move(trace)) {}
  RunTrace partial_trace;
};

/// Observer hook for white-box tests; called once per outer iteration after
/// the hypergradient step is assembled.
struct OuterObservation {
  int t;
  const Point& x;
  const Point& y;
  const Tangent* v_warm_start;  // gd mode only, nullptr otherwise
  const Tangent& hypergrad;
};
using OuterObserver = std::function<void(const OuterObservation&)>;

/// Adaptive Riemannian hypergradient descent. Warm-starts y from the
/// previous inner solution; in gd mode warm-starts v by transporting the
/// previous v to the new base point, in cg mode restarts v at zero. The
/// x-step uses the exponential map or the retraction according to
/// `map_mode`.
RunTrace run_adarhd(const BilevelProblem& p, const AdaRHDConfig& cfg,
                    std::optional<Point> x0 = std::nullopt,
                    std::optional<Point> y0 = std::nullopt,
                    const OuterObserver* observer = nullptr);

/// Min-max specialization for min_x max_y f(x, y): the lower-level objective
/// is g = -f and the hypergradient reduces to G_x f(x, yhat); the trace has
/// N_t = 0. The problem must provide f, grad_f_x and grad_f_y; g and
/// grad_g_y are derived when absent.
RunTrace run_minmax(const BilevelProblem& p, const AdaRHDConfig& cfg,
                    std::optional<Point> x0 = std::nullopt,
                    std::optional<Point> y0 = std::nullopt);

/// Running minimum of ||Ghat F||^2 over the trace (the ergodic metric).
std::vector<double> ergodic_min_gradnorm(const RunTrace& trace);

}  // namespace rbopt
