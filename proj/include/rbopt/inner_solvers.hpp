#pragma once

#include "rbopt/bilevel.hpp"
#include "rbopt/hypergradient.hpp"

namespace rbopt {

enum class MapMode { kExp, kRetract };

/// Inverse-cumulative-gradient-norm step-size state. `accumulator_sq` stores
/// the squared accumulator (b_k^2, c_n^2 or a_t^2); after an update the step
/// size is 1 / sqrt(accumulator_sq). The accumulator never decreases and is
/// carried across outer iterations.
struct AdaState {
  double initial = 1.0;
  double accumulator_sq = 1.0;

  explicit AdaState(double seed = 1.0)
      : initial(seed), accumulator_sq(seed * seed) {}

  /// Accumulates a squared gradient norm and returns the new step size.
  double update(double grad_norm_sq) {
    accumulator_sq += grad_norm_sq;
    return 1.0 / std::sqrt(accumulator_sq);
  }

  double value() const { return std::sqrt(accumulator_sq); }
};

struct LowerSolveResult {
  Point y;
  int iterations = 0;       // K_t
  double final_residual_sq = 0.0;
  AdaState state;
  bool cap_hit = false;
};

struct LinearSolveResult {
  Tangent v;
  int iterations = 0;       // N_t
  double final_residual_sq = 0.0;
  AdaState state;
  bool cap_hit = false;
};

/// Adaptive Riemannian gradient descent on the lower-level problem: while
/// ||G_y g(x, y)||^2 > eps_y, update b and step y <- map_y(-(1/b) G_y g)
/// with b updated before the step. Stops early when the iteration cap is
/// reached (cap_hit flagged, not fatal). Throws DivergenceError on
/// non-finite gradients.
LowerSolveResult adaptive_lower_solve(const BilevelProblem& p, const Point& x,
                                      const Point& y_init, AdaState state,
                                      double eps_y, int cap,
                                      MapMode map_mode);

/// Adaptive gradient descent on the tangent-space quadratic: while
/// ||grad_v R||^2 > eps_v, update c and step v <- v - (1/c) grad_v R.
/// Iterates stay in T_yhat (plain vector updates).
LinearSolveResult adaptive_linear_solve_gd(const BilevelProblem& p,
                                           const Point& x, const Point& yhat,
                                           const Tangent& v_init,
                                           AdaState state, double eps_v,
                                           int cap);

/// Tangent-space conjugate gradient for H_y g(x, yhat)[v] = G_y f(x, yhat).
/// The loop tests the unsquared residual norm against eps_v. The residual is
/// maintained recursively and re-evaluated every 50 iterations. Throws
/// IndefinitenessError when <p, H[p]> <= 0.
LinearSolveResult tscg_solve(const BilevelProblem& p, const Point& x,
                             const Point& yhat, const Tangent& v0,
                             double eps_v, int cap);

/// Operator-level TSCG used by the problem-level overload and by tests.
LinearSolveResult tscg_solve_operator(
    const std::function<Tangent(const Tangent&)>& h_apply, const Tangent& b,
    const Tangent& v0, double eps_v, int cap);

}  // namespace rbopt
