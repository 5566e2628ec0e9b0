#include "rbopt/inner_solvers.hpp"

#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

LowerSolveResult adaptive_lower_solve(const BilevelProblem& p, const Point& x,
                                      const Point& y_init, AdaState state,
                                      double eps_y, int cap,
                                      MapMode map_mode) {
  if (eps_y <= 0) throw ConfigError("adaptive_lower_solve: eps_y must be > 0");
  Point y = y_init;
  std::vector<double> history;
  int k = 0;
  while (true) {
    const Tangent grad = p.grad_g_y(x, y);
    const double gsq = inner(grad, grad);
    if (!std::isfinite(gsq)) {
      throw DivergenceError("adaptive_lower_solve: non-finite gradient",
                            std::move(history));
    }
    history.push_back(gsq);
    if (gsq <= eps_y) {
      return {y, k, gsq, state, false};
    }
    if (k >= cap) {
      return {y, k, gsq, state, true};
    }
    const double step = state.update(gsq);
    const Tangent move = -step * grad;
    y = (map_mode == MapMode::kExp) ? exp(y, move) : retract(y, move);
    ++k;
  }
}

LinearSolveResult adaptive_linear_solve_gd(const BilevelProblem& p,
                                           const Point& x, const Point& yhat,
                                           const Tangent& v_init,
                                           AdaState state, double eps_v,
                                           int cap) {
  if (eps_v <= 0) {
    throw ConfigError("adaptive_linear_solve_gd: eps_v must be > 0");
  }
  Tangent v = v_init;
  std::vector<double> history;
  int n = 0;
  while (true) {
    const QuadResidual r = quad_residual(p, x, yhat, v);
    if (!std::isfinite(r.norm_sq)) {
      throw DivergenceError("adaptive_linear_solve_gd: non-finite residual",
                            std::move(history));
    }
    history.push_back(r.norm_sq);
    if (r.norm_sq <= eps_v) {
      return {v, n, r.norm_sq, state, false};
    }
    if (n >= cap) {
      return {v, n, r.norm_sq, state, true};
    }
    const double step = state.update(r.norm_sq);
    v = v - step * r.value;
    ++n;
  }
}

LinearSolveResult tscg_solve_operator(
    const std::function<Tangent(const Tangent&)>& h_apply, const Tangent& b,
    const Tangent& v0, double eps_v, int cap) {
  if (eps_v <= 0) throw ConfigError("tscg_solve: eps_v must be > 0");
  Tangent v = v0;
  Tangent r = b - h_apply(v);
  Tangent p = r;
  double rsq = inner(r, r);
  int n = 0;
  while (std::sqrt(rsq) > eps_v) {
    if (n >= cap) {
      return {v, n, rsq, AdaState{}, true};
    }
    const Tangent hp = h_apply(p);
    const double php = inner(p, hp);
    if (!std::isfinite(php)) {
      throw DivergenceError("tscg_solve: non-finite curvature",
                            std::vector<double>{rsq});
    }
    if (php <= 0.0) {
      throw IndefinitenessError(
          "tscg_solve: <p, H[p]> <= 0; operator is not positive definite");
    }
    const double alpha = rsq / php;
    v = v + alpha * p;
    ++n;
    if (n % 50 == 0) {
      r = b - h_apply(v);  // periodic re-evaluation controls residual drift
    } else {
      r = r - alpha * hp;
    }
    const double rsq_next = inner(r, r);
    if (!std::isfinite(rsq_next)) {
      throw DivergenceError("tscg_solve: non-finite residual",
                            std::vector<double>{rsq});
    }
    const double beta = rsq_next / rsq;
    rsq = rsq_next;
    p = r + beta * p;
  }
  return {v, n, rsq, AdaState{}, false};
}

LinearSolveResult tscg_solve(const BilevelProblem& p, const Point& x,
                             const Point& yhat, const Tangent& v0,
                             double eps_v, int cap) {
  const Tangent b = p.grad_f_y(x, yhat);
  const auto h_apply = [&](const Tangent& v) {
    return hess_g_y_apply(p, x, yhat, v);
  };
  return tscg_solve_operator(h_apply, b, v0, eps_v, cap);
}

}  // namespace rbopt
