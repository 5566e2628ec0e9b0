#pragma once

#include <functional>

#include "rbopt/manifold.hpp"

namespace rbopt {

/// Oracle bundle for a bilevel problem
///
///   min_x f(x, y*(x))   s.t.   y*(x) = argmin_y g(x, y),
///
/// with x on `upper` and y on `lower`. Gradients are Riemannian; the
/// second-order operators follow the convention
///
///   <cross_g_xy_vec(x, y, v), u>_x = <D_x(grad_g_y)(x, y)[u], v>_y,
///
/// i.e. cross_g_xy_vec maps T_y -> T_x and is the adjoint of the mixed
/// derivative of grad_g_y along x. hess_g_y_vec is the (self-adjoint)
/// Riemannian Hessian of g in y applied to a tangent at y. Analytic
/// second-order oracles may be left empty, in which case the
/// finite-difference fallbacks below are used. Oracles must be reentrant.
struct BilevelProblem {
  ManifoldPtr upper;
  ManifoldPtr lower;

  std::function<double(const Point&, const Point&)> f;
  std::function<double(const Point&, const Point&)> g;
  std::function<Tangent(const Point&, const Point&)> grad_f_x;
  std::function<Tangent(const Point&, const Point&)> grad_f_y;
  std::function<Tangent(const Point&, const Point&)> grad_g_y;
  /// Optional; required by the finite-difference cross-derivative fallback
  /// and the adjoint diagnostics.
  std::function<Tangent(const Point&, const Point&)> grad_g_x;

  std::function<Tangent(const Point&, const Point&, const Tangent&)>
      hess_g_y_vec;
  std::function<Tangent(const Point&, const Point&, const Tangent&)>
      cross_g_xy_vec;

  /// Optional oracles for diagnostics and benchmarks.
  std::function<Point(const Point&)> lower_closed_form;
  std::function<Tangent(const Point&)> exact_hypergradient;
};

/// Default finite-difference step; the effective step is scaled by
/// 1 / (1 + ||v||).
inline constexpr double kFdStep = 1e-5;

/// Transport-corrected central difference of grad_g_y along the geodesic
/// through y in direction v:
///   [P grad_g_y(x, exp_y(h v)) - P grad_g_y(x, exp_y(-h v))] / (2h).
Tangent fd_hess_g_y_vec(const BilevelProblem& p, const Point& x,
                        const Point& y, const Tangent& v, double h = kFdStep);

/// Central difference of grad_g_x along the geodesic variation of y in
/// direction v; the result lives in T_x. Requires grad_g_x.
Tangent fd_cross_g_xy_vec(const BilevelProblem& p, const Point& x,
                          const Point& y, const Tangent& v,
                          double h = kFdStep);

/// Central difference of grad_g_y along an x-variation in direction u; the
/// adjoint counterpart used by the adjoint-consistency diagnostics.
Tangent fd_cross_g_yx_vec(const BilevelProblem& p, const Point& x,
                          const Point& y, const Tangent& u,
                          double h = kFdStep);

/// Analytic Hessian-vector product when available, FD fallback otherwise.
Tangent hess_g_y_apply(const BilevelProblem& p, const Point& x, const Point& y,
                       const Tangent& v);
/// Analytic cross product when available, FD fallback otherwise.
Tangent cross_g_xy_apply(const BilevelProblem& p, const Point& x,
                         const Point& y, const Tangent& v);

}  // namespace rbopt
