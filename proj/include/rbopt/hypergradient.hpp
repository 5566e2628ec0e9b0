#pragma once

#include "rbopt/bilevel.hpp"

namespace rbopt {

/// Gradient of the tangent-space quadratic
///   R(x, y, v) = (1/2) <v, H_y g(x, y)[v]>_y - <v, G_y f(x, y)>_y
/// together with its squared norm.
struct QuadResidual {
  Tangent value;   // H_y g(x, y)[v] - G_y f(x, y), a tangent at y
  double norm_sq;  // <value, value>_y
};

QuadResidual quad_residual(const BilevelProblem& p, const Point& x,
                           const Point& yhat, const Tangent& v);

/// Approximate Riemannian hypergradient
///   Ghat F(x, yhat, vhat) = G_x f(x, yhat) - G^2_xy g(x, yhat)[vhat].
Tangent approx_hypergradient(const BilevelProblem& p, const Point& x,
                             const Point& yhat, const Tangent& vhat);

/// || Ghat F(x, yhat, vhat) - G F(x) ||_x against the problem's exact
/// hypergradient oracle. Throws UnsupportedOperation when the oracle is
/// missing.
double hypergradient_error(const BilevelProblem& p, const Point& x,
                           const Point& yhat, const Tangent& vhat);

/// Exact hypergradient by composition: y* from the closed-form lower oracle,
/// v* from a dense tangent-basis solve of H_y g(x, y*)[v] = G_y f(x, y*),
/// then the hypergradient formula. Intended for desk-scale diagnostics;
/// refuses tangent dimensions above 10^4.
Tangent exact_hypergradient_dense(const BilevelProblem& p, const Point& x);

/// Solves H[v] = b on T_y through an orthonormal tangent basis and a dense
/// LDLT factorization.
Tangent dense_tangent_solve(
    const ManifoldPtr& m, const Point& y,
    const std::function<Tangent(const Tangent&)>& h_apply, const Tangent& b);

}  // namespace rbopt
