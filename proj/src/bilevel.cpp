#include "rbopt/bilevel.hpp"

#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

namespace {

double fd_step(double h, const Tangent& v) {
  if (h < 1e-10) {
    throw ToleranceError("finite-difference step below 1e-10");
  }
  return h / (1.0 + norm(v));
}

}  // namespace

Tangent fd_hess_g_y_vec(const BilevelProblem& p, const Point& x,
                        const Point& y, const Tangent& v, double h) {
  const double s = fd_step(h, v);
  const Point yp = exp(y, s * v);
  const Point ym = exp(y, -s * v);
  const Tangent gp = transport(yp, y, p.grad_g_y(x, yp));
  const Tangent gm = transport(ym, y, p.grad_g_y(x, ym));
  return (1.0 / (2.0 * s)) * (gp - gm);
}

Tangent fd_cross_g_xy_vec(const BilevelProblem& p, const Point& x,
                          const Point& y, const Tangent& v, double h) {
  if (!p.grad_g_x) {
    throw UnsupportedOperation(
        "fd_cross_g_xy_vec: problem does not provide grad_g_x");
  }
  const double s = fd_step(h, v);
  const Point yp = exp(y, s * v);
  const Point ym = exp(y, -s * v);
  // grad_g_x stays rooted at x while y varies, so no transport is needed.
  const Tangent gp = p.grad_g_x(x, yp);
  const Tangent gm = p.grad_g_x(x, ym);
  return (1.0 / (2.0 * s)) * (gp - gm);
}

Tangent fd_cross_g_yx_vec(const BilevelProblem& p, const Point& x,
                          const Point& y, const Tangent& u, double h) {
  const double s = fd_step(h, u);
  const Point xp = exp(x, s * u);
  const Point xm = exp(x, -s * u);
  const Tangent gp = p.grad_g_y(xp, y);
  const Tangent gm = p.grad_g_y(xm, y);
  return (1.0 / (2.0 * s)) * (gp - gm);
}

Tangent hess_g_y_apply(const BilevelProblem& p, const Point& x, const Point& y,
                       const Tangent& v) {
  if (p.hess_g_y_vec) return p.hess_g_y_vec(x, y, v);
  return fd_hess_g_y_vec(p, x, y, v);
}

Tangent cross_g_xy_apply(const BilevelProblem& p, const Point& x,
                         const Point& y, const Tangent& v) {
  if (p.cross_g_xy_vec) return p.cross_g_xy_vec(x, y, v);
  return fd_cross_g_xy_vec(p, x, y, v);
}

}  // namespace rbopt
