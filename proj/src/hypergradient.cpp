#include "rbopt/hypergradient.hpp"

#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

QuadResidual quad_residual(const BilevelProblem& p, const Point& x,
                           const Point& yhat, const Tangent& v) {
  const Tangent hv = hess_g_y_apply(p, x, yhat, v);
  const Tangent r = hv - p.grad_f_y(x, yhat);
  return {r, inner(r, r)};
}

Tangent approx_hypergradient(const BilevelProblem& p, const Point& x,
                             const Point& yhat, const Tangent& vhat) {
  return p.grad_f_x(x, yhat) - cross_g_xy_apply(p, x, yhat, vhat);
}

double hypergradient_error(const BilevelProblem& p, const Point& x,
                           const Point& yhat, const Tangent& vhat) {
  if (!p.exact_hypergradient) {
    throw UnsupportedOperation(
        "hypergradient_error: problem does not provide an exact oracle");
  }
  const Tangent approx = approx_hypergradient(p, x, yhat, vhat);
  return norm(approx - p.exact_hypergradient(x));
}

Tangent dense_tangent_solve(
    const ManifoldPtr& m, const Point& y,
    const std::function<Tangent(const Tangent&)>& h_apply, const Tangent& b) {
  const Eigen::Index n = m->dim();
  if (n > 10000) {
    throw UnsupportedOperation(
        "dense_tangent_solve: tangent dimension exceeds 10^4");
  }
  const std::vector<Blocks> basis = m->tangent_basis(y.blocks);
  Matrix h(n, n);
  Vector rhs(n);
  std::vector<Tangent> images;
  images.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    images.push_back(h_apply(Tangent{y, basis[static_cast<std::size_t>(j)]}));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Tangent ei{y, basis[static_cast<std::size_t>(i)]};
    rhs[i] = inner(ei, b);
    for (Eigen::Index j = 0; j < n; ++j) {
      h(i, j) = inner(ei, images[static_cast<std::size_t>(j)]);
    }
  }
  const Matrix hs = 0.5 * (h + h.transpose());
  const Vector coef = hs.ldlt().solve(rhs);
  Tangent v = zero_tangent(y);
  for (Eigen::Index j = 0; j < n; ++j) {
    v = v + coef[j] * Tangent{y, basis[static_cast<std::size_t>(j)]};
  }
  return v;
}

Tangent exact_hypergradient_dense(const BilevelProblem& p, const Point& x) {
  if (!p.lower_closed_form) {
    throw UnsupportedOperation(
        "exact_hypergradient_dense: problem has no closed-form lower oracle");
  }
  const Point ystar = p.lower_closed_form(x);
  const Tangent b = p.grad_f_y(x, ystar);
  const auto h_apply = [&](const Tangent& v) {
    return hess_g_y_apply(p, x, ystar, v);
  };
  const Tangent vstar = dense_tangent_solve(p.lower, ystar, h_apply, b);
  return approx_hypergradient(p, x, ystar, vstar);
}

}  // namespace rbopt
