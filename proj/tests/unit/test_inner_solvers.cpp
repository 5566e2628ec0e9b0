#include <doctest.h>

#include <cmath>

#include "rbopt/benchmarks.hpp"
#include "rbopt/errors.hpp"
#include "rbopt/inner_solvers.hpp"

using namespace rbopt;

namespace {

Matrix colvec(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

BilevelProblem diag_system(const Vector& diag, const Vector& b) {
  BilevelProblem p;
  const Eigen::Index n = diag.size();
  p.upper = make_euclidean(n);
  p.lower = make_euclidean(n);
  p.f = [b](const Point&, const Point& y) { return b.dot(y.block().col(0)); };
  p.g = [diag](const Point&, const Point& y) {
    const Vector yv = y.block().col(0);
    return 0.5 * yv.dot(diag.cwiseProduct(yv));
  };
  p.grad_f_x = [](const Point& x, const Point&) { return zero_tangent(x); };
  p.grad_f_y = [b](const Point&, const Point& y) {
    Matrix g(b.size(), 1);
    g.col(0) = b;
    return make_tangent(y, std::move(g));
  };
  p.grad_g_y = [diag](const Point&, const Point& y) {
    Matrix g(diag.size(), 1);
    g.col(0) = diag.cwiseProduct(y.block().col(0));
    return make_tangent(y, std::move(g));
  };
  p.hess_g_y_vec = [diag](const Point&, const Point& y, const Tangent& v) {
    Matrix g(diag.size(), 1);
    g.col(0) = diag.cwiseProduct(v.block().col(0));
    return make_tangent(y, std::move(g));
  };
  return p;
}

}  // namespace

TEST_CASE("AdaState arithmetic: b0=2 with first squared norm 5 gives b1=3") {
  AdaState s(2.0);
  const double step = s.update(5.0);
  CHECK(s.value() == doctest::Approx(3.0));
  CHECK(step == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("adaptive_lower_solve stops immediately at a solution") {
  auto [p, inst] = make_toy_quadratic(2, 2, 0);
  Rng rng(1);
  const Point x = random_point(p.upper, rng);
  const Point ystar = p.lower_closed_form(x);
  const LowerSolveResult res = adaptive_lower_solve(
      p, x, ystar, AdaState(1.0), 1e-8, 1000, MapMode::kExp);
  CHECK(res.iterations == 0);
  CHECK(!res.cap_hit);
  CHECK((res.y.block() - ystar.block()).norm() == doctest::Approx(0.0));
  CHECK(res.state.value() == doctest::Approx(1.0));  // untouched accumulator
}

TEST_CASE("adaptive_lower_solve converges on the weighted-MLE lower problem") {
  auto [p, inst] = make_robust(RobustLoss::kGaussianMle, 10, 5, 3);
  Rng rng(5);
  const Point pw = random_point(p.upper, rng);
  const Point y0 =
      make_point(p.lower, Matrix(Matrix::Identity(5, 5)));
  const LowerSolveResult res = adaptive_lower_solve(
      p, pw, y0, AdaState(1.0), 1e-8, 5000, MapMode::kExp);
  CHECK(!res.cap_hit);
  CHECK(res.final_residual_sq <= 1e-8);
  // Closed form y* = sum_i p_i xi xi^T.
  const Point ystar = p.lower_closed_form(pw);
  CHECK(distance(res.y, ystar) < 1e-3);
}

TEST_CASE("adaptive_linear_solve_gd follows the scalar recursion oracle") {
  // H = I, b = e1, c0 = 1, v0 = 0: residual r_n and accumulator c_n satisfy
  // c_{n+1}^2 = c_n^2 + r_n^2, r_{n+1} = r_n (1 - 1/c_{n+1}).
  const Vector d = colvec({1.0, 1.0, 1.0}).col(0);
  const Vector b = colvec({1.0, 0.0, 0.0}).col(0);
  BilevelProblem p = diag_system(d, b);
  Rng rng(7);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);

  double c_sq = 1.0, r = 1.0;
  int oracle_iters = 0;
  std::vector<double> oracle_residuals;
  while (r * r > 1e-8) {
    oracle_residuals.push_back(r * r);
    c_sq += r * r;
    r *= (1.0 - 1.0 / std::sqrt(c_sq));
    ++oracle_iters;
  }

  const LinearSolveResult res = adaptive_linear_solve_gd(
      p, x, y, zero_tangent(y), AdaState(1.0), 1e-8, 1000);
  CHECK(res.iterations == oracle_iters);
  CHECK(res.iterations <= 60);
  CHECK(res.final_residual_sq <= 1e-8);
  CHECK(res.state.accumulator_sq == doctest::Approx(c_sq).epsilon(1e-12));
}

TEST_CASE("adaptive_linear_solve_gd: exact start and diagonal solve") {
  const Vector d = colvec({1.0, 2.0, 4.0}).col(0);
  const Vector b = colvec({1.0, 1.0, 1.0}).col(0);
  BilevelProblem p = diag_system(d, b);
  Rng rng(9);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);

  const Tangent exact = make_tangent(y, colvec({1.0, 0.5, 0.25}));
  const LinearSolveResult at_solution = adaptive_linear_solve_gd(
      p, x, y, exact, AdaState(1.0), 1e-12, 1000);
  CHECK(at_solution.iterations == 0);

  const LinearSolveResult res = adaptive_linear_solve_gd(
      p, x, y, zero_tangent(y), AdaState(1.0), 1e-10, 5000);
  CHECK((res.v.block() - exact.block()).norm() < 1e-4);
}

TEST_CASE("tscg: single step on the identity, finite termination on diagonals") {
  SUBCASE("H = I solves in one iteration") {
    const Vector d = colvec({1.0, 1.0}).col(0);
    const Vector b = colvec({0.3, -0.4}).col(0);
    BilevelProblem p = diag_system(d, b);
    Rng rng(11);
    const Point x = random_point(p.upper, rng);
    const Point y = random_point(p.lower, rng);
    const LinearSolveResult res =
        tscg_solve(p, x, y, zero_tangent(y), 1e-12, 100);
    CHECK(res.iterations == 1);
    CHECK((res.v.block().col(0) - b).norm() < 1e-12);
  }
  SUBCASE("three distinct eigenvalues terminate within three iterations") {
    const Vector d = colvec({1.0, 2.0, 4.0}).col(0);
    const Vector b = colvec({1.0, 1.0, 1.0}).col(0);
    BilevelProblem p = diag_system(d, b);
    Rng rng(13);
    const Point x = random_point(p.upper, rng);
    const Point y = random_point(p.lower, rng);
    const LinearSolveResult res =
        tscg_solve(p, x, y, zero_tangent(y), 1e-12, 100);
    CHECK(res.iterations <= 3);
    CHECK(std::sqrt(res.final_residual_sq) <= 1e-12);
    CHECK((res.v.block() - colvec({1.0, 0.5, 0.25})).norm() < 1e-12);
  }
}

TEST_CASE("tscg stopping rule uses the unsquared residual norm") {
  // With eps_v = 1e-10 the final residual norm (not its square) must fall
  // below 1e-10 on random SPD tangent systems.
  auto spd = make_spd(3);
  Rng rng(17);
  const Point y = random_point(spd, rng);
  const auto basis = spd->tangent_basis(y.blocks);
  const Eigen::Index n = spd->dim();
  Matrix h(n, n);
  {
    Matrix g(n, n);
    std::normal_distribution<double> n01;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = n01(rng);
    h = sym(g * g.transpose()) + Matrix::Identity(n, n);
  }
  const auto h_apply = [&](const Tangent& v) {
    Vector coef(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      coef[i] = inner(Tangent{y, basis[static_cast<std::size_t>(i)]}, v);
    }
    const Vector out = h * coef;
    Tangent res = zero_tangent(y);
    for (Eigen::Index i = 0; i < n; ++i) {
      res = res + out[i] * Tangent{y, basis[static_cast<std::size_t>(i)]};
    }
    return res;
  };
  const Tangent b = random_tangent(y, rng);
  const LinearSolveResult res =
      tscg_solve_operator(h_apply, b, zero_tangent(y), 1e-10, 200);
  CHECK(std::sqrt(res.final_residual_sq) <= 1e-10);
  CHECK(norm(h_apply(res.v) - b) <= 2e-10);
}

TEST_CASE("tscg raises IndefinitenessError on indefinite operators") {
  const Vector d = colvec({1.0, -1.0}).col(0);
  const Vector b = colvec({0.0, 1.0}).col(0);
  BilevelProblem p = diag_system(d, b);
  Rng rng(19);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);
  CHECK_THROWS_AS(
      (void)tscg_solve(p, x, y, zero_tangent(y), 1e-10, 100),
      IndefinitenessError);
}

TEST_CASE("energy monotonicity of tscg iterates") {
  // R(v) = (1/2)<v, Hv> - <v, b> decreases along CG iterates; check by
  // running with increasing caps.
  const Vector d = colvec({1.0, 3.0, 9.0, 27.0}).col(0);
  const Vector b = colvec({1.0, 1.0, 1.0, 1.0}).col(0);
  BilevelProblem p = diag_system(d, b);
  Rng rng(23);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);
  const auto energy = [&](const Tangent& v) {
    return 0.5 * inner(p.hess_g_y_vec(x, y, v), v) - inner(v, p.grad_f_y(x, y));
  };
  double prev = energy(zero_tangent(y));
  for (int cap = 1; cap <= 4; ++cap) {
    const LinearSolveResult res =
        tscg_solve(p, x, y, zero_tangent(y), 1e-14, cap);
    const double e = energy(res.v);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("two-stage behavior with a tiny b0 on a strongly convex quadratic") {
  // b0 = 0.01: the accumulator grows past the smoothness constant first,
  // then the squared residuals decay geometrically.
  auto [p, inst] = make_toy_quadratic(2, 2, 29);
  Rng rng(31);
  const Point x = random_point(p.upper, rng);
  Point y0 = random_point(p.lower, rng);

  // Instrumented replay of the update rule.
  AdaState state(0.01);
  Point y = y0;
  std::vector<double> residuals;
  for (int k = 0; k < 400; ++k) {
    const Tangent grad = p.grad_g_y(x, y);
    const double gsq = inner(grad, grad);
    residuals.push_back(gsq);
    if (gsq <= 1e-14) break;
    const double step = state.update(gsq);
    y = exp(y, -step * grad);
  }
  REQUIRE(residuals.size() >= 8);
  CHECK(state.value() > 0.01 * 10);  // accumulator grew well past b0
  const std::size_t start = residuals.size() * 3 / 4;
  double ratio_product = 1.0;
  int count = 0;
  for (std::size_t i = start; i + 1 < residuals.size(); ++i) {
    if (residuals[i] > 0) {
      ratio_product *= residuals[i + 1] / residuals[i];
      ++count;
    }
  }
  REQUIRE(count > 0);
  CHECK(std::pow(ratio_product, 1.0 / count) < 1.0);
}

TEST_CASE("accumulators are monotone and carried across calls") {
  auto [p, inst] = make_toy_quadratic(2, 2, 37);
  Rng rng(41);
  const Point x1 = random_point(p.upper, rng);
  const Point x2 = random_point(p.upper, rng);
  Point y = random_point(p.lower, rng);
  AdaState state(0.5);
  const LowerSolveResult r1 =
      adaptive_lower_solve(p, x1, y, state, 1e-6, 500, MapMode::kExp);
  CHECK(r1.state.accumulator_sq >= state.accumulator_sq);
  const LowerSolveResult r2 = adaptive_lower_solve(p, x2, r1.y, r1.state, 1e-6,
                                                   500, MapMode::kExp);
  CHECK(r2.state.accumulator_sq >= r1.state.accumulator_sq);
}

TEST_CASE("gd and cg solutions agree on oracle problems") {
  const Vector d = colvec({1.0, 2.0, 4.0, 8.0}).col(0);
  const Vector b = colvec({1.0, -1.0, 2.0, 0.5}).col(0);
  BilevelProblem p = diag_system(d, b);
  Rng rng(43);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);
  const double eps_v = 1e-10;
  const LinearSolveResult gd = adaptive_linear_solve_gd(
      p, x, y, zero_tangent(y), AdaState(1.0), eps_v, 20000);
  const LinearSolveResult cg =
      tscg_solve(p, x, y, zero_tangent(y), std::sqrt(eps_v), 100);
  const double mu_hat = 1.0;  // smallest eigenvalue of diag(d)
  CHECK(norm(gd.v - cg.v) <= 2.0 * std::sqrt(eps_v) / mu_hat);
}

TEST_CASE("lower solve reports cap hits without failing") {
  auto [p, inst] = make_toy_quadratic(2, 2, 47);
  Rng rng(53);
  const Point x = random_point(p.upper, rng);
  const Point y = random_point(p.lower, rng);
  const LowerSolveResult res =
      adaptive_lower_solve(p, x, y, AdaState(1.0), 1e-12, 1, MapMode::kExp);
  CHECK(res.cap_hit);
  CHECK(res.iterations == 1);
}
