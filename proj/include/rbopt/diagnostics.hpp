#pragma once

#include <map>

#include "rbopt/bilevel.hpp"

namespace rbopt {

struct CheckReport {
  std::string check_name;
  double max_rel_error = 0.0;
  int samples = 0;
  double threshold = 0.0;
  bool pass = false;
  /// Auxiliary per-check numbers (retraction-error ratios, trig-bound slack,
  /// ...).
  std::map<std::string, double> metrics;
};

/// Compares <grad f(x), u>_x against the central difference
/// [f(exp_x(h u)) - f(exp_x(-h u))] / (2h) over random unit directions.
CheckReport check_gradient(const std::function<double(const Point&)>& f,
                           const std::function<Tangent(const Point&)>& grad,
                           const Point& x, int n_dirs, Rng& rng,
                           double h = 1e-5, double threshold = 1e-5);

/// Runs the manifold property suite: exp/log roundtrip, transport isometry
/// (where the geometry claims it), retraction error scaling, point-invariant
/// preservation, and the trigonometric distance bound on nonpositively
/// curved geometries.
std::vector<CheckReport> check_manifold(const ManifoldPtr& m, int n_samples,
                                        unsigned long long seed = 0);

/// Adjoint consistency <G^2_xy g[v], u>_x = <v, G^2_yx g[u]>_y via finite
/// differences of the first-order oracles.
CheckReport check_adjoint(const BilevelProblem& p, const Point& x,
                          const Point& y, int n_pairs, Rng& rng,
                          double threshold = 1e-3);

/// First-order FD checks of every gradient oracle a problem provides, at
/// random (x, y) pairs.
std::vector<CheckReport> check_problem_gradients(const BilevelProblem& p,
                                                 int n_points,
                                                 unsigned long long seed = 0,
                                                 double threshold = 1e-5);

/// Analytic Hessian-vector and cross products against their FD fallbacks.
std::vector<CheckReport> check_problem_second_order(
    const BilevelProblem& p, int n_points, unsigned long long seed = 0,
    double threshold = 1e-4);

}  // namespace rbopt
