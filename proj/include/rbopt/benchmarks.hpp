#pragma once

#include <json.hpp>

#include "rbopt/bilevel.hpp"

namespace rbopt {

/// Euclidean sanity problem with fully analytic solution map:
///   g = (1/2) ||y - C x||^2,  f = (1/2) ||y||^2,
/// so y* = C x, v* = y*, and grad F = C^T C x.
struct ToyQuadraticInstance {
  Matrix c;  // ny x nx
  ManifoldPtr upper, lower;
};
std::pair<BilevelProblem, std::shared_ptr<const ToyQuadraticInstance>>
make_toy_quadratic(Eigen::Index nx, Eigen::Index ny, unsigned long long seed);
/// Same problem with an explicit coupling matrix.
std::pair<BilevelProblem, std::shared_ptr<const ToyQuadraticInstance>>
make_toy_quadratic(Matrix c);

/// Maximum-similarity problem: W on St(d, r) aligns data matrices X (n x d)
/// and Y (n x r) while the lower level learns an SPD metric M. The upper
/// maximization is negated into the solver's minimization form:
///   f(W, M) = -trace(M X^T Y W^T),
///   g(W, M) = <M, X^T X> + <M^-1, W Y^T Y W^T + lambda I>.
/// The lower level has the closed form
///   M*(W) = A^-1/2 (A^1/2 B A^1/2)^1/2 A^-1/2,  A = X^T X,
///   B = W Y^T Y W^T + lambda I,
/// and the exact hypergradient solves the tangent linear system directly.
struct SimpleSimilarityInstance {
  Eigen::Index n, d, r;
  double lambda;
  Matrix x_data;  // n x d
  Matrix y_data;  // n x r
  Matrix a;       // X^T X
  Matrix yty;     // Y^T Y
  Matrix cxy;     // X^T Y
  ManifoldPtr upper, lower;
};
std::pair<BilevelProblem, std::shared_ptr<const SimpleSimilarityInstance>>
make_simple_similarity(Eigen::Index n, Eigen::Index d, Eigen::Index r,
                       double lambda, unsigned long long seed);

/// Shallow hyper-representation regression: A on St(d, r) maps SPD samples
/// D_i to features svec(log(A^T D_i A)); the lower level is ridge regression
/// over the training split and the upper level the validation least-squares
/// loss. The ridge closed form is exposed as the lower oracle.
struct ShallowHyperRepInstance {
  Eigen::Index n, d, r;
  double lambda, noise_sd;
  std::vector<Matrix> samples;  // n SPD matrices, first half = training split
  Vector targets;               // length n
  ManifoldPtr upper, lower;     // St(d, r) and R^{r(r+1)/2}

  Eigen::Index feature_dim() const { return r * (r + 1) / 2; }
  Eigen::Index train_count() const { return n / 2; }
};
std::pair<BilevelProblem, std::shared_ptr<const ShallowHyperRepInstance>>
make_shallow_hyperrep(Eigen::Index n, Eigen::Index d, Eigen::Index r,
                      double lambda, double noise_sd, unsigned long long seed);

/// Robust optimization on manifolds: weights p on the simplex, SPD variable
/// y, per-sample losses either the squared geodesic distance to SPD samples
/// (Karcher mean) or the Gaussian negative log-likelihood (MLE):
///   f(p, y) = ||p - 1/n||^2 - sum_i p_i l(y; xi_i),
///   g(p, y) = sum_i p_i l(y; xi_i).
enum class RobustLoss { kKarcherMean, kGaussianMle };
struct RobustInstance {
  RobustLoss loss;
  Eigen::Index n, d;
  std::vector<Matrix> spd_samples;   // Karcher mean
  std::vector<Vector> vec_samples;   // MLE
  ManifoldPtr upper, lower;
};
std::pair<BilevelProblem, std::shared_ptr<const RobustInstance>> make_robust(
    RobustLoss loss, Eigen::Index n, Eigen::Index d, unsigned long long seed);

/// Analytic Euclidean saddle f(x, y) = x y - y^2 / 2 for the min-max solver:
/// y*(x) = x, F(x) = x^2 / 2, unique stationary point x* = 0.
BilevelProblem make_minmax_saddle();

/// Random SPD matrix Q diag(lambda) Q^T with log-uniform eigenvalues in
/// [eig_lo, eig_hi].
Matrix random_spd_matrix(Eigen::Index d, Rng& rng, double eig_lo = 0.1,
                         double eig_hi = 10.0);

/// Fixture descriptor for exact replay: data matrices are regenerated from
/// the seed, never stored.
struct ProblemSpec {
  std::string kind;  // toy_quadratic | simple_similarity | shallow_hyperrep |
                     // robust_km | robust_mle | minmax_saddle
  Eigen::Index n = 0, d = 0, r = 0;
  double lambda = 0.0;
  double noise_sd = 0.1;
  unsigned long long seed = 0;
};
nlohmann::json problem_spec_to_json(const ProblemSpec& spec);
ProblemSpec problem_spec_from_json(const nlohmann::json& j);
/// Builds the problem named by the spec; throws ConfigError for unknown
/// kinds or invalid dimensions.
BilevelProblem make_problem(const ProblemSpec& spec);

}  // namespace rbopt
