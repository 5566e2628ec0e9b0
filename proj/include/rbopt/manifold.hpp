#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rbopt/linalg.hpp"

namespace rbopt {

using Rng = std::mt19937_64;

/// Coordinate storage for points and tangents. Leaf geometries use a single
/// block; product manifolds concatenate the blocks of their factors.
using Blocks = std::vector<Matrix>;

class Manifold;
using ManifoldPtr = std::shared_ptr<const Manifold>;

/// An element of a manifold.
struct Point {
  ManifoldPtr manifold;
  Blocks blocks;

  const Matrix& block() const { return blocks.front(); }
};

/// An element of a tangent space, tagged with its base point.
struct Tangent {
  Point base;
  Blocks blocks;

  const Matrix& block() const { return blocks.front(); }
};

/// Uniform interface for the concrete geometries. All operations are pure;
/// instances are immutable and safe to share across threads.
class Manifold : public std::enable_shared_from_this<Manifold> {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  /// Intrinsic dimension of the tangent spaces.
  virtual Eigen::Index dim() const = 0;
  virtual std::size_t block_count() const { return 1; }
  virtual std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const = 0;

  virtual double inner(const Blocks& x, const Blocks& u,
                       const Blocks& v) const = 0;
  virtual Blocks exp(const Blocks& x, const Blocks& u) const = 0;
  virtual Blocks log(const Blocks& x, const Blocks& y) const = 0;
  virtual Blocks retract(const Blocks& x, const Blocks& u) const = 0;
  virtual Blocks transport(const Blocks& from, const Blocks& to,
                           const Blocks& u) const = 0;
  virtual double distance(const Blocks& x, const Blocks& y) const;
  /// Converts an ambient (Euclidean) gradient into the Riemannian gradient.
  virtual Blocks egrad_to_rgrad(const Blocks& x, const Blocks& eg) const = 0;
  /// Orthogonal projection of an ambient direction onto the tangent space.
  virtual Blocks project_tangent(const Blocks& x, const Blocks& u) const = 0;

  virtual Blocks random_point(Rng& rng) const = 0;
  /// Random unit-norm tangent at x.
  virtual Blocks random_tangent(const Blocks& x, Rng& rng) const = 0;
  /// Orthonormal basis of T_x (w.r.t. the Riemannian metric), dim() vectors.
  virtual std::vector<Blocks> tangent_basis(const Blocks& x) const = 0;

  /// Point/tangent representation invariants; returns false and fills `why`
  /// on violation.
  virtual bool check_point(const Blocks& x, std::string* why) const = 0;
  virtual bool check_tangent(const Blocks& x, const Blocks& u,
                             std::string* why) const = 0;

  /// Lower bound on the sectional curvature, when known (used by the
  /// trigonometric distance bound diagnostics).
  virtual std::optional<double> sectional_curvature_lower_bound() const {
    return std::nullopt;
  }
  /// True when transport preserves inner products exactly (parallel
  /// transport); projection-based transports return false.
  virtual bool transport_is_isometric() const { return true; }
  /// True when exp/log trace exact geodesics of the metric.
  virtual bool exp_is_geodesic() const { return true; }

  Blocks zero_blocks() const;
};

// ---------------------------------------------------------------------------
// Value-level API. Preconditions (shared manifold, matching base points) are
// enforced and raise ContractViolation.

Point make_point(ManifoldPtr m, Blocks blocks);
Point make_point(ManifoldPtr m, Matrix block);
Tangent make_tangent(Point base, Blocks blocks);
Tangent make_tangent(Point base, Matrix block);
Tangent zero_tangent(const Point& x);

bool same_point(const Point& a, const Point& b, double tol = 1e-9);

double inner(const Tangent& u, const Tangent& v);
double norm(const Tangent& u);
Point exp(const Point& x, const Tangent& u);
Tangent log(const Point& x, const Point& y);
Point retract(const Point& x, const Tangent& u);
Tangent transport(const Point& to, const Tangent& u);
Tangent transport(const Point& from, const Point& to, const Tangent& u);
double distance(const Point& x, const Point& y);
Tangent egrad_to_rgrad(const Point& x, const Blocks& eg);
Tangent egrad_to_rgrad(const Point& x, const Matrix& eg);
Tangent project_tangent(const Point& x, const Blocks& ambient);
Point random_point(const ManifoldPtr& m, Rng& rng);
Tangent random_tangent(const Point& x, Rng& rng);

// Tangent-space arithmetic (same base point required).
Tangent operator+(const Tangent& a, const Tangent& b);
Tangent operator-(const Tangent& a, const Tangent& b);
Tangent operator*(double s, const Tangent& a);
Tangent operator-(const Tangent& a);

// Factories for the concrete geometries.
ManifoldPtr make_euclidean(Eigen::Index rows, Eigen::Index cols = 1);
ManifoldPtr make_spd(Eigen::Index d);
ManifoldPtr make_stiefel(Eigen::Index d, Eigen::Index r);
ManifoldPtr make_simplex(Eigen::Index n);
ManifoldPtr make_product(std::vector<ManifoldPtr> factors);

}  // namespace rbopt
