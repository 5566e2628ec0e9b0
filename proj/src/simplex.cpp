#include <cmath>

#include "rbopt/errors.hpp"
#include "rbopt/manifold.hpp"

namespace rbopt {

namespace {

constexpr double kClampFloor = 1e-12;

/// Probability simplex represented through the positive orthant of the unit
/// sphere via p -> sqrt(p). Points are stored as simplex coordinates
/// (entries > 0, sum 1) and tangents in the simplex chart (entries sum to 0);
/// exp/log/transport are the sphere closed forms pulled back through the
/// chart. Re-projection after exp clamps entries below 1e-12.
class Simplex final : public Manifold {
 public:
  explicit Simplex(Eigen::Index n) : n_(n) {
    if (n < 2) throw ConfigError("simplex: need n >= 2");
  }

  std::string name() const override {
    return "simplex(" + std::to_string(n_) + ")";
  }

  Eigen::Index dim() const override { return n_ - 1; }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const override {
    return {{n_, 1}};
  }

  double inner(const Blocks& x, const Blocks& u, const Blocks& v)
      const override {
    // Pullback of the sphere metric: sum u_i v_i / (4 p_i).
    return (u[0].array() * v[0].array() / (4.0 * x[0].array())).sum();
  }

  Blocks exp(const Blocks& x, const Blocks& u) const override {
    const Vector s = x[0].col(0).cwiseSqrt();
    const Vector us = to_sphere(x, u);
    const double theta = us.norm();
    Vector s2;
    if (theta < 1e-300) {
      s2 = s;
    } else {
      s2 = std::cos(theta) * s + (std::sin(theta) / theta) * us;
    }
    Vector p = s2.cwiseProduct(s2).cwiseMax(kClampFloor);
    p /= p.sum();
    Matrix out(n_, 1);
    out.col(0) = p;
    return {out};
  }

  Blocks log(const Blocks& x, const Blocks& y) const override {
    const Vector s = x[0].col(0).cwiseSqrt();
    const Vector s2 = y[0].col(0).cwiseSqrt();
    double c = s.dot(s2);
    if (c <= -1.0 + 1e-12) {
      throw DomainError("simplex log: antipodal points on the sphere chart");
    }
    c = std::min(c, 1.0);
    const double theta = std::acos(c);
    Vector us;
    if (theta < 1e-12) {
      us = s2 - c * s;  // small-angle limit, sin(theta)/theta -> 1
    } else {
      us = (theta / std::sin(theta)) * (s2 - c * s);
    }
    return {from_sphere(x, us)};
  }

  Blocks retract(const Blocks& x, const Blocks& u) const override {
    return exp(x, u);
  }

  Blocks transport(const Blocks& from, const Blocks& to,
                   const Blocks& u) const override {
    const Vector s1 = from[0].col(0).cwiseSqrt();
    const Vector s2 = to[0].col(0).cwiseSqrt();
    const Vector us = to_sphere(from, u);
    const Blocks l = log(from, to);
    const Vector xi = to_sphere(from, l);
    const double theta = xi.norm();
    Vector moved;
    if (theta < 1e-12) {
      moved = us;
    } else {
      const Vector e = xi / theta;
      const double coef = e.dot(us);
      moved = us + (std::cos(theta) - 1.0) * coef * e -
              std::sin(theta) * coef * s1;
    }
    // Snap onto T_{s2} of the sphere to control drift.
    moved -= s2.dot(moved) * s2;
    return {from_sphere(to, moved)};
  }

  double distance(const Blocks& x, const Blocks& y) const override {
    const Vector s = x[0].col(0).cwiseSqrt();
    const Vector s2 = y[0].col(0).cwiseSqrt();
    const double c = std::min(1.0, std::max(-1.0, s.dot(s2)));
    return std::acos(c);
  }

  Blocks egrad_to_rgrad(const Blocks& x, const Blocks& eg) const override {
    const Vector p = x[0].col(0);
    const Vector g = eg[0].col(0);
    const double mean = p.dot(g);
    Matrix out(n_, 1);
    out.col(0) = 4.0 * p.cwiseProduct(g - Vector::Constant(n_, mean));
    return {out};
  }

  Blocks project_tangent(const Blocks&, const Blocks& u) const override {
    const double mean = u[0].col(0).sum() / static_cast<double>(n_);
    Matrix out = u[0];
    out.col(0).array() -= mean;
    return {out};
  }

  Blocks random_point(Rng& rng) const override {
    // Concentrated Dirichlet keeps samples away from the boundary so the
    // sphere-chart maps stay within their injectivity region in tests.
    std::gamma_distribution<double> gamma(50.0, 1.0);
    Vector p(n_);
    for (Eigen::Index i = 0; i < n_; ++i) p[i] = gamma(rng);
    p /= p.sum();
    Matrix out(n_, 1);
    out.col(0) = p;
    return {out};
  }

  /// Unit tangent whose geodesic stays inside the positive orthant for arc
  /// length > 0.55, so norm-0.5 property tests never hit the clamped
  /// boundary re-projection. Rejection sampling with a best-so-far fallback.
  Blocks random_tangent(const Blocks& x, Rng& rng) const override {
    std::normal_distribution<double> n;
    const Vector s = x[0].col(0).cwiseSqrt();
    Vector best;
    double best_exit = -1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      Vector g(n_);
      for (Eigen::Index i = 0; i < n_; ++i) g[i] = n(rng);
      Vector us = g - s.dot(g) * s;
      const double nrm = us.norm();
      if (nrm <= 0) continue;
      us /= nrm;
      // Along exp_s(t us), coordinate i vanishes at t = atan2(s_i, -us_i).
      double exit = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (us[i] < 0) exit = std::min(exit, std::atan2(s[i], -us[i]));
      }
      if (exit > best_exit) {
        best_exit = exit;
        best = us;
      }
      if (exit > 0.55) break;
    }
    Matrix u = from_sphere(x, best);
    const double nrm = std::sqrt(inner(x, {u}, {u}));
    if (nrm > 0) u /= nrm;
    return {u};
  }

  std::vector<Blocks> tangent_basis(const Blocks& x) const override {
    const Vector s = x[0].col(0).cwiseSqrt();
    // Householder reflector mapping e_1 to s; remaining columns span T_s.
    Vector v = s;
    v[0] += (s[0] >= 0 ? 1.0 : -1.0);
    v /= v.norm();
    std::vector<Blocks> basis;
    basis.reserve(n_ - 1);
    const double sign = (s[0] >= 0 ? -1.0 : 1.0);
    for (Eigen::Index j = 1; j < n_; ++j) {
      Vector col = Vector::Zero(n_);
      col[j] = 1.0;
      col -= 2.0 * v[j] * v;
      basis.push_back({from_sphere(x, sign * col)});
    }
    return basis;
  }

  bool check_point(const Blocks& x, std::string* why) const override {
    const Vector p = x[0].col(0);
    if (p.minCoeff() <= 0.0) {
      if (why) *why = "non-positive entry " + std::to_string(p.minCoeff());
      return false;
    }
    if (std::abs(p.sum() - 1.0) > 1e-12) {
      if (why) *why = "entries sum to " + std::to_string(p.sum());
      return false;
    }
    return true;
  }

  bool check_tangent(const Blocks&, const Blocks& u,
                     std::string* why) const override {
    const double s = u[0].col(0).sum();
    if (std::abs(s) > 1e-12 * (1.0 + u[0].norm())) {
      if (why) *why = "entries sum to " + std::to_string(s);
      return false;
    }
    return true;
  }

  std::optional<double> sectional_curvature_lower_bound() const override {
    return 1.0;  // unit sphere chart
  }

 private:
  /// Pushforward of a simplex-chart tangent to the sphere chart at x.
  Vector to_sphere(const Blocks& x, const Blocks& u) const {
    return to_sphere(x, Vector(u[0].col(0)));
  }
  Vector to_sphere(const Blocks& x, const Vector& u) const {
    return (u.array() / (2.0 * x[0].col(0).array().sqrt())).matrix();
  }
  /// Pullback of a sphere-chart tangent to the simplex chart at x.
  Matrix from_sphere(const Blocks& x, const Vector& us) const {
    Matrix out(n_, 1);
    out.col(0) = (2.0 * x[0].col(0).array().sqrt() * us.array()).matrix();
    return out;
  }

  Eigen::Index n_;
};

}  // namespace

ManifoldPtr make_simplex(Eigen::Index n) {
  return std::make_shared<Simplex>(n);
}

}  // namespace rbopt
