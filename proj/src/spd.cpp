#include <cmath>

#include "rbopt/errors.hpp"
#include "rbopt/manifold.hpp"

namespace rbopt {

namespace {

/// Symmetric positive definite matrices with the affine-invariant metric
/// <U, V>_X = tr(X^-1 U X^-1 V). A Hadamard manifold; sectional curvature
/// lies in [-1/2, 0].
class Spd final : public Manifold {
 public:
  explicit Spd(Eigen::Index d) : d_(d) {
    if (d < 1) throw ConfigError("spd: dimension must be >= 1");
  }

  std::string name() const override { return "spd(" + std::to_string(d_) + ")"; }

  Eigen::Index dim() const override { return d_ * (d_ + 1) / 2; }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const override {
    return {{d_, d_}};
  }

  double inner(const Blocks& x, const Blocks& u, const Blocks& v)
      const override {
    const Matrix xinv = spd_inverse(x[0]);
    return (xinv * u[0] * xinv * v[0]).trace();
  }

  Blocks exp(const Blocks& x, const Blocks& u) const override {
    const Matrix xh = spd_sqrt(x[0]);
    const Matrix xih = spd_inv_sqrt(x[0]);
    return {sym(xh * sym_exp(xih * u[0] * xih) * xh)};
  }

  Blocks log(const Blocks& x, const Blocks& y) const override {
    const Matrix xh = spd_sqrt(x[0]);
    const Matrix xih = spd_inv_sqrt(x[0]);
    return {sym(xh * spd_log(sym(xih * y[0] * xih)) * xh)};
  }

  /// Second-order retraction X + U + (1/2) U X^-1 U; stays positive definite
  /// for every symmetric U.
  Blocks retract(const Blocks& x, const Blocks& u) const override {
    const Matrix xinv = spd_inverse(x[0]);
    return {sym(x[0] + u[0] + 0.5 * u[0] * xinv * u[0])};
  }

  /// Parallel transport along the geodesic: P(u) = E u E^T with
  /// E = (Y X^-1)^(1/2) = Y^(1/2) (Y^(1/2) X^-1 Y^(1/2))^(1/2) Y^(-1/2).
  Blocks transport(const Blocks& from, const Blocks& to,
                   const Blocks& u) const override {
    const Matrix yh = spd_sqrt(to[0]);
    const Matrix yih = spd_inv_sqrt(to[0]);
    const Matrix q = sym(yh * spd_inverse(from[0]) * yh);
    const Matrix e = yh * spd_sqrt(q) * yih;
    return {sym(e * u[0] * e.transpose())};
  }

  double distance(const Blocks& x, const Blocks& y) const override {
    const Matrix xih = spd_inv_sqrt(x[0]);
    return spd_log(sym(xih * y[0] * xih)).norm();
  }

  Blocks egrad_to_rgrad(const Blocks& x, const Blocks& eg) const override {
    return {sym(x[0] * sym(eg[0]) * x[0])};
  }

  Blocks project_tangent(const Blocks&, const Blocks& u) const override {
    return {sym(u[0])};
  }

  Blocks random_point(Rng& rng) const override {
    // Q Lambda Q^T with log-uniform eigenvalues in [0.5, 2].
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix g(d_, d_);
    for (Eigen::Index j = 0; j < d_; ++j)
      for (Eigen::Index i = 0; i < d_; ++i) g(i, j) = n(rng);
    const Matrix q = qr_q_factor(g);
    Vector lam(d_);
    const double lo = std::log(0.5), hi = std::log(2.0);
    for (Eigen::Index i = 0; i < d_; ++i)
      lam[i] = std::exp(lo + (hi - lo) * u01(rng));
    return {sym(q * lam.asDiagonal() * q.transpose())};
  }

  Blocks random_tangent(const Blocks& x, Rng& rng) const override {
    std::normal_distribution<double> n;
    Matrix s(d_, d_);
    for (Eigen::Index j = 0; j < d_; ++j)
      for (Eigen::Index i = 0; i < d_; ++i) s(i, j) = n(rng);
    const Matrix xh = spd_sqrt(x[0]);
    Matrix u = sym(xh * sym(s) * xh);
    const double nrm = std::sqrt(inner(x, {u}, {u}));
    if (nrm > 0) u /= nrm;
    return {u};
  }

  std::vector<Blocks> tangent_basis(const Blocks& x) const override {
    const Matrix xh = spd_sqrt(x[0]);
    std::vector<Blocks> basis;
    basis.reserve(dim());
    const double inv_r2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < d_; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        Matrix b = Matrix::Zero(d_, d_);
        if (i == j) {
          b(i, i) = 1.0;
        } else {
          b(i, j) = b(j, i) = inv_r2;
        }
        basis.push_back({sym(xh * b * xh)});
      }
    }
    return basis;
  }

  bool check_point(const Blocks& x, std::string* why) const override {
    if ((x[0] - x[0].transpose()).norm() > 1e-12 * (1.0 + x[0].norm())) {
      if (why) *why = "not symmetric";
      return false;
    }
    const double mineig = sym_min_eigenvalue(x[0]);
    if (!(mineig > 0.0)) {
      if (why) *why = "min eigenvalue " + std::to_string(mineig) + " <= 0";
      return false;
    }
    return true;
  }

  bool check_tangent(const Blocks&, const Blocks& u,
                     std::string* why) const override {
    if ((u[0] - u[0].transpose()).norm() > 1e-10 * (1.0 + u[0].norm())) {
      if (why) *why = "tangent not symmetric";
      return false;
    }
    return true;
  }

  std::optional<double> sectional_curvature_lower_bound() const override {
    return -0.5;
  }

 private:
  Eigen::Index d_;
};

}  // namespace

ManifoldPtr make_spd(Eigen::Index d) { return std::make_shared<Spd>(d); }

}  // namespace rbopt
