#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "rbopt/errors.hpp"
#include "rbopt/manifold.hpp"

namespace rbopt {

namespace {

/// Stiefel manifold St(d, r) = { W : W^T W = I_r } with the embedded metric
/// <U, V> = tr(U^T V), QR retraction, and projection-based vector transport.
/// exp follows the closed-form geodesic of the embedded metric; log inverts
/// it by shooting and is intended for nearby points (property suites,
/// diagnostics).
class Stiefel final : public Manifold {
 public:
  Stiefel(Eigen::Index d, Eigen::Index r) : d_(d), r_(r) {
    if (r < 1 || d < r) throw ConfigError("stiefel: need d >= r >= 1");
  }

  std::string name() const override {
    return "stiefel(" + std::to_string(d_) + "," + std::to_string(r_) + ")";
  }

  Eigen::Index dim() const override { return d_ * r_ - r_ * (r_ + 1) / 2; }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const override {
    return {{d_, r_}};
  }

  double inner(const Blocks&, const Blocks& u, const Blocks& v) const override {
    return u[0].cwiseProduct(v[0]).sum();
  }

  /// Geodesic of the embedded metric, with A = W^T U and S = U^T U:
  ///   gamma(1) = [W U] expm([[A, -S], [I, A]]) [I; 0] expm(-A).
  Blocks exp(const Blocks& x, const Blocks& u) const override {
    const Matrix& w = x[0];
    const Matrix& v = u[0];
    const Matrix a = w.transpose() * v;
    const Matrix s = v.transpose() * v;
    Matrix block(2 * r_, 2 * r_);
    block.topLeftCorner(r_, r_) = a;
    block.topRightCorner(r_, r_) = -s;
    block.bottomLeftCorner(r_, r_) = Matrix::Identity(r_, r_);
    block.bottomRightCorner(r_, r_) = a;
    const Matrix e = block.exp();
    const Matrix ea = (-a).exp();
    Matrix out = (w * e.topLeftCorner(r_, r_) + v * e.bottomLeftCorner(r_, r_)) * ea;
    return {reorthonormalize(out)};
  }

  /// Shooting inversion of exp. Converges for nearby points; raises
  /// DomainError when the iteration stalls (endpoint outside the reliable
  /// injectivity region).
  Blocks log(const Blocks& x, const Blocks& y) const override {
    Blocks u = project_tangent(x, {y[0] - x[0]});
    for (int it = 0; it < 2000; ++it) {
      const Blocks reached = exp(x, u);
      const Matrix err = y[0] - reached[0];
      const double err_norm = err.norm();
      const double tol = 1e-12 * (1.0 + u[0].norm());
      if (err_norm <= tol) return u;
      const Blocks step = project_tangent(x, {err});
      if (step[0].norm() <= 1e-15 * (1.0 + err_norm)) {
        // The endpoint error has no tangential component left; the target is
        // outside the region the shooting iteration can reach.
        throw DomainError("stiefel log: shooting stalled (endpoint outside "
                          "the reliable injectivity region)");
      }
      u[0] += step[0];
    }
    throw DomainError("stiefel log: shooting did not converge");
  }

  Blocks retract(const Blocks& x, const Blocks& u) const override {
    return {qr_q_factor(x[0] + u[0])};
  }

  Blocks transport(const Blocks&, const Blocks& to,
                   const Blocks& u) const override {
    return project_tangent(to, u);
  }

  Blocks egrad_to_rgrad(const Blocks& x, const Blocks& eg) const override {
    return project_tangent(x, eg);
  }

  Blocks project_tangent(const Blocks& x, const Blocks& u) const override {
    const Matrix& w = x[0];
    return {u[0] - w * sym(w.transpose() * u[0])};
  }

  Blocks random_point(Rng& rng) const override {
    std::normal_distribution<double> n;
    Matrix g(d_, r_);
    for (Eigen::Index j = 0; j < r_; ++j)
      for (Eigen::Index i = 0; i < d_; ++i) g(i, j) = n(rng);
    return {qr_q_factor(g)};
  }

  Blocks random_tangent(const Blocks& x, Rng& rng) const override {
    std::normal_distribution<double> n;
    Matrix g(d_, r_);
    for (Eigen::Index j = 0; j < r_; ++j)
      for (Eigen::Index i = 0; i < d_; ++i) g(i, j) = n(rng);
    Blocks u = project_tangent(x, {g});
    const double nrm = u[0].norm();
    if (nrm > 0) u[0] /= nrm;
    return u;
  }

  std::vector<Blocks> tangent_basis(const Blocks& x) const override {
    const Matrix& w = x[0];
    // Orthonormal complement of the columns of W.
    Eigen::HouseholderQR<Matrix> qr(w);
    const Matrix full_q = qr.householderQ() * Matrix::Identity(d_, d_);
    const Matrix wp = full_q.rightCols(d_ - r_);
    std::vector<Blocks> basis;
    basis.reserve(dim());
    const double inv_r2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < r_; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        Matrix a = Matrix::Zero(r_, r_);
        a(i, j) = inv_r2;
        a(j, i) = -inv_r2;
        basis.push_back({w * a});
      }
    }
    for (Eigen::Index j = 0; j < r_; ++j) {
      for (Eigen::Index i = 0; i < d_ - r_; ++i) {
        Matrix b = Matrix::Zero(d_ - r_, r_);
        b(i, j) = 1.0;
        basis.push_back({wp * b});
      }
    }
    return basis;
  }

  bool check_point(const Blocks& x, std::string* why) const override {
    const Matrix gram = x[0].transpose() * x[0];
    const double dev = (gram - Matrix::Identity(r_, r_)).norm();
    if (dev > 1e-10) {
      if (why) *why = "||W^T W - I|| = " + std::to_string(dev);
      return false;
    }
    return true;
  }

  bool check_tangent(const Blocks& x, const Blocks& u,
                     std::string* why) const override {
    const Matrix k = x[0].transpose() * u[0];
    const double dev = (k + k.transpose()).norm();
    if (dev > 1e-10 * (1.0 + u[0].norm())) {
      if (why) *why = "||W^T U + U^T W|| = " + std::to_string(dev);
      return false;
    }
    return true;
  }

  bool transport_is_isometric() const override { return false; }

 private:
  /// Drift control after the geodesic formula; leaves already-orthonormal
  /// results untouched.
  Matrix reorthonormalize(const Matrix& w) const {
    const double dev =
        (w.transpose() * w - Matrix::Identity(r_, r_)).norm();
    if (dev <= 1e-13) return w;
    return qr_q_factor(w);
  }

  Eigen::Index d_, r_;
};

}  // namespace

ManifoldPtr make_stiefel(Eigen::Index d, Eigen::Index r) {
  return std::make_shared<Stiefel>(d, r);
}

}  // namespace rbopt
