#include <cmath>

#include "rbopt/errors.hpp"
#include "rbopt/manifold.hpp"

namespace rbopt {

namespace {

class Euclidean final : public Manifold {
 public:
  Euclidean(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw ConfigError("euclidean: invalid shape");
  }

  std::string name() const override {
    if (cols_ == 1) return "euclidean(" + std::to_string(rows_) + ")";
    return "euclidean(" + std::to_string(rows_) + "x" + std::to_string(cols_) +
           ")";
  }

  Eigen::Index dim() const override { return rows_ * cols_; }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const override {
    return {{rows_, cols_}};
  }

  double inner(const Blocks&, const Blocks& u, const Blocks& v) const override {
    return u[0].cwiseProduct(v[0]).sum();
  }

  Blocks exp(const Blocks& x, const Blocks& u) const override {
    return {x[0] + u[0]};
  }

  Blocks log(const Blocks& x, const Blocks& y) const override {
    return {y[0] - x[0]};
  }

  Blocks retract(const Blocks& x, const Blocks& u) const override {
    return exp(x, u);
  }

  Blocks transport(const Blocks&, const Blocks&, const Blocks& u)
      const override {
    return u;
  }

  double distance(const Blocks& x, const Blocks& y) const override {
    return (y[0] - x[0]).norm();
  }

  Blocks egrad_to_rgrad(const Blocks&, const Blocks& eg) const override {
    return eg;
  }

  Blocks project_tangent(const Blocks&, const Blocks& u) const override {
    return u;
  }

  Blocks random_point(Rng& rng) const override {
    std::normal_distribution<double> n;
    Matrix p(rows_, cols_);
    for (Eigen::Index j = 0; j < cols_; ++j)
      for (Eigen::Index i = 0; i < rows_; ++i) p(i, j) = n(rng);
    return {p};
  }

  Blocks random_tangent(const Blocks& x, Rng& rng) const override {
    Blocks u = random_point(rng);
    const double nrm = u[0].norm();
    if (nrm > 0) u[0] /= nrm;
    (void)x;
    return u;
  }

  std::vector<Blocks> tangent_basis(const Blocks&) const override {
    std::vector<Blocks> basis;
    basis.reserve(dim());
    for (Eigen::Index j = 0; j < cols_; ++j) {
      for (Eigen::Index i = 0; i < rows_; ++i) {
        Matrix e = Matrix::Zero(rows_, cols_);
        e(i, j) = 1.0;
        basis.push_back({std::move(e)});
      }
    }
    return basis;
  }

  bool check_point(const Blocks& x, std::string* why) const override {
    if (!x[0].allFinite()) {
      if (why) *why = "non-finite coordinates";
      return false;
    }
    return true;
  }

  bool check_tangent(const Blocks&, const Blocks& u,
                     std::string* why) const override {
    if (!u[0].allFinite()) {
      if (why) *why = "non-finite coordinates";
      return false;
    }
    return true;
  }

  std::optional<double> sectional_curvature_lower_bound() const override {
    return 0.0;
  }

 private:
  Eigen::Index rows_, cols_;
};

}  // namespace

ManifoldPtr make_euclidean(Eigen::Index rows, Eigen::Index cols) {
  return std::make_shared<Euclidean>(rows, cols);
}

}  // namespace rbopt
