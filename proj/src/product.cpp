#include <cmath>
#include <numeric>

#include "rbopt/errors.hpp"
#include "rbopt/manifold.hpp"

namespace rbopt {

namespace {

/// Product of manifolds; blocks of the factors are concatenated and the
/// inner product is the sum of component inner products.
class Product final : public Manifold {
 public:
  explicit Product(std::vector<ManifoldPtr> factors)
      : factors_(std::move(factors)) {
    if (factors_.empty()) throw ConfigError("product: no factors");
    offsets_.push_back(0);
    for (const auto& f : factors_) {
      offsets_.push_back(offsets_.back() + f->block_count());
    }
  }

  std::string name() const override {
    std::string n = "product(";
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i) n += ",";
      n += factors_[i]->name();
    }
    return n + ")";
  }

  Eigen::Index dim() const override {
    Eigen::Index d = 0;
    for (const auto& f : factors_) d += f->dim();
    return d;
  }

  std::size_t block_count() const override { return offsets_.back(); }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_shapes()
      const override {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
    for (const auto& f : factors_) {
      const auto s = f->block_shapes();
      shapes.insert(shapes.end(), s.begin(), s.end());
    }
    return shapes;
  }

  double inner(const Blocks& x, const Blocks& u, const Blocks& v)
      const override {
    double total = 0.0;
    for_each_factor([&](std::size_t i, const Blocks& xi) {
      total += factors_[i]->inner(xi, slice(u, i), slice(v, i));
    }, x);
    return total;
  }

  Blocks exp(const Blocks& x, const Blocks& u) const override {
    return map2(x, u, [&](std::size_t i, const Blocks& a, const Blocks& b) {
      return factors_[i]->exp(a, b);
    });
  }

  Blocks log(const Blocks& x, const Blocks& y) const override {
    return map2(x, y, [&](std::size_t i, const Blocks& a, const Blocks& b) {
      return factors_[i]->log(a, b);
    });
  }

  Blocks retract(const Blocks& x, const Blocks& u) const override {
    return map2(x, u, [&](std::size_t i, const Blocks& a, const Blocks& b) {
      return factors_[i]->retract(a, b);
    });
  }

  Blocks transport(const Blocks& from, const Blocks& to,
                   const Blocks& u) const override {
    Blocks out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      append(out, factors_[i]->transport(slice(from, i), slice(to, i),
                                         slice(u, i)));
    }
    return out;
  }

  double distance(const Blocks& x, const Blocks& y) const override {
    double sq = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const double d = factors_[i]->distance(slice(x, i), slice(y, i));
      sq += d * d;
    }
    return std::sqrt(sq);
  }

  Blocks egrad_to_rgrad(const Blocks& x, const Blocks& eg) const override {
    return map2(x, eg, [&](std::size_t i, const Blocks& a, const Blocks& b) {
      return factors_[i]->egrad_to_rgrad(a, b);
    });
  }

  Blocks project_tangent(const Blocks& x, const Blocks& u) const override {
    return map2(x, u, [&](std::size_t i, const Blocks& a, const Blocks& b) {
      return factors_[i]->project_tangent(a, b);
    });
  }

  Blocks random_point(Rng& rng) const override {
    Blocks out;
    for (const auto& f : factors_) append(out, f->random_point(rng));
    return out;
  }

  Blocks random_tangent(const Blocks& x, Rng& rng) const override {
    Blocks out;
    double sq = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const Blocks xi = slice(x, i);
      Blocks ui = factors_[i]->random_tangent(xi, rng);
      sq += factors_[i]->inner(xi, ui, ui);
      append(out, std::move(ui));
    }
    const double nrm = std::sqrt(sq);
    if (nrm > 0) {
      for (auto& m : out) m /= nrm;
    }
    return out;
  }

  std::vector<Blocks> tangent_basis(const Blocks& x) const override {
    std::vector<Blocks> basis;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      for (const Blocks& bi : factors_[i]->tangent_basis(slice(x, i))) {
        Blocks padded = zero_blocks();
        for (std::size_t k = 0; k < bi.size(); ++k) {
          padded[offsets_[i] + k] = bi[k];
        }
        basis.push_back(std::move(padded));
      }
    }
    return basis;
  }

  bool check_point(const Blocks& x, std::string* why) const override {
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (!factors_[i]->check_point(slice(x, i), why)) {
        if (why) *why = "factor " + std::to_string(i) + ": " + *why;
        return false;
      }
    }
    return true;
  }

  bool check_tangent(const Blocks& x, const Blocks& u,
                     std::string* why) const override {
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (!factors_[i]->check_tangent(slice(x, i), slice(u, i), why)) {
        if (why) *why = "factor " + std::to_string(i) + ": " + *why;
        return false;
      }
    }
    return true;
  }

  bool transport_is_isometric() const override {
    for (const auto& f : factors_) {
      if (!f->transport_is_isometric()) return false;
    }
    return true;
  }

  bool exp_is_geodesic() const override {
    for (const auto& f : factors_) {
      if (!f->exp_is_geodesic()) return false;
    }
    return true;
  }

 private:
  Blocks slice(const Blocks& b, std::size_t factor) const {
    return Blocks(b.begin() + static_cast<long>(offsets_[factor]),
                  b.begin() + static_cast<long>(offsets_[factor + 1]));
  }

  static void append(Blocks& out, Blocks more) {
    for (auto& m : more) out.push_back(std::move(m));
  }

  template <typename F>
  void for_each_factor(F&& fn, const Blocks& x) const {
    for (std::size_t i = 0; i < factors_.size(); ++i) fn(i, slice(x, i));
  }

  template <typename F>
  Blocks map2(const Blocks& x, const Blocks& y, F&& fn) const {
    Blocks out;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      append(out, fn(i, slice(x, i), slice(y, i)));
    }
    return out;
  }

  std::vector<ManifoldPtr> factors_;
  std::vector<std::size_t> offsets_;
};

}  // namespace

ManifoldPtr make_product(std::vector<ManifoldPtr> factors) {
  return std::make_shared<Product>(std::move(factors));
}

}  // namespace rbopt
