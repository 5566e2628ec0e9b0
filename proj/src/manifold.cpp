#include "rbopt/manifold.hpp"

#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

double Manifold::distance(const Blocks& x, const Blocks& y) const {
  const Blocks l = log(x, y);
  return std::sqrt(inner(x, l, l));
}

Blocks Manifold::zero_blocks() const {
  Blocks out;
  for (const auto& [r, c] : block_shapes()) out.push_back(Matrix::Zero(r, c));
  return out;
}

namespace {

void require_shapes(const Manifold& m, const Blocks& b, const char* what) {
  const auto shapes = m.block_shapes();
  if (b.size() != shapes.size()) {
    throw ContractViolation(std::string(what) + ": expected " +
                            std::to_string(shapes.size()) + " blocks, got " +
                            std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].rows() != shapes[i].first || b[i].cols() != shapes[i].second) {
      throw ContractViolation(std::string(what) + ": block " +
                              std::to_string(i) + " has shape " +
                              std::to_string(b[i].rows()) + "x" +
                              std::to_string(b[i].cols()));
    }
  }
}

void require_same_base(const Tangent& u, const Point& x, const char* what) {
  if (!same_point(u.base, x)) {
    throw ContractViolation(std::string(what) + ": base-point mismatch");
  }
}

}  // namespace

Point make_point(ManifoldPtr m, Blocks blocks) {
  if (!m) throw ContractViolation("make_point: null manifold");
  Point p{std::move(m), std::move(blocks)};
  require_shapes(*p.manifold, p.blocks, "make_point");
  return p;
}

Point make_point(ManifoldPtr m, Matrix block) {
  Blocks b;
  b.push_back(std::move(block));
  return make_point(std::move(m), std::move(b));
}

Tangent make_tangent(Point base, Blocks blocks) {
  Tangent t{std::move(base), std::move(blocks)};
  require_shapes(*t.base.manifold, t.blocks, "make_tangent");
  return t;
}

Tangent make_tangent(Point base, Matrix block) {
  Blocks b;
  b.push_back(std::move(block));
  return make_tangent(std::move(base), std::move(b));
}

Tangent zero_tangent(const Point& x) {
  return Tangent{x, x.manifold->zero_blocks()};
}

bool same_point(const Point& a, const Point& b, double tol) {
  if (a.manifold.get() != b.manifold.get()) return false;
  if (a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const double scale = 1.0 + a.blocks[i].norm();
    if ((a.blocks[i] - b.blocks[i]).norm() > tol * scale) return false;
  }
  return true;
}

double inner(const Tangent& u, const Tangent& v) {
  require_same_base(v, u.base, "inner");
  return u.base.manifold->inner(u.base.blocks, u.blocks, v.blocks);
}

double norm(const Tangent& u) { return std::sqrt(inner(u, u)); }

Point exp(const Point& x, const Tangent& u) {
  require_same_base(u, x, "exp");
  return Point{x.manifold, x.manifold->exp(x.blocks, u.blocks)};
}

Tangent log(const Point& x, const Point& y) {
  if (x.manifold.get() != y.manifold.get()) {
    throw ContractViolation("log: points on different manifolds");
  }
  return Tangent{x, x.manifold->log(x.blocks, y.blocks)};
}

Point retract(const Point& x, const Tangent& u) {
  require_same_base(u, x, "retract");
  return Point{x.manifold, x.manifold->retract(x.blocks, u.blocks)};
}

Tangent transport(const Point& to, const Tangent& u) {
  if (u.base.manifold.get() != to.manifold.get()) {
    throw ContractViolation("transport: points on different manifolds");
  }
  return Tangent{to,
                 to.manifold->transport(u.base.blocks, to.blocks, u.blocks)};
}

Tangent transport(const Point& from, const Point& to, const Tangent& u) {
  require_same_base(u, from, "transport");
  return transport(to, u);
}

double distance(const Point& x, const Point& y) {
  if (x.manifold.get() != y.manifold.get()) {
    throw ContractViolation("distance: points on different manifolds");
  }
  return x.manifold->distance(x.blocks, y.blocks);
}

Tangent egrad_to_rgrad(const Point& x, const Blocks& eg) {
  return Tangent{x, x.manifold->egrad_to_rgrad(x.blocks, eg)};
}

Tangent egrad_to_rgrad(const Point& x, const Matrix& eg) {
  Blocks b;
  b.push_back(eg);
  return egrad_to_rgrad(x, b);
}

Tangent project_tangent(const Point& x, const Blocks& ambient) {
  return Tangent{x, x.manifold->project_tangent(x.blocks, ambient)};
}

Point random_point(const ManifoldPtr& m, Rng& rng) {
  return Point{m, m->random_point(rng)};
}

Tangent random_tangent(const Point& x, Rng& rng) {
  return Tangent{x, x.manifold->random_tangent(x.blocks, rng)};
}

namespace {

Tangent combine(const Tangent& a, const Tangent& b, double sa, double sb) {
  require_same_base(b, a.base, "tangent arithmetic");
  Blocks out = a.blocks;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sa * out[i] + sb * b.blocks[i];
  }
  return Tangent{a.base, std::move(out)};
}

}  // namespace

Tangent operator+(const Tangent& a, const Tangent& b) {
  return combine(a, b, 1.0, 1.0);
}

Tangent operator-(const Tangent& a, const Tangent& b) {
  return combine(a, b, 1.0, -1.0);
}

Tangent operator*(double s, const Tangent& a) {
  Blocks out = a.blocks;
  for (auto& m : out) m *= s;
  return Tangent{a.base, std::move(out)};
}

Tangent operator-(const Tangent& a) { return -1.0 * a; }

}  // namespace rbopt
