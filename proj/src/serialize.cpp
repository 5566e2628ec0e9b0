#include "rbopt/serialize.hpp"

#include "rbopt/errors.hpp"

namespace rbopt {

namespace {

Json block_to_json(const std::string& manifold, const Matrix& m) {
  Json j;
  j["manifold"] = manifold;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  }
  j["data"] = std::move(data);
  return j;
}

Json blocks_to_json(const std::string& manifold, const Blocks& b) {
  if (b.size() == 1) return block_to_json(manifold, b[0]);
  Json j;
  j["manifold"] = manifold;
  Json comps = Json::array();
  for (const auto& m : b) comps.push_back(block_to_json(manifold, m));
  j["components"] = std::move(comps);
  return j;
}

Matrix block_from_json(const Json& j) {
  const auto shape = j.at("shape");
  const Eigen::Index rows = shape.at(0).get<Eigen::Index>();
  const Eigen::Index cols = shape.at(1).get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError("point_from_json: data length does not match shape");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++];
  }
  return m;
}

Blocks blocks_from_json(const ManifoldPtr& m, const Json& j) {
  if (j.contains("manifold") && j.at("manifold").get<std::string>() != m->name()) {
    throw ConfigError("point_from_json: manifold mismatch (" +
                      j.at("manifold").get<std::string>() + " vs " + m->name() +
                      ")");
  }
  Blocks b;
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) b.push_back(block_from_json(c));
  } else {
    b.push_back(block_from_json(j));
  }
  return b;
}

}  // namespace

Json point_to_json(const Point& x) {
  return blocks_to_json(x.manifold->name(), x.blocks);
}

Json tangent_to_json(const Tangent& u) {
  Json j;
  j["base"] = point_to_json(u.base);
  j["tangent"] = blocks_to_json(u.base.manifold->name(), u.blocks);
  return j;
}

Point point_from_json(const ManifoldPtr& m, const Json& j) {
  return make_point(m, blocks_from_json(m, j));
}

Tangent tangent_from_json(const ManifoldPtr& m, const Json& j) {
  Point base = point_from_json(m, j.at("base"));
  return make_tangent(std::move(base), blocks_from_json(m, j.at("tangent")));
}

}  // namespace rbopt
