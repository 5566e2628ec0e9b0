#pragma once

#include <json.hpp>

#include "rbopt/manifold.hpp"

namespace rbopt {

using Json = nlohmann::json;

/// Serializes a point to {"manifold": ..., "shape": [r, c], "data": [...]}
/// with row-major data. Multi-block (product) values wrap the per-block
/// objects in a "components" array.
Json point_to_json(const Point& x);
Json tangent_to_json(const Tangent& u);

/// Reconstructs coordinates against a caller-supplied manifold (the schema
/// stores the manifold name for consistency checks, not enough to rebuild
/// the geometry object).
Point point_from_json(const ManifoldPtr& m, const Json& j);
Tangent tangent_from_json(const ManifoldPtr& m, const Json& j);

}  // namespace rbopt
