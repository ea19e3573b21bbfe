#pragma once

#include <cstdint>
#include <optional>

#include "lad/dataset.hpp"
#include "lad/types.hpp"

namespace lad {

// `count` points uniform in the Euclidean ball of `radius` around `center`:
// direction from a normalized Gaussian vector, norm radius * u^(1/D).
// When `clip_box` is given each point is clipped into it after drawing.
Matrix sample_hypersphere(const VectorRef& center, Scalar radius, Eigen::Index count, std::uint64_t seed,
                          const std::optional<BoundingBox>& clip_box = std::nullopt);

}  // namespace lad
