#include "lad/sampling.hpp"

#include <cmath>

#include "lad/random.hpp"

namespace lad {

Matrix sample_hypersphere(const VectorRef& center, Scalar radius, Eigen::Index count, std::uint64_t seed,
                          const std::optional<BoundingBox>& clip_box) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw Error("hypersphere radius must be positive");
  if (count < 0) throw Error("negative sample count");
  const Eigen::Index d = center.size();
  if (clip_box && clip_box->dimension() != d) throw DimensionError("clip box dimension mismatch");

  Rng rng(seed);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  Matrix out(count, d);
  Vector direction(d);
  for (Eigen::Index i = 0; i < count; ++i) {
    Scalar norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < d; ++j) direction[j] = gauss(rng);
      norm = direction.norm();
    } while (norm == 0.0);
    const Scalar r = radius * std::pow(uniform_open01(rng), 1.0 / static_cast<Scalar>(d));
    Vector point = center + (r / norm) * direction;
    if (clip_box) point = clip_box->clip(point);
    out.row(i) = point.transpose();
  }
  return out;
}

}  // namespace lad
