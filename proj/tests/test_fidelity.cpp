#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lad/explain.hpp"
#include "lad/fidelity.hpp"
#include "lad/random.hpp"
#include "lad/sampling.hpp"

using namespace lad;

namespace {

FunctionClassifier half_plane() {
  return FunctionClassifier(2, 2, [](const VectorRef& x) { return x[0] > 0.5 ? 1 : 0; });
}

// A fixed pseudo-random labeling: each point gets a coin flip from its bytes.
FunctionClassifier coin_flip(Eigen::Index d) {
  return FunctionClassifier(d, 2, [](const VectorRef& x) {
    const Vector copy = x;
    return static_cast<Label>(mix_seed(fnv1a64(copy.data(), sizeof(double) * static_cast<std::size_t>(copy.size()))) & 1U);
  });
}

// Fraction of a disk of radius r cut off by a chord at distance d from its center.
double cap_fraction(double d, double r) {
  const double area = r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d);
  return area / (std::numbers::pi * r * r);
}

}  // namespace

TEST_CASE("self-agreement is exact") {
  const auto b = half_plane();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(local_fidelity(b, b, Eigen::Vector2d(0.5, 0.5), 0.3, 1000, seed) == 1.0);
  }
}

TEST_CASE("constant surrogate matches the circular-segment area") {
  const auto b = half_plane();
  const FunctionClassifier zero(2, 2, [](const VectorRef&) { return 0; });
  const double oracle = 1.0 - cap_fraction(0.1, 0.2);
  CHECK(oracle == doctest::Approx(0.8045).epsilon(1e-3));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double f = local_fidelity(b, zero, Eigen::Vector2d(0.4, 0.5), 0.2, 1000, seed);
    CHECK(std::abs(f - oracle) <= 0.03);
  }
}

TEST_CASE("coin-flip surrogate agrees half the time") {
  const auto b = half_plane();
  const auto coin = coin_flip(2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double f = local_fidelity(b, coin, Eigen::Vector2d(0.5, 0.5), 0.2, 1000, seed);
    CHECK(std::abs(f - 0.5) <= 0.05);
  }
}

TEST_CASE("fidelity is deterministic and bounded") {
  const auto b = half_plane();
  const auto coin = coin_flip(2);
  const double a = local_fidelity(b, coin, Eigen::Vector2d(0.3, 0.7), 0.4, 200, 8);
  CHECK(a == local_fidelity(b, coin, Eigen::Vector2d(0.3, 0.7), 0.4, 200, 8));
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK_THROWS_AS(local_fidelity(b, b, Eigen::Vector2d(0.3, 0.7), 0.0, 10, 0), Error);
  CHECK_THROWS_AS(local_fidelity(b, b, Eigen::Vector2d(0.3, 0.7), 0.1, 0, 0), Error);
}

TEST_CASE("evaluation points lie within the radius") {
  // local_fidelity draws its ball through sample_hypersphere with the given seed.
  const Vector center = Vector::Constant(5, 0.2);
  const Matrix pts = sample_hypersphere(center, 0.01, 1000, 77);
  CHECK(((pts.rowwise() - center.transpose()).rowwise().norm().array() <= 0.01 + 1e-15).all());
}

TEST_CASE("configuration validation") {
  FidelityConfig c;
  CHECK_NOTHROW(c.validate());
  c.radii = {0.1, 0.1};
  CHECK_THROWS_AS(c.validate(), Error);
  c.radii = {0.2, 0.1};
  CHECK_THROWS_AS(c.validate(), Error);
  c.radii = {};
  CHECK_THROWS_AS(c.validate(), Error);
  c.radii = {-0.1};
  CHECK_THROWS_AS(c.validate(), Error);
  c = FidelityConfig{};
  c.n_eval = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(narrow_radius_fractions() == std::vector<double>{0.0005, 0.001, 0.0025, 0.005});
}

TEST_CASE("sweep with the black box as both surrogates") {
  const auto b = std::make_shared<FunctionClassifier>(half_plane());
  Matrix single(1, 2);
  single << 0.5, 0.5;
  FidelityConfig c;
  c.n_eval = 200;
  const auto [local, global] = fidelity_sweep(*b, [&](const Vector&, std::size_t) { return b; }, *b, single, c);
  REQUIRE(local.instances.size() == 1);
  CHECK(local.method == "lad");
  CHECK(global.method == "global_substitute");
  for (double v : local.instances[0].values) CHECK(v == 1.0);
  for (double v : global.instances[0].values) CHECK(v == 1.0);
  CHECK(local.mean == std::vector<double>(4, 1.0));
  CHECK(global.stddev == std::vector<double>(4, 0.0));
}

TEST_CASE("sweep aggregates, records failures and reuses evaluation points") {
  const auto b = half_plane();
  const auto coin = std::make_shared<FunctionClassifier>(coin_flip(2));
  Rng rng(6);
  Matrix test(12, 2);
  for (Eigen::Index i = 0; i < test.rows(); ++i) test.row(i) << uniform01(rng), uniform01(rng);
  FidelityConfig c;
  c.radii = wide_radius_fractions();
  c.n_eval = 300;
  c.seed = 3;
  const auto factory = [&](const Vector&, std::size_t id) -> std::shared_ptr<const Classifier> {
    if (id % 4 == 1) throw Error("boom");
    return coin;
  };
  const auto [local, global] = fidelity_sweep(b, factory, *coin, test, c);
  CHECK(local.failures.size() == 3);
  CHECK(local.failures[0].instance_id == 1);
  CHECK(local.failures[0].message == "boom");
  CHECK(local.instances.size() == 9);
  CHECK(global.instances.size() == 9);
  for (std::size_t k = 0; k < c.radii.size(); ++k) {
    double sum = 0.0;
    for (const auto& inst : local.instances) sum += inst.values[k];
    CHECK(local.mean[k] == doctest::Approx(sum / 9.0).epsilon(1e-14));
  }
  // Same surrogate, same seed per instance: both methods see identical points.
  for (std::size_t i = 0; i < local.instances.size(); ++i) CHECK(local.instances[i].values == global.instances[i].values);

  c.limit = 5;
  const auto [limited, unused] = fidelity_sweep(b, factory, *coin, test, c);
  CHECK(limited.instances.size() + limited.failures.size() == 5);

  const auto always_fail = [](const Vector&, std::size_t) -> std::shared_ptr<const Classifier> { throw Error("no"); };
  CHECK_THROWS_AS(fidelity_sweep(b, always_fail, *coin, test, c), Error);
  CHECK_THROWS_AS(fidelity_sweep(b, factory, *coin, Matrix(0, 2), c), Error);
}

TEST_CASE("LAD surrogate is locally faithful to a linear boundary") {
  const auto b = half_plane();
  const BoundingBox box{Vector::Zero(2), Vector::Ones(2)};
  LadConfig lc;
  lc.n_support = 100;
  lc.m_segment = 50;
  lc.p_sphere = 20;
  lc.key_feature_policy = KeyFeaturePolicy::top_k(1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    lc.seed = seed;
    const Vector x_hat = Eigen::Vector2d(0.48 + 0.01 * static_cast<double>(seed), 0.3 + 0.1 * static_cast<double>(seed));
    const Explanation ex = explain(b, x_hat, box, lc);
    CHECK(local_fidelity(b, ex.surrogate, x_hat, 0.05, 1000, seed) >= 0.95);
  }
}
