#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lad/classifier.hpp"

namespace lad {

// Agreement rate of `surrogate` with `black_box` on `n_eval` points drawn
// uniformly in the ball of `radius` around `x_hat`.
double local_fidelity(const Classifier& black_box, const Classifier& surrogate, const VectorRef& x_hat,
                      Scalar radius, Eigen::Index n_eval, std::uint64_t seed);

// Radii as fractions of the largest distance from x_hat to the test set.
std::vector<double> narrow_radius_fractions();
std::vector<double> wide_radius_fractions();

struct FidelityConfig {
  Eigen::Index n_eval = 1000;
  std::vector<double> radii = narrow_radius_fractions();
  std::uint64_t seed = 0;
  // Evaluate only the first `limit` test instances; 0 evaluates all.
  std::size_t limit = 0;

  void validate() const;
};

struct InstanceFidelity {
  std::size_t instance_id = 0;
  std::vector<double> values;  // one per radius
};

struct FidelityFailure {
  std::size_t instance_id = 0;
  std::string message;
};

struct FidelityReport {
  std::string method;
  FidelityConfig config;
  std::vector<InstanceFidelity> instances;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<FidelityFailure> failures;

  // Recomputes mean and population standard deviation per radius.
  void aggregate();
};

// Builds the local surrogate for one test instance (given its index).
using LocalSurrogateFactory =
    std::function<std::shared_ptr<const Classifier>(const Vector& x_hat, std::size_t instance_id)>;

// Runs both methods on the same evaluation points: per instance the seed is
// shared across radii and methods. Instances whose local surrogate cannot be
// built are recorded as failures and left out of both reports.
std::pair<FidelityReport, FidelityReport> fidelity_sweep(const Classifier& black_box,
                                                         const LocalSurrogateFactory& local_factory,
                                                         const Classifier& global_substitute,
                                                         const Matrix& test_set, const FidelityConfig& config);

}  // namespace lad
