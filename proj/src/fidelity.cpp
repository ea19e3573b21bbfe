#include "lad/fidelity.hpp"

#include <cmath>

#include "lad/dataset.hpp"
#include "lad/random.hpp"
#include "lad/sampling.hpp"

namespace lad {

double local_fidelity(const Classifier& black_box, const Classifier& surrogate, const VectorRef& x_hat,
                      Scalar radius, Eigen::Index n_eval, std::uint64_t seed) {
  if (n_eval < 1) throw Error("n_eval must be >= 1");
  const Matrix points = sample_hypersphere(x_hat, radius, n_eval, seed);
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    agree += black_box.predict(x) == surrogate.predict(x);
  }
  return static_cast<double>(agree) / static_cast<double>(n_eval);
}

std::vector<double> narrow_radius_fractions() { return {0.0005, 0.001, 0.0025, 0.005}; }
std::vector<double> wide_radius_fractions() { return {0.05, 0.1, 0.25, 0.5}; }

void FidelityConfig::validate() const {
  if (n_eval < 1) throw Error("n_eval must be >= 1");
  if (radii.empty()) throw Error("at least one radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw Error("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw Error("radii must be strictly increasing");
  }
}

void FidelityReport::aggregate() {
  const std::size_t r = config.radii.size();
  mean.assign(r, 0.0);
  stddev.assign(r, 0.0);
  if (instances.empty()) return;
  const double n = static_cast<double>(instances.size());
  for (const auto& inst : instances) {
    for (std::size_t k = 0; k < r; ++k) mean[k] += inst.values[k];
  }
  for (auto& m : mean) m /= n;
  for (const auto& inst : instances) {
    for (std::size_t k = 0; k < r; ++k) stddev[k] += (inst.values[k] - mean[k]) * (inst.values[k] - mean[k]);
  }
  for (auto& s : stddev) s = std::sqrt(s / n);
}

std::pair<FidelityReport, FidelityReport> fidelity_sweep(const Classifier& black_box,
                                                         const LocalSurrogateFactory& local_factory,
                                                         const Classifier& global_substitute,
                                                         const Matrix& test_set, const FidelityConfig& config) {
  config.validate();
  if (test_set.rows() == 0) throw Error("fidelity sweep needs a nonempty test set");
  FidelityReport local{"lad", config, {}, {}, {}, {}};
  FidelityReport global{"global_substitute", config, {}, {}, {}, {}};

  const auto n = static_cast<std::size_t>(test_set.rows());
  const std::size_t count = config.limit == 0 ? n : std::min(config.limit, n);
  for (std::size_t i = 0; i < count; ++i) {
    const Vector x_hat = test_set.row(static_cast<Eigen::Index>(i)).transpose();
    std::shared_ptr<const Classifier> surrogate;
    try {
      surrogate = local_factory(x_hat, i);
    } catch (const Error& e) {
      local.failures.push_back({i, e.what()});
      continue;
    }
    const double reach = max_distance(x_hat, test_set);
    const std::uint64_t seed = derive_seed(config.seed, Stream::kEvaluation, i);
    InstanceFidelity lv{i, {}};
    InstanceFidelity gv{i, {}};
    for (double fraction : config.radii) {
      // A test point equal to every other test point has no scale; fall back to the fraction itself.
      const double radius = reach > 0.0 ? fraction * reach : fraction;
      lv.values.push_back(local_fidelity(black_box, *surrogate, x_hat, radius, config.n_eval, seed));
      gv.values.push_back(local_fidelity(black_box, global_substitute, x_hat, radius, config.n_eval, seed));
    }
    local.instances.push_back(std::move(lv));
    global.instances.push_back(std::move(gv));
  }
  if (local.instances.empty()) throw Error("every instance of the fidelity sweep failed");
  local.aggregate();
  global.aggregate();
  return {std::move(local), std::move(global)};
}

}  // namespace lad
