#include "lad/substitute.hpp"

#include <cmath>
#include <numeric>

#include "lad/random.hpp"

namespace lad {

LinearSoftmax::LinearSoftmax(Matrix weights, Vector bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_.size() != weights_.rows()) throw Error("bias length differs from class count");
  if (weights_.rows() < 1) throw Error("scorer needs at least one class");
  if (!weights_.allFinite() || !bias_.allFinite()) throw Error("non-finite scorer parameters");
}

Vector LinearSoftmax::scores(const VectorRef& x) const {
  check_dimension(x);
  return weights_ * x + bias_;
}

Label LinearSoftmax::predict(const VectorRef& x) const {
  const Vector s = scores(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c) {
    if (s[c] > s[best]) best = c;
  }
  return static_cast<Label>(best);
}

Vector LinearSoftmax::probabilities(const VectorRef& x) const {
  const Vector s = scores(x);
  const Vector e = (s.array() - s.maxCoeff()).exp();
  return e / e.sum();
}

Matrix LinearSoftmax::jacobian(const VectorRef& x) const {
  const Vector p = probabilities(x);
  const Eigen::RowVectorXd mean_row = p.transpose() * weights_;
  return p.asDiagonal() * (weights_.rowwise() - mean_row);
}

void AugmentConfig::validate() const {
  if (seed_set_size < 1) throw Error("seed set size must be >= 1");
  if (rho < 0) throw Error("rho must be >= 0");
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (iterations < 1) throw Error("iterations must be >= 1");
}

LinearSoftmax fit_softmax(const Matrix& instances, const Labels& labels, int num_classes, double learning_rate,
                          int iterations, int epoch) {
  const Eigen::Index n = instances.rows();
  const Eigen::Index d = instances.cols();
  if (n == 0) throw Error("cannot fit a scorer on an empty set");
  const Eigen::Index c = num_classes;
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, c);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(c, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(c);
  const Eigen::MatrixXd x = instances;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd scores = (x * w.transpose()).rowwise() + b.transpose();
    const Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
    scores.colwise() -= row_max;
    Eigen::MatrixXd prob = scores.array().exp();
    const Eigen::VectorXd z = prob.rowwise().sum();
    prob.array().colwise() /= z.array();
    const double loss = -(onehot.array() * (scores.array().colwise() - z.array().log())).sum() / n;
    if (!std::isfinite(loss)) {
      throw Error("substitute training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    }
    const Eigen::MatrixXd residual = (prob - onehot) / static_cast<double>(n);
    w -= learning_rate * residual.transpose() * x;
    b -= learning_rate * residual.colwise().sum().transpose();
  }
  if (!w.allFinite() || !b.allFinite()) {
    throw Error("substitute training diverged (non-finite weights) at epoch " + std::to_string(epoch));
  }
  return LinearSoftmax(w, b);
}

Vector augmented_point(const VectorRef& x, const LinearSoftmax& substitute, Label label, double lambda,
                       const BoundingBox& box) {
  if (label < 0 || label >= substitute.num_classes()) throw Error("augmentation label out of range");
  const Vector grad = substitute.jacobian(x).row(label).transpose();
  const Vector step = grad.unaryExpr([](Scalar g) { return static_cast<Scalar>((g > 0.0) - (g < 0.0)); });
  return box.clip(x + lambda * step);
}

Substitute train_substitute(const Classifier& black_box, const Matrix& seed_set, const AugmentConfig& config,
                            const BoundingBox& box) {
  config.validate();
  if (seed_set.rows() == 0) throw Error("substitute needs a nonempty seed set");
  const int classes = black_box.num_classes();
  Matrix current = seed_set;
  Labels labels = black_box.predict_batch(current);
  for (int epoch = 1; epoch <= config.rho; ++epoch) {
    const LinearSoftmax model = fit_softmax(current, labels, classes, config.learning_rate, config.iterations, epoch);
    const Eigen::Index n = current.rows();
    Matrix grown(2 * n, current.cols());
    grown.topRows(n) = current;
    for (Eigen::Index i = 0; i < n; ++i) {
      grown.row(n + i) =
          augmented_point(current.row(i).transpose(), model, labels[static_cast<std::size_t>(i)], config.lambda, box)
              .transpose();
    }
    const Labels added = black_box.predict_batch(grown.bottomRows(n));
    labels.insert(labels.end(), added.begin(), added.end());
    current = std::move(grown);
  }
  LinearSoftmax final_model =
      fit_softmax(current, labels, classes, config.learning_rate, config.iterations, config.rho + 1);
  return Substitute(std::move(final_model), config, std::move(current));
}

Matrix draw_seed_set(const Matrix& pool, Eigen::Index count, std::uint64_t seed) {
  if (count < 1 || count > pool.rows()) throw Error("seed set size must lie in [1, pool size]");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  Matrix out(count, pool.cols());
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto remaining = static_cast<std::uint64_t>(pool.rows() - i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % remaining);
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    out.row(i) = pool.row(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace lad
