#include "gendet/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gendet {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
}  // namespace

void DesignMatrix::add_row(std::span<const double> dense) {
  if (static_cast<int>(dense.size()) != dims_)
    throw std::invalid_argument("design matrix: row has " + std::to_string(dense.size()) + " dims, expected " +
                                std::to_string(dims_));
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      col_.push_back(static_cast<int>(j));
      val_.push_back(dense[j]);
    }
  }
  row_ptr_.push_back(col_.size());
}

double DesignMatrix::dot(std::size_t row, std::span<const double> w) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) s += w[static_cast<std::size_t>(col_[k])] * val_[k];
  return s;
}

nlohmann::json LogRegConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"l2", l2},
          {"tolerance", tolerance},         {"seed", seed},     {"standardize", standardize}};
}

LogRegConfig LogRegConfig::from_json(const nlohmann::json& j) {
  LogRegConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.l2 = j.value("l2", c.l2);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.seed = j.value("seed", c.seed);
  c.standardize = j.value("standardize", c.standardize);
  return c;
}

LogisticObjective::LogisticObjective(const DesignMatrix& x, std::span<const int> labels, double l2,
                                     std::vector<double> mean, std::vector<double> scale)
    : x_(x), y_(labels), l2_(l2), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (labels.size() != x.rows()) throw std::invalid_argument("logistic: label count != row count");
  const auto d = static_cast<std::size_t>(x.dims());
  if (mean_.empty()) mean_.assign(d, 0.0);
  if (scale_.empty()) scale_.assign(d, 1.0);
  if (mean_.size() != d || scale_.size() != d) throw std::invalid_argument("logistic: standardization size");
}

void LogisticObjective::margins(std::span<const double> params, std::vector<double>& z) const {
  const auto d = static_cast<std::size_t>(x_.dims());
  // w . (x - mean) / scale + b == v . x + c with v = w / scale, c = b - v . mean.
  std::vector<double> v(d);
  double c = params[d];
  for (std::size_t j = 0; j < d; ++j) {
    v[j] = params[j] / scale_[j];
    c -= v[j] * mean_[j];
  }
  z.resize(x_.rows());
  for (std::size_t i = 0; i < x_.rows(); ++i) z[i] = x_.dot(i, v) + c;
}

double LogisticObjective::value(std::span<const double> params) const {
  std::vector<double> z;
  margins(params, z);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += softplus(z[i]) - y_[i] * z[i];
  loss /= static_cast<double>(z.size());
  double reg = 0.0;
  for (std::size_t j = 0; j + 1 < params.size(); ++j) reg += params[j] * params[j];
  return loss + 0.5 * l2_ * reg;
}

double LogisticObjective::value_and_gradient(std::span<const double> params, std::span<double> grad) const {
  const auto d = static_cast<std::size_t>(x_.dims());
  if (grad.size() != d + 1 || params.size() != d + 1) throw std::invalid_argument("logistic: parameter size");
  std::vector<double> z;
  margins(params, z);
  const auto n = static_cast<double>(z.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0, mean_resid = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    loss += softplus(z[i]) - y_[i] * z[i];
    const double r = (sigmoid(z[i]) - y_[i]) / n;
    mean_resid += r;
    x_.for_each(i, [&](int j, double v) { grad[static_cast<std::size_t>(j)] += r * v; });
  }
  loss /= n;
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    grad[j] = (grad[j] - mean_[j] * mean_resid) / scale_[j] + l2_ * params[j];
    reg += params[j] * params[j];
  }
  grad[d] = mean_resid;
  return loss + 0.5 * l2_ * reg;
}

double LogisticModel::predict(std::span<const double> features) const {
  if (features.size() != weights.size()) throw std::invalid_argument("predict: feature dimension mismatch");
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[j];
  return sigmoid(z);
}

double LogisticModel::predict_row(const DesignMatrix& x, std::size_t row) const {
  return sigmoid(x.dot(row, weights) + bias);
}

LogRegResult train_logreg(const DesignMatrix& x, std::span<const int> labels, const LogRegConfig& config) {
  if (x.rows() == 0) throw std::invalid_argument("train_logreg: no examples");
  if (labels.size() != x.rows()) throw std::invalid_argument("train_logreg: dimension mismatch between features and labels");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("train_logreg: labels must be 0 or 1");
    (y ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw std::invalid_argument("train_logreg: need at least one example of each class");
  if (!(config.learning_rate > 0.0) || config.epochs < 0 || config.l2 < 0.0)
    throw std::invalid_argument("train_logreg: bad config");

  const auto d = static_cast<std::size_t>(x.dims());
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  if (config.standardize) {
    std::vector<double> sq(d, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
      x.for_each(i, [&](int j, double v) {
        mean[static_cast<std::size_t>(j)] += v;
        sq[static_cast<std::size_t>(j)] += v * v;
      });
    const auto n = static_cast<double>(x.rows());
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] /= n;
      const double var = sq[j] / n - mean[j] * mean[j];
      scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  }
  const LogisticObjective obj(x, labels, config.l2, mean, scale);

  std::vector<double> theta(d + 1, 0.0), grad(d + 1), trial(d + 1), trial_grad(d + 1);
  LogRegResult res;
  double loss = obj.value_and_gradient(theta, grad);
  res.loss_history.push_back(loss);
  double step = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < config.tolerance) {
      res.converged = true;
      break;
    }
    double trial_loss = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 50; ++halvings) {
      for (std::size_t j = 0; j <= d; ++j) trial[j] = theta[j] - step * grad[j];
      trial_loss = obj.value_and_gradient(trial, trial_grad);
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent possible at floating-point resolution
    theta.swap(trial);
    grad.swap(trial_grad);
    loss = trial_loss;
    res.loss_history.push_back(loss);
    ++res.epochs_run;
  }

  // Fold the standardization into raw-space weights.
  res.model.weights.resize(d);
  res.model.bias = theta[d];
  for (std::size_t j = 0; j < d; ++j) {
    res.model.weights[j] = theta[j] / scale[j];
    res.model.bias -= res.model.weights[j] * mean[j];
  }
  res.model.trained = true;
  res.model.config = config;
  return res;
}

}  // namespace gendet
