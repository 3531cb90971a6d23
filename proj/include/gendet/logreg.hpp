#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace gendet {

// Row-compressed design matrix; dense feature vectors are stored without
// their zero entries.
class DesignMatrix {
 public:
  explicit DesignMatrix(int dims = 0) : dims_(dims) { row_ptr_.push_back(0); }

  void add_row(std::span<const double> dense);
  int dims() const { return dims_; }
  std::size_t rows() const { return row_ptr_.size() - 1; }
  double dot(std::size_t row, std::span<const double> w) const;
  template <typename F>
  void for_each(std::size_t row, F&& f) const {
    for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) f(col_[k], val_[k]);
  }

 private:
  int dims_;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
};

struct LogRegConfig {
  double learning_rate = 0.1;
  int epochs = 2000;
  double l2 = 1e-4;
  double tolerance = 1e-6;  // stop when max |gradient| falls below
  std::uint64_t seed = 1;   // recorded; full-batch descent from zero is already deterministic
  bool standardize = true;

  nlohmann::json to_json() const;
  static LogRegConfig from_json(const nlohmann::json& j);
};

// L2-regularized mean negative log-likelihood over features x~ = (x - mean) / scale:
//   f(w, b) = 1/n sum_i [softplus(z_i) - y_i z_i] + l2/2 |w|^2,  z_i = w . x~_i + b
// Parameters are packed as [w_0 .. w_{d-1}, b]. Empty mean/scale mean identity.
class LogisticObjective {
 public:
  LogisticObjective(const DesignMatrix& x, std::span<const int> labels, double l2,
                    std::vector<double> mean = {}, std::vector<double> scale = {});

  double value(std::span<const double> params) const;
  // Returns the value; writes the gradient into `grad` (size dims + 1).
  double value_and_gradient(std::span<const double> params, std::span<double> grad) const;
  int dims() const { return x_.dims(); }

 private:
  void margins(std::span<const double> params, std::vector<double>& z) const;

  const DesignMatrix& x_;
  std::span<const int> y_;
  double l2_;
  std::vector<double> mean_, scale_;
};

struct LogisticModel {
  // Raw-feature space: p(machine | x) = sigmoid(weights . x + bias).
  std::vector<double> weights;
  double bias = 0.0;
  bool trained = false;
  LogRegConfig config;

  double predict(std::span<const double> features) const;
  double predict_row(const DesignMatrix& x, std::size_t row) const;
};

struct LogRegResult {
  LogisticModel model;
  std::vector<double> loss_history;  // loss before the first epoch, then after each
  int epochs_run = 0;
  bool converged = false;
};

// Full-batch gradient descent from zero. A step that would raise the loss is
// halved until it does not, so the loss history is non-increasing.
LogRegResult train_logreg(const DesignMatrix& x, std::span<const int> labels, const LogRegConfig& config);

double sigmoid(double z);

}  // namespace gendet
