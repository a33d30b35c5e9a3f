#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace txncat {

/// Dense row-major matrix of doubles; the single numeric carrier for
/// activations, weights, scores and gradients. Double precision throughout:
/// gradient verification at 1e-4 tolerance is not dependable in float.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix row_vector(std::initializer_list<double> values);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& at(std::size_t flat) { return data_[flat]; }
  double at(std::size_t flat) const { return data_[flat]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;
  bool all_finite() const noexcept;
  void fill(double value);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation : std::uint8_t { kRelu, kSigmoid };

/// Floor applied to probabilities inside cross_entropy so saturated heads
/// cannot produce -log(0).
inline constexpr double kCrossEntropyFloor = 1e-12;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
/// Adds a 1xN row vector to every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);
Matrix scale(const Matrix& a, double factor);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix elementwise(const Matrix& a, Activation kind);

/// Row-wise softmax with max-subtraction for stability. Each output row sums
/// to 1 and every entry lies in (0,1).
Matrix softmax_rows(const Matrix& a);
/// Variant that assigns exactly zero weight to columns whose valid_cols entry
/// is 0 (padded key positions). Every row must keep at least one valid column.
Matrix softmax_rows(const Matrix& a, std::span<const std::uint8_t> valid_cols);

/// Normalizes each row of x to zero mean / unit variance (population
/// variance), then applies the affine transform gamma, beta.
Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps);

/// -log(scores[target]) with the scores floored at kCrossEntropyFloor.
/// scores must be a 1xN probability row vector.
double cross_entropy(const Matrix& scores, std::size_t target);

double stable_sigmoid(double x);

}  // namespace txncat
