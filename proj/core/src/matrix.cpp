#include "txncat/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "txncat/error.hpp"

namespace txncat {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes disagree (" + a.shape_str() +
                     " vs " + b.shape_str() + ")");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  }
}

Matrix Matrix::row_vector(std::initializer_list<double> values) {
  return Matrix(1, values.size(), std::vector<double>(values));
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix out(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ShapeError("Matrix::from_rows: ragged row " + std::to_string(i));
    }
    std::copy(row.begin(), row.end(), out.data() + i * c);
    ++i;
  }
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree (" + a.shape_str() +
                     " vs " + b.shape_str() + ")");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  // i-k-j order keeps the b accesses sequential.
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    const double* a_row = a.data() + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a_row[kk];
      if (av == 0.0) continue;
      const double* b_row = b.data() + kk * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += b.at(i);
  return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row_broadcast: shapes disagree (" + a.shape_str() +
                     " vs " + row.shape_str() + ")");
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += row(0, j);
  return out;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= factor;
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= b.at(i);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix elementwise(const Matrix& a, Activation kind) {
  Matrix out = a;
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < out.size(); ++i)
        out.at(i) = std::max(0.0, out.at(i));
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < out.size(); ++i)
        out.at(i) = stable_sigmoid(out.at(i));
      break;
  }
  return out;
}

Matrix softmax_rows(const Matrix& a) { return softmax_rows(a, {}); }

Matrix softmax_rows(const Matrix& a, std::span<const std::uint8_t> valid_cols) {
  if (!valid_cols.empty() && valid_cols.size() != a.cols()) {
    throw ShapeError("softmax_rows: mask length " + std::to_string(valid_cols.size()) +
                     " does not match " + a.shape_str());
  }
  if (!a.all_finite()) throw NumericError("softmax_rows: non-finite input");
  const auto valid = [&](std::size_t j) {
    return valid_cols.empty() || valid_cols[j] != 0;
  };
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (valid(j)) max_v = std::max(max_v, a(i, j));
    if (!std::isfinite(max_v)) {
      throw ShapeError("softmax_rows: row " + std::to_string(i) +
                       " has no valid column");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (valid(j)) {
        out(i, j) = std::exp(a(i, j) - max_v);
        sum += out(i, j);
      }
    }
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (valid(j)) out(i, j) /= sum;
  }
  return out;
}

Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta,
                  double eps) {
  if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || !gamma.same_shape(beta)) {
    throw ShapeError("layer_norm: affine shapes disagree (" + x.shape_str() +
                     ", gamma " + gamma.shape_str() + ", beta " +
                     beta.shape_str() + ")");
  }
  const std::size_t n = x.cols();
  Matrix out(x.rows(), n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = gamma(0, j) * ((x(i, j) - mean) * inv_std) + beta(0, j);
  }
  return out;
}

double cross_entropy(const Matrix& scores, std::size_t target) {
  if (scores.rows() != 1) {
    throw ShapeError("cross_entropy: expected a row vector, got " +
                     scores.shape_str());
  }
  if (target >= scores.cols()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for " + std::to_string(scores.cols()) +
                     " classes");
  }
  return -std::log(std::max(scores(0, target), kCrossEntropyFloor));
}

}  // namespace txncat
