#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tradecast/errors.hpp"

namespace tradecast {

// Dense row-major matrix of doubles. The single numeric container used for
// weights, activations and gradients throughout the library. Column vectors
// are represented as n-by-1 matrices.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
      if (row.size() != m.cols_) {
        throw ArgumentError("from_rows: ragged initializer (row " + std::to_string(r) + ")");
      }
      std::size_t c = 0;
      for (double v : row) m(r, c++) = v;
      ++r;
    }
    return m;
  }

  static Matrix column(std::span<const double> values) {
    Matrix m(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m.data_[i] = values[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  // Flat row-major access.
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  // Row r extracted as a column vector (cols-by-1).
  Matrix row_as_column(std::size_t r) const {
    Matrix out(cols_, 1);
    for (std::size_t c = 0; c < cols_; ++c) out.data_[c] = (*this)(r, c);
    return out;
  }

  Matrix& operator+=(const Matrix& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Matrix& operator-=(const Matrix& other) {
    require_same_shape(other, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  void require_same_shape(const Matrix& other, const char* op) const {
    if (!same_shape(other)) {
      throw ShapeError(std::string(op) + ": shape mismatch " + shape_str() + " vs " +
                       other.shape_str());
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) {
  a += b;
  return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
  a -= b;
  return a;
}

inline Matrix operator*(Matrix a, double s) {
  a *= s;
  return a;
}

inline Matrix operator*(double s, Matrix a) {
  a *= s;
  return a;
}

// out += a * b. The accumulating form used on hot paths.
inline void matmul_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
    throw ShapeError("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str() +
                     " -> " + out.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * b(p, j);
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  matmul_acc(out, a, b);
  return out;
}

// out += a^T * b, without materializing the transpose.
inline void matmul_transposed_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: shape mismatch " + a.shape_str() + "^T * " +
                     b.shape_str() + " -> " + out.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(p, j) += aip * b(i, j);
    }
  }
}

// out += col * row^T for two column vectors (rank-1 update).
inline void outer_acc(Matrix& out, const Matrix& col, const Matrix& row) {
  if (col.cols() != 1 || row.cols() != 1 || out.rows() != col.rows() ||
      out.cols() != row.rows()) {
    throw ShapeError("outer: shape mismatch " + col.shape_str() + " x " + row.shape_str() +
                     " -> " + out.shape_str());
  }
  for (std::size_t i = 0; i < col.rows(); ++i) {
    const double ci = col[i];
    if (ci == 0.0) continue;
    for (std::size_t j = 0; j < row.rows(); ++j) out(i, j) += ci * row[j];
  }
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

inline void hadamard_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b) || !out.same_shape(a)) {
    throw ShapeError("hadamard: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i] * b[i];
}

inline double squared_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

inline double logistic_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

enum class Activation { Sigmoid, Tanh };

inline Matrix apply_activation(const Matrix& x, Activation kind) {
  Matrix out = x;
  if (kind == Activation::Sigmoid) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = logistic_sigmoid(out[i]);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  }
  return out;
}

}  // namespace tradecast
