#pragma once

// Dense row-major real matrix and the handful of block operations the
// mapping and decomposition code is written in terms of.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "imclr/error.hpp"

namespace imclr {

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {
    check_finite_value(fill);
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows, cols));
    }
    for (double v : data_) check_finite_value(v);
  }

  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    checked_size(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw DimensionError("ragged matrix initializer");
      for (double v : row) {
        check_finite_value(v);
        data_.push_back(v);
      }
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
      throw RangeError("index (" + std::to_string(i) + "," + std::to_string(j) +
                       ") outside " + shape());
    }
    return (*this)(i, j);
  }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::string shape() const { return shape_string(rows_, cols_); }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("matrix shape must be positive, got " + shape_string(rows, cols));
    }
    return rows * cols;
  }

  static void check_finite_value(double v) {
    if (!std::isfinite(v)) throw RangeError("matrix entries must be finite");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

}  // namespace detail

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + a.shape() + " * " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      auto brow = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aip * brow[j];
    }
  }
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "subtract");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "add");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

/// Square root of the sum of squared entries, computed with scaling so that
/// huge or tiny entries neither overflow nor underflow.
inline double frobenius_norm(const Matrix& a) {
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : a.data()) {
    if (v == 0.0) continue;
    const double av = std::abs(v);
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("hconcat: row counts differ, " + a.shape() + " | " + b.shape());
  }
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), c.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(), c.row(i).begin() + a.cols());
  }
  return c;
}

inline Matrix hconcat(std::span<const Matrix> parts) {
  if (parts.empty()) throw DimensionError("hconcat: empty operand list");
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) {
      throw DimensionError("hconcat: row counts differ, " + parts.front().shape() + " | " +
                           p.shape());
    }
    cols += p.cols();
  }
  Matrix c(parts.front().rows(), cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.rows(); ++i)
      std::copy(p.row(i).begin(), p.row(i).end(), c.row(i).begin() + offset);
    offset += p.cols();
  }
  return c;
}

inline Matrix vconcat(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("vconcat: column counts differ, " + a.shape() + " / " + b.shape());
  }
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

/// Block-diagonal placement of the given matrices; off-diagonal blocks are zero.
inline Matrix block_diag(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw DimensionError("block_diag: empty operand list");
  std::size_t rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0, c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      std::copy(b.row(i).begin(), b.row(i).end(), out.row(r0 + i).begin() + c0);
    r0 += b.rows();
    c0 += b.cols();
  }
  return out;
}

/// I_n ⊗ b: n copies of b along the diagonal.
inline Matrix kronecker_identity(std::size_t n, const Matrix& b) {
  if (n == 0) throw RangeError("kronecker_identity: n must be at least 1");
  std::vector<Matrix> copies(n, b);
  return block_diag(copies);
}

/// Columns [begin, end) of a.
inline Matrix submatrix(const Matrix& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw RangeError("submatrix: column span [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + a.shape());
  }
  Matrix s(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    std::copy(a.row(i).begin() + begin, a.row(i).begin() + end, s.row(i).begin());
  return s;
}

inline std::string to_string(const Matrix& a) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < a.rows(); ++i) {
    os << (i ? ", [" : "[");
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? ", " : "") << a(i, j);
    os << "]";
  }
  os << "]";
  return os.str();
}

}  // namespace imclr
