#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hgda/errors.hpp"

namespace hgda {

// Dense row-major matrix of doubles. Vectors are 1 x n matrices so that
// parameter containers expose one uniform tensor type to the optimizer,
// the checkpoint writer, and the gradient checks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix row(std::size_t n) { return Matrix(1, n); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(0.0); }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const noexcept {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void check_same_shape(const Matrix& a, const Matrix& b,
                             const char* what) {
  if (!a.same_shape(b)) {
    raise(ErrorCode::dimension_mismatch, what);
  }
}

// dst += scale * src
inline void add_scaled(Matrix& dst, const Matrix& src, double scale) {
  check_same_shape(dst, src, "add_scaled operands");
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t k = 0; k < dst.size(); ++k) d[k] += scale * s[k];
}

inline void scale(Matrix& m, double s) {
  double* d = m.data();
  for (std::size_t k = 0; k < m.size(); ++k) d[k] *= s;
}

inline double squared_norm(const Matrix& m) {
  double acc = 0.0;
  const double* d = m.data();
  for (std::size_t k = 0; k < m.size(); ++k) acc += d[k] * d[k];
  return acc;
}

}  // namespace hgda
