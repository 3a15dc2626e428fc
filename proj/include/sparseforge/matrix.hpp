#pragma once

#include <cstddef>
#include <vector>

#include "sparseforge/errors.hpp"
#include "sparseforge/rational.hpp"

namespace sparseforge {

// Small dense matrix over exact rationals. Row i holds the coefficients of
// destination expression i over the source dims.
class RatMatrix {
 public:
  RatMatrix() = default;
  RatMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static RatMatrix identity(size_t n) {
    RatMatrix m(n, n);
    for (size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  Rational& at(size_t i, size_t j) { return data_[i * cols_ + j]; }
  const Rational& at(size_t i, size_t j) const { return data_[i * cols_ + j]; }

  friend RatMatrix operator*(const RatMatrix& a, const RatMatrix& b) {
    if (a.cols_ != b.rows_) fail(ErrorKind::InvalidOperation, "matrix shape mismatch");
    RatMatrix out(a.rows_, b.cols_);
    for (size_t i = 0; i < a.rows_; ++i)
      for (size_t k = 0; k < a.cols_; ++k) {
        if (a.at(i, k).is_zero()) continue;
        for (size_t j = 0; j < b.cols_; ++j)
          out.at(i, j) += a.at(i, k) * b.at(k, j);
      }
    return out;
  }

  friend bool operator==(const RatMatrix& a, const RatMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  RatMatrix inverse() const {
    if (rows_ != cols_) fail(ErrorKind::Singular, "only square maps are invertible");
    size_t n = rows_;
    RatMatrix work = *this;
    RatMatrix inv = identity(n);
    for (size_t col = 0; col < n; ++col) {
      size_t pivot = col;
      while (pivot < n && work.at(pivot, col).is_zero()) ++pivot;
      if (pivot == n) fail(ErrorKind::Singular, "map matrix is singular");
      if (pivot != col) {
        for (size_t j = 0; j < n; ++j) {
          std::swap(work.at(pivot, j), work.at(col, j));
          std::swap(inv.at(pivot, j), inv.at(col, j));
        }
      }
      Rational p = work.at(col, col);
      for (size_t j = 0; j < n; ++j) {
        work.at(col, j) /= p;
        inv.at(col, j) /= p;
      }
      for (size_t i = 0; i < n; ++i) {
        if (i == col || work.at(i, col).is_zero()) continue;
        Rational f = work.at(i, col);
        for (size_t j = 0; j < n; ++j) {
          work.at(i, j) -= f * work.at(col, j);
          inv.at(i, j) -= f * inv.at(col, j);
        }
      }
    }
    return inv;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<Rational> data_;
};

}  // namespace sparseforge
