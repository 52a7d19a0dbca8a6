#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "nodec/error.hpp"

namespace nodec {

using Vector = std::vector<double>;

// Dense real matrix, row-major. Small sizes only (N <= a few hundred), so
// everything is plain loops over contiguous storage.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries)
      : rows_(rows), cols_(cols), a_(entries) {
    if (a_.size() != rows * cols)
      throw DimensionError("matrix initializer has wrong entry count");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  const Vector& entries() const { return a_; }
  Vector& entries() { return a_; }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("matmul shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols_ != x.size()) throw DimensionError("matvec shape mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  // max absolute row sum
  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  bool all_finite() const {
    for (double x : a_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionError("matrix shape mismatch");
  }

  std::size_t rows_ = 0, cols_ = 0;
  Vector a_;
};

// A^T x without forming the transpose.
inline Vector transpose_times(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw DimensionError("matvec shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2sq(const Vector& v) { return dot(v, v); }

inline double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// y += a * x
inline void add_scaled(Vector& y, double a, const Vector& x) {
  if (y.size() != x.size()) throw DimensionError("axpy length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline Vector vec_sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("sub length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

}  // namespace nodec
