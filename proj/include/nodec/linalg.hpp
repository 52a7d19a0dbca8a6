#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"

namespace nodec {

// e^{At} by scaling-and-squaring with a truncated Taylor series.
// The scaled norm is kept <= 0.25, where 20 terms leave a remainder far
// below double rounding, so the result is accurate to ~1e-15 relative.
inline Matrix mat_exp(const Matrix& a, double t) {
  if (!a.square()) throw DimensionError("mat_exp requires a square matrix");
  if (!std::isfinite(t)) throw ParamError("mat_exp requires finite t");
  const std::size_t n = a.rows();

  Matrix x = a * t;
  const double norm = x.norm_inf();
  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    x *= std::ldexp(1.0, -squarings);
  }

  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = term * x;
    term *= 1.0 / k;
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

struct EigenDecomposition {
  Vector values;   // eigenvalues, unordered
  Matrix vectors;  // columns are the matching eigenvectors
};

// Cyclic Jacobi rotations; symmetric input only. Robust and plenty fast at
// the sizes used here (<= 225 x 225).
inline EigenDecomposition jacobi_eigh(const Matrix& m,
                                      double symmetry_tol = 1e-12) {
  if (!m.square()) throw DimensionError("jacobi_eigh requires a square matrix");
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > symmetry_tol)
        throw SymmetryError("jacobi_eigh requires a symmetric matrix");

  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double scale = std::max(a.max_abs(), 1.0);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-14 * scale * n) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double sign = tau >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition d;
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.values[i] = a(i, i);
  d.vectors = std::move(v);
  return d;
}

// Moore-Penrose pseudoinverse of a symmetric matrix. Eigenvalues below
// 1e-9 * |lambda|_max are treated as exact zeros (a connected graph
// Laplacian has exactly one such direction).
inline Matrix pinv_sym(const Matrix& m) {
  if (!m.square()) throw DimensionError("pinv_sym requires a square matrix");
  EigenDecomposition d = jacobi_eigh(m);
  const std::size_t n = m.rows();
  double lmax = 0.0;
  for (double v : d.values) lmax = std::max(lmax, std::abs(v));
  const double cutoff = 1e-9 * lmax;

  Vector inv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    inv[i] = std::abs(d.values[i]) > cutoff ? 1.0 / d.values[i] : 0.0;

  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += d.vectors(i, k) * inv[k] * d.vectors(j, k);
      p(i, j) = s;
    }
  return p;
}

// LU with partial pivoting.
struct LuDecomposition {
  Matrix lu;
  std::vector<std::size_t> perm;
  bool singular = false;
};

inline LuDecomposition lu_factor(const Matrix& m) {
  if (!m.square()) throw DimensionError("lu_factor requires a square matrix");
  const std::size_t n = m.rows();
  LuDecomposition f{m, {}, false};
  f.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(f.lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(f.lu(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      return f;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c)
        std::swap(f.lu(pivot, c), f.lu(col, c));
      std::swap(f.perm[pivot], f.perm[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = f.lu(r, col) / f.lu(col, col);
      f.lu(r, col) = factor;
      for (std::size_t c = col + 1; c < n; ++c)
        f.lu(r, c) -= factor * f.lu(col, c);
    }
  }
  return f;
}

inline Vector lu_solve(const LuDecomposition& f, const Vector& b) {
  const std::size_t n = f.lu.rows();
  if (b.size() != n) throw DimensionError("lu_solve length mismatch");
  if (f.singular) throw SingularError("lu_solve on singular factorization");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[f.perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
    y[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(ii, j) * y[j];
    y[ii] = s / f.lu(ii, ii);
  }
  return y;
}

inline Matrix lu_inverse(const LuDecomposition& f) {
  const std::size_t n = f.lu.rows();
  if (f.singular) throw SingularError("lu_inverse on singular factorization");
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    Vector x = lu_solve(f, e);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = x[r];
    e[c] = 0.0;
  }
  return inv;
}

// inf-norm condition estimate; infinity when singular.
inline double cond_inf(const Matrix& m) {
  LuDecomposition f = lu_factor(m);
  if (f.singular) return std::numeric_limits<double>::infinity();
  return m.norm_inf() * lu_inverse(f).norm_inf();
}

}  // namespace nodec
