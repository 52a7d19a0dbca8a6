#pragma once

#include <cmath>
#include <cstddef>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"

namespace nodec {

namespace detail {

inline Matrix simpson(const Matrix& fa, const Matrix& fm, const Matrix& fb,
                      double h) {
  Matrix s = fa;
  s += fb;
  s += 4.0 * fm;
  s *= h / 6.0;
  return s;
}

template <typename F>
Matrix adaptive_simpson(F& f, double a, double b, const Matrix& fa,
                        const Matrix& fm, const Matrix& fb,
                        const Matrix& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const Matrix fl = f(0.5 * (a + m));
  const Matrix fr = f(0.5 * (m + b));
  const Matrix left = simpson(fa, fl, fm, m - a);
  const Matrix right = simpson(fm, fr, fb, b - m);

  Matrix sum = left + right;
  const Matrix err = sum - whole;
  if (err.all_finite() && err.max_abs() <= 15.0 * tol) {
    sum += err * (1.0 / 15.0);  // Richardson correction
    return sum;
  }
  if (depth >= 30)
    throw QuadratureError("adaptive Simpson failed to converge at depth 30");
  return adaptive_simpson(f, a, m, fa, fl, fm, left, 0.5 * tol, depth + 1) +
         adaptive_simpson(f, m, b, fm, fr, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive composite-Simpson integral of a matrix-valued function, with an
// entrywise absolute error target of tol.
template <typename F>
Matrix integrate_matrix(F&& f, double a, double b, double tol) {
  if (!(a <= b)) throw ParamError("integrate_matrix requires a <= b");
  if (!(tol > 0.0)) throw ParamError("integrate_matrix requires tol > 0");

  const Matrix fa = f(a);
  if (a == b) return Matrix(fa.rows(), fa.cols());
  const Matrix fm = f(0.5 * (a + b));
  const Matrix fb = f(b);
  const Matrix whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0);
}

}  // namespace nodec
