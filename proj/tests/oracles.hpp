#pragma once

// Independent reference values for the tests. Nothing here calls the library.

#include <cmath>

namespace oracle {

// Taylor series in long double; accurate to double precision for |x| <= 25.
inline long double series_sinh_l(long double x) {
  long double term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= x * x / ((2.0L * k) * (2.0L * k + 1));
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  return sum;
}

inline long double series_cosh_l(long double x) {
  long double term = 1, sum = 1;
  for (int k = 1; k < 200; ++k) {
    term *= x * x / ((2.0L * k - 1) * (2.0L * k));
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  return sum;
}

inline double series_sinh(double x) { return static_cast<double>(series_sinh_l(x)); }
inline double series_cosh(double x) { return static_cast<double>(series_cosh_l(x)); }

// Bisection root of f on [a, b], f(a) f(b) < 0.
template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200; ++i) {
    const double c = 0.5 * (a + b);
    const double fc = f(c);
    if ((fc < 0) == (fa < 0)) {
      a = c;
      fa = fc;
    } else {
      b = c;
    }
  }
  return 0.5 * (a + b);
}

} // namespace oracle
