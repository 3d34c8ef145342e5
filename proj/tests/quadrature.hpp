// Adaptive Simpson, used as an independent oracle for the closed-form control cost.
#pragma once

#include <cmath>
#include <functional>

namespace mfdpc::testing {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60);
}

// 2 * integral_0^mu lambda * gamma * atanh(v / lambda) dv, one channel
inline double cost_by_quadrature(double mu, double lambda, double gamma) {
  return 2.0 * gamma * adaptive([&](double v) { return lambda * std::atanh(v / lambda); }, 0.0, mu, 1e-14);
}

}  // namespace mfdpc::testing
