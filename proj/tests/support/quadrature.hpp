#pragma once

// Test-only quadrature oracles. These stay independent of the library's own
// integration paths so they can serve as references for them.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("adaptive simpson: depth exhausted");
  if (std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60);
}

// CDF table of a 1D density on [a,b] (unnormalized f); linear interpolation.
struct CdfTable {
  double a, b;
  std::vector<double> cdf;  // at n+1 nodes, normalized to cdf.back() == 1

  double operator()(double x) const {
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    const double n = static_cast<double>(cdf.size() - 1);
    const double t = (x - a) / (b - a) * n;
    const std::size_t i = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(i);
    return cdf[i] * (1.0 - frac) + cdf[i + 1] * frac;
  }
};

inline CdfTable cdf_table(const std::function<double(double)>& density, double a,
                          double b, std::size_t n = 20000) {
  CdfTable t;
  t.a = a;
  t.b = b;
  t.cdf.assign(n + 1, 0.0);
  const double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double x0 = a + h * static_cast<double>(i - 1);
    const double x1 = x0 + h;
    // Simpson on each cell keeps the table accurate to ~h^4
    t.cdf[i] = t.cdf[i - 1] +
               h / 6.0 * (density(x0) + 4.0 * density(0.5 * (x0 + x1)) + density(x1));
  }
  const double z = t.cdf.back();
  for (auto& v : t.cdf) v /= z;
  return t;
}

}  // namespace oracle
