#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace subdiff::detail {

// Adaptive Simpson on [a,b]. tol is absolute.
template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol ||
      std::abs(delta) <= 4e-16 * (std::abs(left) + std::abs(right)))
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Piecewise adaptive Simpson over the given breakpoints.
template <typename F>
double adaptive_simpson_segments(const F& f, const std::vector<double>& breaks, double tol) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    s += adaptive_simpson(f, breaks[i], breaks[i + 1], tol);
  return s;
}

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre polynomial and cached.
struct GaussRule {
  std::vector<double> x, w;
};

inline GaussRule make_gauss_rule(int n) {
  GaussRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return r;
}

inline const GaussRule& gauss_rule(int n) {
  static const GaussRule r32 = make_gauss_rule(32);
  static const GaussRule r48 = make_gauss_rule(48);
  return n == 32 ? r32 : r48;
}

template <typename F>
double gauss_legendre(const F& f, double a, double b, int n) {
  const GaussRule& r = gauss_rule(n);
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.w[i] * f(c + hw * r.x[i]);
  return s * hw;
}

// Fixed-order Gauss quadrature with an embedded error check (32- vs 48-point);
// segments that disagree are bisected recursively (spectral convergence makes
// a few levels sufficient for analytic integrands).
template <typename F>
double gauss_refine(const F& f, double a, double b, double tol, int depth) {
  const double g32 = gauss_legendre(f, a, b, 32);
  const double g48 = gauss_legendre(f, a, b, 48);
  if (depth <= 0 || std::abs(g48 - g32) <= std::max(tol, 4e-16 * std::abs(g48)))
    return g48;
  const double m = 0.5 * (a + b);
  return gauss_refine(f, a, m, 0.5 * tol, depth - 1) +
         gauss_refine(f, m, b, 0.5 * tol, depth - 1);
}

template <typename F>
double gauss_segments(const F& f, const std::vector<double>& breaks, double tol) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i]) s += gauss_refine(f, breaks[i], breaks[i + 1], tol, 10);
  return s;
}

}  // namespace subdiff::detail
