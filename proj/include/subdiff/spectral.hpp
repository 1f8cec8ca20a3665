#pragma once

// Sturm-Liouville eigensolver for  -(a u')' + q u  on (0,1) with u'(0)=0,
// u(1)=0, and the eigenfunction-series forward solver for the boundary trace.
//
// Discretization: piecewise-linear Galerkin with a lumped (trapezoid) mass
// matrix, so the discrete eigenvectors are exactly orthonormal in the
// composite-trapezoid inner product used everywhere else in the library.
// The generalized problem S y = lambda D y reduces to a symmetric tridiagonal
// standard problem via the diagonal similarity D^{-1/2} S D^{-1/2}, solved by
// Sturm-sequence bisection plus inverse iteration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "subdiff/mittag_leffler.hpp"
#include "subdiff/types.hpp"

namespace subdiff {

struct EigenDecomposition {
  std::vector<double> lambdas;            // ascending, positive
  std::vector<std::vector<double>> phis;  // nodal values, trapezoid-orthonormal
  std::vector<double> phi_at_0;           // phi_n(0) > 0 (sign convention)
  std::vector<double> dphi_at_1;          // one-sided second-order phi_n'(1)
  int k_modes = 0;
};

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x,
// by the standard Sturm sequence count with underflow guarding.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  const int n = static_cast<int>(d.size());
  const double tiny = 1e-300;
  int count = 0;
  double p = d[0] - x;
  if (p < 0.0) ++count;
  for (int i = 1; i < n; ++i) {
    if (std::abs(p) < tiny) p = (p < 0.0 ? -tiny : tiny);
    p = d[i] - x - e[i - 1] * e[i - 1] / p;
    if (p < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (k is 0-based) by bisection on the Sturm count.
inline double bisect_eigenvalue(const std::vector<double>& d, const std::vector<double>& e,
                                int k, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (std::abs(lo) + std::abs(hi)) + 1e-300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Solve (T - sigma I) x = b for symmetric tridiagonal T with partial pivoting
// (LU of a tridiagonal produces a fill-in bandwidth of 2 in U).
inline void tridiag_shifted_solve(const std::vector<double>& d, const std::vector<double>& e,
                                  double sigma, std::vector<double>& x) {
  const int n = static_cast<int>(d.size());
  std::vector<double> a(n), b(n - 1), c(n - 1), u2(std::max(0, n - 2), 0.0);
  for (int i = 0; i < n; ++i) a[i] = d[i] - sigma;
  for (int i = 0; i + 1 < n; ++i) b[i] = e[i], c[i] = e[i];
  // forward elimination with row swaps; a = diag, b = super, c = sub, u2 = 2nd super
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(c[i]) > std::abs(a[i])) {
      std::swap(a[i], c[i]);
      double t = b[i];
      b[i] = a[i + 1];
      a[i + 1] = t;
      if (i + 2 < n) {
        u2[i] = b[i + 1];
        b[i + 1] = 0.0;
      }
      std::swap(x[i], x[i + 1]);
    }
    if (a[i] == 0.0) a[i] = 1e-300;
    const double m = c[i] / a[i];
    a[i + 1] -= m * b[i];
    if (i + 2 < n) b[i + 1] -= m * u2[i];
    x[i + 1] -= m * x[i];
    c[i] = m;  // keep multiplier (not needed afterwards, but harmless)
  }
  if (a[n - 1] == 0.0) a[n - 1] = 1e-300;
  // back substitution
  x[n - 1] /= a[n - 1];
  if (n >= 2) x[n - 2] = (x[n - 2] - b[n - 2] * x[n - 1]) / a[n - 2];
  for (int i = n - 3; i >= 0; --i)
    x[i] = (x[i] - b[i] * x[i + 1] - u2[i] * x[i + 2]) / a[i];
}

}  // namespace detail

// First k_modes eigenpairs of the lumped-mass Galerkin discretization.
inline EigenDecomposition solve_eigen(const ProblemSetup& setup, const SpaceGrid& grid,
                                      int k_modes) {
  setup.validate(grid);
  const int m = grid.m;
  if (k_modes < 1 || k_modes > m / 4)
    throw std::invalid_argument("solve_eigen: require 1 <= k_modes <= m/4");
  const double h = grid.h();

  // Unknowns are nodes 0..m-1 (node m is the Dirichlet end).
  // S: stiffness + potential with nodal-linear a and q integrated exactly;
  // D: lumped mass (h/2 at node 0, h elsewhere).
  std::vector<double> sd(m, 0.0), se(m - 1, 0.0), dm(m, h);
  dm[0] = 0.5 * h;
  for (int eidx = 0; eidx < m; ++eidx) {  // element [x_e, x_{e+1}]
    const double abar = 0.5 * (setup.a[eidx] + setup.a[eidx + 1]);
    const double qi = setup.q[eidx], qj = setup.q[eidx + 1];
    const double k = abar / h;
    const double dii = h * (3.0 * qi + qj) / 12.0;
    const double djj = h * (qi + 3.0 * qj) / 12.0;
    const double dij = h * (qi + qj) / 12.0;
    if (eidx < m) sd[eidx] += k + dii;
    if (eidx + 1 < m) {
      sd[eidx + 1] += k + djj;
      se[eidx] = -k + dij;
    }
  }

  // Standard symmetric tridiagonal form T = D^{-1/2} S D^{-1/2}.
  std::vector<double> td(m), te(m - 1);
  for (int i = 0; i < m; ++i) td[i] = sd[i] / dm[i];
  for (int i = 0; i + 1 < m; ++i) te[i] = se[i] / std::sqrt(dm[i] * dm[i + 1]);

  // Gershgorin bounds for bisection.
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (int i = 0; i < m; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(te[i - 1]);
    if (i + 1 < m) r += std::abs(te[i]);
    lo = std::min(lo, td[i] - r);
    hi = std::max(hi, td[i] + r);
  }

  EigenDecomposition eig;
  eig.k_modes = k_modes;
  eig.lambdas.resize(k_modes);
  eig.phis.assign(k_modes, std::vector<double>(m + 1, 0.0));
  eig.phi_at_0.resize(k_modes);
  eig.dphi_at_1.resize(k_modes);

  for (int n = 0; n < k_modes; ++n) {
    const double lam = detail::bisect_eigenvalue(td, te, n, lo, hi);
    // Inverse iteration on T with a slightly detuned shift.
    const double sigma = lam * (1.0 + 1e-10) + 1e-12;
    std::vector<double> y(m);
    for (int i = 0; i < m; ++i) y[i] = 1.0 / std::sqrt(1.0 + i);  // deterministic start
    double prev_norm = 0.0;
    for (int it = 0; it < 8; ++it) {
      detail::tridiag_shifted_solve(td, te, sigma, y);
      double norm = 0.0;
      for (double v : y) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw std::runtime_error("solve_eigen: inverse iteration breakdown");
      for (double& v : y) v /= norm;
      if (it >= 2 && norm > 1e6 * prev_norm) break;  // fully converged
      prev_norm = norm;
    }
    // Nodal eigenfunction phi = D^{-1/2} y is then exactly trapezoid-orthonormal.
    std::vector<double>& phi = eig.phis[n];
    for (int i = 0; i < m; ++i) phi[i] = y[i] / std::sqrt(dm[i]);
    phi[m] = 0.0;
    if (phi[0] < 0.0)
      for (double& v : phi) v = -v;
    if (phi[0] == 0.0) throw std::runtime_error("solve_eigen: zero endpoint value");
    if (!(lam > 0.0)) throw std::runtime_error("solve_eigen: nonpositive eigenvalue");
    eig.lambdas[n] = lam;
    eig.phi_at_0[n] = phi[0];
    eig.dphi_at_1[n] = (phi[m - 2] - 4.0 * phi[m - 1]) / (2.0 * h);  // uses phi[m]=0
  }
  for (int n = 1; n < k_modes; ++n)
    if (!(eig.lambdas[n] > eig.lambdas[n - 1]))
      throw std::runtime_error("solve_eigen: eigenvalues not strictly increasing");
  return eig;
}

struct SpectralData {
  double rho0 = 0.0;
  std::vector<double> rhos;
  std::vector<int> support;  // indices n with |rho_n| > support_tol * max|rho|
};

inline SpectralData spectral_coefficients(const ProblemSetup& setup,
                                          const EigenDecomposition& eig, const SpaceGrid& grid,
                                          double support_tol = 1e-10) {
  setup.validate(grid);
  SpectralData sd;
  sd.rhos.resize(eig.k_modes);
  double max_abs = 0.0;
  for (int n = 0; n < eig.k_modes; ++n) {
    const double u0_n = grid.inner(setup.u0, eig.phis[n]);
    const double f_n = grid.inner(setup.f, eig.phis[n]);
    sd.rho0 += f_n * eig.phi_at_0[n] / eig.lambdas[n];
    sd.rhos[n] = (u0_n - f_n / eig.lambdas[n]) * eig.phi_at_0[n];
    max_abs = std::max(max_abs, std::abs(sd.rhos[n]));
  }
  for (int n = 0; n < eig.k_modes; ++n)
    if (std::abs(sd.rhos[n]) > support_tol * max_abs) sd.support.push_back(n);
  return sd;
}

struct SpectralTraceResult {
  Trace trace;
  double tail_estimate = 0.0;  // size of the beyond-k_modes correction applied
  bool truncation_warning = false;
};

namespace detail {

// Weyl-type extrapolation of the spectrum beyond the computed modes:
// lambda_n ~ A (n - 1/2)^2 + B, endpoint weights phi_n(0)^2 ~ p.
struct WeylFit {
  double A = 0.0, B = 0.0, p = 0.0;
};

inline WeylFit weyl_fit(const EigenDecomposition& eig) {
  WeylFit w;
  const int K = eig.k_modes;
  const int n1 = K, n2 = K - std::max(1, K / 4);  // 1-based mode indices
  const double s1 = (n1 - 0.5) * (n1 - 0.5), s2 = (n2 - 0.5) * (n2 - 0.5);
  w.A = (eig.lambdas[n1 - 1] - eig.lambdas[n2 - 1]) / (s1 - s2);
  w.B = eig.lambdas[n1 - 1] - w.A * s1;
  double p = 0.0;
  int cnt = 0;
  for (int n = std::max(0, K - 5); n < K; ++n, ++cnt)
    p += eig.phi_at_0[n] * eig.phi_at_0[n];
  w.p = p / cnt;
  return w;
}

// Tail of the step-excitation Duhamel sum over modes n > K, using the Weyl
// extrapolation and the large-argument form of E_{alpha,1}.
inline double step_tail(const WeylFit& w, int K, double alpha, double tp) {
  if (tp <= 0.0) return 0.0;
  const double g1 = rgamma(1.0 - alpha), g2 = rgamma(1.0 - 2.0 * alpha);
  const double ta = std::pow(tp, alpha);
  double sum = 0.0;
  int n = K + 1;
  for (; n <= K + 4000; ++n) {
    const double lam = w.A * (n - 0.5) * (n - 0.5) + w.B;
    const double x = lam * ta;
    const double one_minus_e = 1.0 - (g1 / x - g2 / (x * x));
    const double term = w.p / lam * one_minus_e;
    sum += term;
    if (term < 1e-16 * std::max(1.0, sum)) break;
  }
  if (n > K + 4000) sum += w.p / (w.A * (n - 0.5));  // integral bound on the rest
  return sum;
}

}  // namespace detail

// Boundary trace h(t_j) = rho0 + sum_n rho_n E_{alpha,1}(-lambda_n t^alpha)
// + Duhamel excitation term, with a Weyl tail correction for step excitations.
inline SpectralTraceResult spectral_trace(const ProblemSetup& setup,
                                          const EigenDecomposition& eig, const SpectralData& sd,
                                          const std::vector<double>& times,
                                          double trace_tol = 1e-3) {
  SpectralTraceResult out;
  out.trace.times = times;
  out.trace.values.assign(times.size(), 0.0);
  const double alpha = setup.alpha;

  const detail::WeylFit wf = detail::weyl_fit(eig);

  for (size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (t < 0.0) throw std::invalid_argument("spectral_trace: negative time");
    double h = sd.rho0;
    for (int n : sd.support) {
      const double x = -eig.lambdas[n] * std::pow(t, alpha);
      h += sd.rhos[n] * eval_mlf({alpha, 1.0}, t == 0.0 ? 0.0 : x);
    }
    // excitation term
    switch (setup.g.kind) {
      case Excitation::Kind::zero: break;
      case Excitation::Kind::step: {
        const double tp = t - setup.g.t_on;
        if (tp > 0.0) {
          for (int n = 0; n < eig.k_modes; ++n)
            h += eig.phi_at_0[n] * eig.phi_at_0[n] *
                 step_response(alpha, eig.lambdas[n], t, setup.g.t_on);
          const double tail = detail::step_tail(wf, eig.k_modes, alpha, tp);
          h += tail;
          out.tail_estimate = std::max(out.tail_estimate, tail);
        }
        break;
      }
      case Excitation::Kind::tabulated: {
        // Product integration: g piecewise linear between samples; the kernel
        // integrates exactly to lambda^{-1} differences of E_{alpha,1}.
        if (t > 0.0) {
          const auto& ts = setup.g.times;
          for (int n = 0; n < eig.k_modes; ++n) {
            const double lam = eig.lambdas[n];
            double conv = 0.0;
            // integrate over s in (0, t): kernel_e(s) * g(t - s)
            double s_prev = 0.0;
            double e_prev = 1.0;  // E_{alpha,1}(0)
            for (size_t k = 0; k < ts.size() + 1; ++k) {
              double s_next = (k < ts.size()) ? t - ts[ts.size() - 1 - k] : t;
              if (s_next <= s_prev) continue;
              s_next = std::min(s_next, t);
              const double e_next = eval_mlf({alpha, 1.0}, -lam * std::pow(s_next, alpha));
              const double gbar =
                  0.5 * (setup.g(t - s_prev) + setup.g(t - s_next));
              conv += gbar * (e_prev - e_next) / lam;
              e_prev = e_next;
              s_prev = s_next;
              if (s_prev >= t) break;
            }
            h += eig.phi_at_0[n] * eig.phi_at_0[n] * conv;
          }
        }
        break;
      }
    }
    out.trace.values[j] = h;
  }
  out.truncation_warning = out.tail_estimate > trace_tol;
  return out;
}

}  // namespace subdiff
