#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "subdiff/detail/quadrature.hpp"

// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) and the derived
// time kernels of the fractional relaxation problem. Branch selection:
// power series for small |z|, asymptotic expansion for large negative real z,
// and a real-line integral representation in between. Accuracy is guaranteed
// on the real axis (the only place the solvers evaluate); complex arguments
// are supported where the power series converges comfortably.

namespace subdiff {

struct MlfParams {
  double alpha;
  double beta;
};

namespace detail {

// 1/Gamma(x), zero at the poles of Gamma.
inline double rgamma(double x) {
  if (x > 0.0) {
    if (x > 170.0) return std::exp(-std::lgamma(x));
    return 1.0 / std::tgamma(x);
  }
  if (x == std::floor(x)) return 0.0;
  // reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
  const double lg = std::lgamma(1.0 - x);
  const double s = std::sin(std::numbers::pi * x);
  if (lg > 700.0) {
    const double v = lg + std::log(std::abs(s) / std::numbers::pi);
    return std::copysign(std::exp(v), s);
  }
  return s / std::numbers::pi * std::exp(lg);
}

inline std::complex<double> mlf_series(double alpha, double beta, std::complex<double> z,
                                       int max_terms = 20000) {
  std::complex<double> sum = 0.0, c = 0.0;  // Kahan
  std::complex<double> zk = 1.0;
  for (int k = 0; k < max_terms; ++k) {
    const std::complex<double> term = zk * rgamma(alpha * k + beta);
    const std::complex<double> y = term - c;
    const std::complex<double> t = sum + y;
    c = (t - sum) - y;
    sum = t;
    zk *= z;
    if (k > 2 && std::abs(term) < 1e-17 * std::abs(sum) && alpha * k + beta > 1.5) break;
  }
  return sum;
}

// -sum_{k>=1} z^{-k} / Gamma(beta - k alpha), smallest-term truncation.
inline double mlf_asymptotic_neg(double alpha, double beta, double z) {
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  double zinv = 1.0 / z, zk = 1.0;
  for (int k = 1; k <= 200; ++k) {
    zk *= zinv;
    const double term = -zk * rgamma(beta - k * alpha);
    if (term == 0.0) continue;  // pole of Gamma, not convergence
    if (std::abs(term) > prev) break;  // divergence onset
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    prev = std::abs(term);
  }
  return sum;
}

// Real-line integral representation for z < 0, 0 < alpha < 1, beta <= 1.
inline double mlf_integral_neg(double alpha, double beta, double z) {
  const double pi = std::numbers::pi;
  const double ca = std::cos(pi * alpha);
  const double s1 = std::sin(pi * (1.0 - beta));
  const double s2 = std::sin(pi * (1.0 - beta + alpha));
  const double p = (1.0 - beta) / alpha;
  auto kern = [&](double chi) {
    if (chi <= 0.0) return 0.0;
    const double denom = (chi - z * ca) * (chi - z * ca) + z * z * (1.0 - ca * ca);
    const double num = chi * s1 - z * s2;
    return 1.0 / (pi * alpha) * std::pow(chi, p) * std::exp(-std::pow(chi, 1.0 / alpha)) * num /
           denom;
  };
  const double chi_max = std::pow(45.0, alpha);
  std::vector<double> brk{0.0};
  const double peak = -z * std::abs(ca);
  if (peak > 1e-12 && peak < chi_max) brk.push_back(peak);
  // near alpha = 1 the denominator has a narrow Lorentzian dip at chi = peak;
  // bracket it so the adaptive rule localizes the refinement
  const double width = -z * std::abs(std::sin(pi * alpha));
  if (peak > 1e-12 && width < 0.1 * peak) {
    for (double k : {3.0, 30.0, 300.0}) {
      const double lo = peak - k * width, hi = peak + k * width;
      if (lo > 1e-12) brk.push_back(lo);
      if (hi < chi_max) brk.push_back(hi);
    }
  }
  if (-z < chi_max) brk.push_back(-z);
  if (1.0 < chi_max) brk.push_back(1.0);
  for (double c : {2.0, 5.0, 15.0})
    if (c < chi_max) brk.push_back(c);
  brk.push_back(chi_max);
  std::sort(brk.begin(), brk.end());
  // tolerance scaled by an a-priori magnitude estimate: leading algebraic term
  // of the large-|z| expansion, or the exponential regime as alpha -> 1
  const double scale = std::max(std::abs(rgamma(beta - alpha) / z), std::exp(z));
  return gauss_segments(kern, brk, 2e-15 * scale);
}

inline double mlf_real(double alpha, double beta, double z) {
  if (z == 0.0) return rgamma(beta);
  if (alpha == 1.0 && beta == 1.0) return std::exp(z);
  if (std::abs(z) <= 1.0 || z > 0.0) return mlf_series(alpha, beta, z).real();
  // z < -1 from here on
  if (beta > 1.0 + 1e-12)  // reduce to beta <= 1: E_{a,b}(z) = (E_{a,b-a}(z) - 1/G(b-a)) / z
    return (mlf_real(alpha, beta - alpha, z) - rgamma(beta - alpha)) / z;
  if (z <= -25.0) return mlf_asymptotic_neg(alpha, beta, z);
  if (alpha >= 1.0) {  // integral representation needs alpha < 1
    return mlf_series(alpha, beta, z).real();
  }
  return mlf_integral_neg(alpha, beta, z);
}

}  // namespace detail

inline std::complex<double> eval_mlf(const MlfParams& p, std::complex<double> z) {
  if (!(p.alpha > 0.0)) throw std::invalid_argument("eval_mlf: alpha must be positive");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw std::domain_error("eval_mlf: non-finite argument");
  if (z.imag() == 0.0) return detail::mlf_real(p.alpha, p.beta, z.real());
  if (std::abs(z) <= 2.0) return detail::mlf_series(p.alpha, p.beta, z);
  throw std::domain_error("eval_mlf: complex argument outside the supported sector");
}

inline double eval_mlf(const MlfParams& p, double z) {
  if (!(p.alpha > 0.0)) throw std::invalid_argument("eval_mlf: alpha must be positive");
  if (!std::isfinite(z)) throw std::domain_error("eval_mlf: non-finite argument");
  return detail::mlf_real(p.alpha, p.beta, z);
}

// t^{alpha-1} E_{alpha,alpha}(-lam t^alpha): the Duhamel kernel of one eigenmode.
inline double kernel_e(double alpha, double lam, double t) {
  if (!(alpha > 0.0)) throw std::invalid_argument("kernel_e: alpha must be positive");
  if (!(lam >= 0.0)) throw std::invalid_argument("kernel_e: lam must be nonnegative");
  if (!(t > 0.0)) throw std::domain_error("kernel_e: t must be positive");
  return std::pow(t, alpha - 1.0) * detail::mlf_real(alpha, alpha, -lam * std::pow(t, alpha));
}

// Exact convolution of kernel_e against a unit step switched on at t_on:
// lam^{-1} (1 - E_{alpha,1}(-lam (t-t_on)^alpha)) for t > t_on, else 0.
inline double step_response(double alpha, double lam, double t, double t_on) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step_response: alpha must be positive");
  if (!(lam > 0.0)) throw std::invalid_argument("step_response: lam must be positive");
  if (!(t_on >= 0.0)) throw std::invalid_argument("step_response: t_on must be nonnegative");
  if (t <= t_on) return 0.0;
  const double tau = t - t_on;
  return (1.0 - detail::mlf_real(alpha, 1.0, -lam * std::pow(tau, alpha))) / lam;
}

}  // namespace subdiff
