#pragma once

// Small-time order recovery: fit h(t) ~ c0 + c1 t^alpha on a window (0, t0]
// by exhaustive alpha-grid search with an inner 2x2 linear least-squares,
// refined by golden-section.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "types.hpp"

namespace subdiff {

struct OrderFitResult {
    double alpha_hat = 0.0;  // in [0, 1]
    double c0 = 0.0;
    double c1 = 0.0;
    double objective = 0.0;  // 0.5 * sum of squared residuals at the minimizer
    double t0 = 0.0;         // window actually used
    bool unidentifiable = false;  // objective flat in alpha (e.g. constant trace)
};

namespace detail {

struct InnerFit {
    double c0, c1, objective;
};

// For fixed alpha, minimize 0.5*sum_i (c0 + c1*t_i^alpha - h_i)^2 over (c0,c1).
inline InnerFit order_inner_lsq(const std::vector<double>& ts,
                                const std::vector<double>& hs, double alpha) {
    const std::size_t n = ts.size();
    double s1 = 0, s2 = 0, b1 = 0, b2 = 0;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::pow(ts[i], alpha);
        s1 += s[i];
        s2 += s[i] * s[i];
        b1 += hs[i];
        b2 += s[i] * hs[i];
    }
    const double nn = static_cast<double>(n);
    const double det = nn * s2 - s1 * s1;
    InnerFit fit{};
    if (std::abs(det) <= 1e-300 ||
        std::abs(det) <= 1e-28 * std::max(nn * s2, s1 * s1)) {
        // t^alpha numerically constant over the window: c1 indistinguishable
        // from a shift of c0. Fall back to the mean with c1 = 0.
        fit.c0 = b1 / nn;
        fit.c1 = 0.0;
    } else {
        fit.c0 = (s2 * b1 - s1 * b2) / det;
        fit.c1 = (nn * b2 - s1 * b1) / det;
    }
    double obj = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = fit.c0 + fit.c1 * s[i] - hs[i];
        obj += r * r;
    }
    fit.objective = 0.5 * obj;
    return fit;
}

}  // namespace detail

// Fit the order on samples of h restricted to (0, t0].
inline OrderFitResult fit_order(const Trace& h, double t0) {
    std::vector<double> ts, hs;
    for (std::size_t i = 0; i < h.times.size(); ++i) {
        if (h.times[i] > 0.0 && h.times[i] <= t0 * (1.0 + 1e-12)) {
            ts.push_back(h.times[i]);
            hs.push_back(h.values[i]);
        }
    }
    if (ts.size() < 8)
        throw std::invalid_argument(
            "fit_order: need at least 8 samples in (0, t0]");
    if (*std::max_element(ts.begin(), ts.end()) <=
        *std::min_element(ts.begin(), ts.end()) * (1.0 + 1e-14))
        throw std::invalid_argument(
            "fit_order: degenerate window (all sample times identical)");

    double h_norm2 = 0;
    for (double v : hs) h_norm2 += v * v;

    // Coarse exhaustive grid removes initialization sensitivity.
    double best_alpha = 0.01, best_obj = std::numeric_limits<double>::max();
    double worst_obj = -std::numeric_limits<double>::max();
    for (int k = 1; k <= 99; ++k) {
        const double alpha = 0.01 * k;
        const double obj = detail::order_inner_lsq(ts, hs, alpha).objective;
        if (obj < best_obj) {
            best_obj = obj;
            best_alpha = alpha;
        }
        worst_obj = std::max(worst_obj, obj);
    }

    OrderFitResult res;
    res.t0 = t0;
    res.unidentifiable = (worst_obj - best_obj) < 1e-14 * h_norm2;

    // Golden-section refinement to interval width 1e-6 around the grid winner.
    double lo = std::max(best_alpha - 0.01, 1e-6);
    double hi = std::min(best_alpha + 0.01, 1.0 - 1e-6);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = detail::order_inner_lsq(ts, hs, x1).objective;
    double f2 = detail::order_inner_lsq(ts, hs, x2).objective;
    while (hi - lo > 1e-6) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = detail::order_inner_lsq(ts, hs, x1).objective;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = detail::order_inner_lsq(ts, hs, x2).objective;
        }
    }
    res.alpha_hat = 0.5 * (lo + hi);
    const auto fin = detail::order_inner_lsq(ts, hs, res.alpha_hat);
    res.c0 = fin.c0;
    res.c1 = fin.c1;
    res.objective = fin.objective;
    return res;
}

// One fit per window; windows must be in descending order.
inline std::vector<OrderFitResult> order_window_scan(
    const Trace& h, const std::vector<double>& windows) {
    for (std::size_t i = 1; i < windows.size(); ++i)
        if (windows[i] >= windows[i - 1])
            throw std::invalid_argument(
                "order_window_scan: windows must be strictly descending");
    std::vector<OrderFitResult> out;
    out.reserve(windows.size());
    for (double t0 : windows) out.push_back(fit_order(h, t0));
    return out;
}

}  // namespace subdiff
