#pragma once

// Barycentric rational approximation of the boundary trace on [0, T1] via the
// AAA greedy algorithm, and its evaluation beyond T1 (analytic continuation)
// to form the reduced data.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "types.hpp"

namespace subdiff {

struct RationalApproximant {
    std::vector<double> support;  // chosen sample points z_k
    std::vector<double> values;   // f_k at support
    std::vector<double> weights;  // barycentric w_k
    int degree = 0;               // r = support.size() - 1
    bool stagnation = false;      // greedy error stopped decreasing
    double max_error = 0.0;       // max |f - r| over all samples at the end
    std::vector<double> real_poles;  // real poles found in the checked window
};

// Barycentric evaluation. At a support point returns the stored value exactly.
// A genuine pole (zero denominator away from support) is guarded into NaN.
inline double eval_rational(const RationalApproximant& r, double t) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < r.support.size(); ++k) {
        const double d = t - r.support[k];
        if (d == 0.0) return r.values[k];
        const double c = r.weights[k] / d;
        num += c * r.values[k];
        den += c;
    }
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return num / den;
}

namespace detail {

// Weights for a fixed support set: smallest right singular vector of the
// Loewner matrix built from the non-support samples.
inline std::vector<double> loewner_weights(const std::vector<double>& zs,
                                           const std::vector<double>& fs,
                                           const std::vector<int>& in_support,
                                           const std::vector<int>& supp_idx) {
    const int m = static_cast<int>(supp_idx.size());
    int rows = 0;
    for (int flag : in_support) rows += (flag ? 0 : 1);
    Eigen::MatrixXd A(rows, m);
    int r = 0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (in_support[i]) continue;
        for (int j = 0; j < m; ++j) {
            const int sj = supp_idx[j];
            A(r, j) = (fs[i] - fs[sj]) / (zs[i] - zs[sj]);
        }
        ++r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    Eigen::VectorXd w = svd.matrixV().col(m - 1);
    return std::vector<double>(w.data(), w.data() + m);
}

// Poles of the barycentric form: finite generalized eigenvalues of the
// (m+1)x(m+1) arrowhead pencil; two spurious infinite eigenvalues drop out.
inline std::vector<std::complex<double>> barycentric_poles(
    const RationalApproximant& r) {
    const int m = static_cast<int>(r.support.size());
    if (m < 2) return {};
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (int k = 0; k < m; ++k) {
        A(0, k + 1) = r.weights[k];
        A(k + 1, 0) = 1.0;
        A(k + 1, k + 1) = r.support[k];
        B(k + 1, k + 1) = 1.0;
    }
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, B, false);
    std::vector<std::complex<double>> poles;
    for (int i = 0; i < ges.alphas().size(); ++i) {
        const double beta = ges.betas()(i);
        if (std::abs(beta) < 1e-13) continue;  // infinite eigenvalue
        poles.push_back(ges.alphas()(i) / beta);
    }
    return poles;
}

}  // namespace detail

// Greedy AAA fit of the trace samples. `pole_check_tmax` bounds the window in
// which a real pole invalidates the approximant (the continuation target
// interval plus margin); by default 2.1x the last sample time, i.e. 1.05*T
// when the samples cover [0, T/2].
inline RationalApproximant aaa_fit(const Trace& samples, double tol = 1e-9,
                                   int max_degree = 20,
                                   double pole_check_tmax = -1.0) {
    const std::vector<double>& zs = samples.times;
    const std::vector<double>& fs = samples.values;
    const int n = static_cast<int>(zs.size());
    if (n < 2 * max_degree + 2)
        throw std::invalid_argument("aaa_fit: need at least 2*max_degree + 2 samples");
    if (pole_check_tmax <= 0.0)
        pole_check_tmax = 2.1 * *std::max_element(zs.begin(), zs.end());
    // Poles below the smallest positive sample are the approximant's image of
    // the branch point at t = 0 (they appear for any Markov-type trace) and do
    // not harm evaluation on the sample range or beyond; only poles from the
    // first positive sample onward are treated as spurious.
    double pole_check_tmin = std::numeric_limits<double>::max();
    for (double z : zs)
        if (z > 0.0) pole_check_tmin = std::min(pole_check_tmin, z);

    double fscale = 0.0;
    for (double v : fs) fscale = std::max(fscale, std::abs(v));
    if (fscale == 0.0) fscale = 1.0;

    std::vector<int> in_support(n, 0);
    std::vector<int> supp_idx;

    auto build = [&](const std::vector<int>& idx) {
        RationalApproximant r;
        for (int i : idx) {
            r.support.push_back(zs[i]);
            r.values.push_back(fs[i]);
        }
        r.weights = detail::loewner_weights(zs, fs, in_support, idx);
        r.degree = static_cast<int>(idx.size()) - 1;
        return r;
    };
    auto max_err = [&](const RationalApproximant& r, int* argmax) {
        double worst = -1.0;
        if (argmax) *argmax = -1;
        for (int i = 0; i < n; ++i) {
            if (in_support[i]) continue;
            const double e = std::abs(eval_rational(r, zs[i]) - fs[i]);
            if (e > worst) {
                worst = e;
                if (argmax) *argmax = i;
            }
        }
        return worst;
    };
    auto has_spurious_pole = [&](const RationalApproximant& r) {
        for (const auto& p : detail::barycentric_poles(r)) {
            const double scale = std::max(1.0, std::abs(p.real()));
            if (std::abs(p.imag()) <= 1e-10 * scale &&
                p.real() >= pole_check_tmin && p.real() <= pole_check_tmax)
                return true;
        }
        return false;
    };

    // Degree-0 start: constant at the mean, support = worst sample.
    double mean = 0.0;
    for (double v : fs) mean += v;
    mean /= n;
    int next = 0;
    double worst0 = -1.0;
    for (int i = 0; i < n; ++i)
        if (std::abs(fs[i] - mean) > worst0) {
            worst0 = std::abs(fs[i] - mean);
            next = i;
        }

    RationalApproximant best;
    double best_err = std::numeric_limits<double>::max();
    int non_decreasing = 0;
    double prev_err = std::numeric_limits<double>::max();

    while (true) {
        in_support[next] = 1;
        supp_idx.push_back(next);
        RationalApproximant r = build(supp_idx);
        int arg = -1;
        const double err = max_err(r, &arg);
        r.max_error = err;
        if (err < best_err) {
            best_err = err;
            best = r;
        }
        if (err <= tol * fscale || r.degree >= max_degree || arg < 0) break;
        // Intermediate degrees routinely carry transient spurious poles that
        // the next greedy step removes; only a converged fit is checked.
        if (err >= prev_err * (1.0 - 1e-12)) {
            if (++non_decreasing >= 3) {
                best.stagnation = true;
                break;
            }
        } else {
            non_decreasing = 0;
        }
        prev_err = err;
        next = arg;
    }

    // Spurious-pole cleanup on the finished fit: drop the smallest-|weight|
    // support point and refit the remaining weights, at most 3 times.
    for (int retry = 0; has_spurious_pole(best); ++retry) {
        if (retry >= 3 || best.support.size() <= 1)
            throw std::runtime_error(
                "aaa_fit: persistent spurious pole in the continuation window");
        std::fill(in_support.begin(), in_support.end(), 0);
        int drop = 0;
        for (std::size_t j = 1; j < supp_idx.size(); ++j)
            if (std::abs(best.weights[j]) < std::abs(best.weights[drop]))
                drop = static_cast<int>(j);
        supp_idx.erase(supp_idx.begin() + drop);
        for (int i : supp_idx) in_support[i] = 1;
        best = build(supp_idx);
        best.max_error = max_err(best, nullptr);
    }

    for (const auto& p : detail::barycentric_poles(best)) {
        const double scale = std::max(1.0, std::abs(p.real()));
        if (std::abs(p.imag()) <= 1e-10 * scale &&
            p.real() >= pole_check_tmin && p.real() <= pole_check_tmax)
            best.real_poles.push_back(p.real());
    }
    std::sort(best.real_poles.begin(), best.real_poles.end());
    return best;
}

// Reduced data: zero on [0, t_split], h - h_r on (t_split, T].
inline Trace reduced_data(const Trace& h, const RationalApproximant& hr,
                          double t_split) {
    if (h.times.empty() || h.times.back() <= t_split * (1.0 + 1e-12))
        throw std::invalid_argument(
            "reduced_data: trace must cover times beyond t_split");
    for (double p : hr.real_poles)
        if (p >= t_split && p <= h.times.back() * (1.0 + 1e-12))
            throw std::runtime_error(
                "reduced_data: approximant has a real pole in the continuation "
                "interval");
    Trace out;
    out.times = h.times;
    out.values.resize(h.times.size());
    for (std::size_t i = 0; i < h.times.size(); ++i) {
        const double t = h.times[i];
        out.values[i] =
            (t <= t_split) ? 0.0 : h.values[i] - eval_rational(hr, t);
    }
    return out;
}

inline nlohmann::json approximant_to_json(const RationalApproximant& r) {
    return nlohmann::json{{"support", r.support}, {"values", r.values},
                          {"weights", r.weights}, {"degree", r.degree},
                          {"stagnation", r.stagnation},
                          {"max_error", r.max_error},
                          {"real_poles", r.real_poles}};
}

inline RationalApproximant approximant_from_json(const nlohmann::json& j) {
    RationalApproximant r;
    r.support = j.at("support").get<std::vector<double>>();
    r.values = j.at("values").get<std::vector<double>>();
    r.weights = j.at("weights").get<std::vector<double>>();
    r.degree = j.at("degree").get<int>();
    r.stagnation = j.value("stagnation", false);
    r.max_error = j.value("max_error", 0.0);
    r.real_poles = j.value("real_poles", std::vector<double>{});
    return r;
}

}  // namespace subdiff
