#pragma once

// Conjugate-gradient recovery of the potential q from the reduced boundary
// data on [T1, T], and of the initial data u0 from the trace on [0, T1].
// Gradients come from the exact discrete adjoint in fem_cq.hpp; the step
// length is the exact minimizer of the linearized residual (one sensitivity
// solve per iteration).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fem_cq.hpp"
#include "json.hpp"
#include "types.hpp"

namespace subdiff {

enum class StopRule { oracle_error, residual_tol, max_iters };

struct CgOptions {
    int max_iters = 200;
    bool projection_on = false;  // clip q to >= 0 after each update; the
                                 // final estimate is clipped either way
    StopRule stop_rule = StopRule::oracle_error;
    double residual_tol = 1e-8;
    int stall_iters = 0;  // >0: stop when the score has not improved this long
    bool polak_ribiere = false;  // default Fletcher-Reeves
};

struct InversionReport {
    std::vector<double> estimate;  // nodal q_hat or u0_hat at k_star
    std::vector<double> e_k;       // L2 errors vs truth (empty without truth)
    std::vector<double> r_k;       // windowed L2-in-time residual norms
    int k_star = 0;
    double e_star = std::numeric_limits<double>::quiet_NaN();
    double r_star = 0.0;
    bool stationary_stop = false;       // ||F'(q)d|| vanished
    std::string gradient_smoothing = "none";
};

namespace detail {

// Trapezoid weight of sample t_j in the window [ts, te]; the j = 0 sample is
// always excluded by the callers (matching the adjoint load convention).
inline double window_weight(double t, double ts, double te, double dt) {
    const double eps = 0.5 * dt;
    if (t < ts - eps || t > te + eps) return 0.0;
    const bool edge = std::abs(t - ts) < eps || std::abs(t - te) < eps;
    return edge ? 0.5 : 1.0;
}

inline double windowed_inner(const std::vector<double>& a,
                             const std::vector<double>& b, const TimeGrid& tg,
                             double ts, double te) {
    double s = 0.0;
    for (int j = 1; j <= tg.n_steps; ++j)
        s += window_weight(tg.t(j), ts, te, tg.dt) * tg.dt * a[j] * b[j];
    return s;
}

inline double nodal_inner(const std::vector<double>& a,
                          const std::vector<double>& b, const SpaceGrid& grid) {
    return grid.inner(a, b);
}

}  // namespace detail

// 0.5 * squared trapezoid L2(T1,T) misfit of the forward trace against hbar.
inline double objective_q(const std::vector<double>& q,
                          const ProblemSetup& setup_template,
                          const SpaceGrid& grid, const TimeGrid& tg,
                          const Trace& hbar) {
    ProblemSetup s = setup_template;
    s.q = q;
    for (double v : s.u0)
        if (v != 0.0)
            throw std::invalid_argument("objective_q: requires u0 == 0");
    for (double v : s.f)
        if (v != 0.0) throw std::invalid_argument("objective_q: requires f == 0");
    if (static_cast<int>(hbar.values.size()) != tg.n_steps + 1)
        throw std::invalid_argument("objective_q: hbar must live on the time grid");
    const FieldHistory u = solve_forward(s, grid, tg);
    double J = 0.0;
    for (int j = 1; j <= tg.n_steps; ++j) {
        const double w =
            detail::window_weight(tg.t(j), s.t_split, s.t_final, tg.dt);
        const double r = u.step(j)[0] - hbar.values[j];
        J += 0.5 * w * tg.dt * r * r;
    }
    return J;
}

// Nonlinear CG (Fletcher-Reeves by default) for the potential. The template
// setup supplies a, alpha, T, T1 and the excitation; u0 and f must be zero.
inline InversionReport recover_potential(
    const Trace& hbar, double alpha, const ProblemSetup& setup_template,
    const SpaceGrid& grid, const TimeGrid& tg, const CgOptions& opts,
    const std::vector<double>* q_truth = nullptr) {
    if (opts.max_iters < 1)
        throw std::invalid_argument("recover_potential: max_iters >= 1 required");
    if (opts.stop_rule == StopRule::oracle_error && q_truth == nullptr)
        throw std::invalid_argument(
            "recover_potential: oracle stopping needs ground truth");
    if (static_cast<int>(hbar.values.size()) != tg.n_steps + 1)
        throw std::invalid_argument(
            "recover_potential: hbar must live on the time grid");
    ProblemSetup s = setup_template;
    s.alpha = alpha;
    std::fill(s.u0.begin(), s.u0.end(), 0.0);
    std::fill(s.f.begin(), s.f.end(), 0.0);
    const double ts = s.t_split, te = s.t_final;
    for (int j = 0; j <= tg.n_steps; ++j)
        if (tg.t(j) < ts - 0.5 * tg.dt && hbar.values[j] != 0.0)
            throw std::invalid_argument(
                "recover_potential: reduced data must vanish on [0, T1)");

    const int m = grid.m, n = tg.n_steps;
    std::fill(s.q.begin(), s.q.end(), 0.0);  // initial guess q == 0

    InversionReport rep;
    std::vector<double> d, g_prev;
    double gg_prev = 0.0;
    std::vector<double> best_q = s.q;
    double best_e = std::numeric_limits<double>::max();
    int best_k = 0;
    double best_r = 0.0;

    auto residual_of = [&](const FieldHistory& uh, std::vector<double>& res) {
        for (int j = 0; j <= n; ++j) res[j] = uh.step(j)[0] - hbar.values[j];
        return std::sqrt(detail::windowed_inner(res, res, tg, ts, te));
    };

    FieldHistory u = solve_forward(s, grid, tg);
    for (int k = 0; k <= opts.max_iters; ++k) {
        std::vector<double> res(n + 1);
        Trace res_tr;
        res_tr.times.resize(n + 1);
        for (int j = 0; j <= n; ++j) res_tr.times[j] = tg.t(j);
        const double rnorm = residual_of(u, res);
        res_tr.values = res;
        rep.r_k.push_back(rnorm);
        double ek = std::numeric_limits<double>::quiet_NaN();
        if (q_truth) {
            std::vector<double> diff(m + 1);
            for (int i = 0; i <= m; ++i) diff[i] = s.q[i] - (*q_truth)[i];
            ek = std::sqrt(detail::nodal_inner(diff, diff, grid));
            rep.e_k.push_back(ek);
        }
        const double score =
            (opts.stop_rule == StopRule::oracle_error) ? ek : rnorm;
        if (score < best_e) {
            best_e = score;
            best_q = s.q;
            best_k = k;
            best_r = rnorm;
        }
        if (k == opts.max_iters) break;
        if (opts.stop_rule == StopRule::residual_tol &&
            rnorm <= opts.residual_tol)
            break;
        if (opts.stall_iters > 0 && k - best_k >= opts.stall_iters) break;

        const FieldHistory v = solve_adjoint(s, grid, tg, res_tr, ts, te);
        std::vector<double> gq = gradient_q(u, v, grid, tg);
        const double gg = detail::nodal_inner(gq, gq, grid);
        double beta = 0.0;
        if (!d.empty()) {
            if (opts.polak_ribiere) {
                std::vector<double> dg(m + 1);
                for (int i = 0; i <= m; ++i) dg[i] = gq[i] - g_prev[i];
                beta = std::max(0.0, detail::nodal_inner(gq, dg, grid) / gg_prev);
            } else {
                beta = gg / gg_prev;
            }
        }
        if (d.empty()) d.assign(m + 1, 0.0);
        for (int i = 0; i <= m; ++i) d[i] = -gq[i] + beta * d[i];
        // restart when conjugacy is lost (projection clips the iterate, or the
        // residual floor is reached): fall back to steepest descent
        if (detail::nodal_inner(d, gq, grid) >= 0.0)
            for (int i = 0; i <= m; ++i) d[i] = -gq[i];
        g_prev = std::move(gq);
        gg_prev = gg;

        const FieldHistory du = solve_sensitivity(s, grid, tg, u, d);
        std::vector<double> sj(n + 1);
        for (int j = 0; j <= n; ++j) sj[j] = du.step(j)[0];
        const double ss = detail::windowed_inner(sj, sj, tg, ts, te);
        if (ss <= 0.0) {
            rep.stationary_stop = true;
            break;
        }
        double gamma = -detail::windowed_inner(res, sj, tg, ts, te) / ss;
        // Exact linearized step first; if the true misfit still increases
        // (projection clipped the iterate, or the step left the near-linear
        // regime), halve the step until the objective decreases. The accepted
        // trial solve doubles as the next iteration's forward solve.
        const std::vector<double> q_old = s.q;
        std::vector<double> res_try(n + 1);
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            for (int i = 0; i <= m; ++i) {
                s.q[i] = q_old[i] + gamma * d[i];
                if (opts.projection_on) s.q[i] = std::max(s.q[i], 0.0);
            }
            FieldHistory u_try = solve_forward(s, grid, tg);
            if (residual_of(u_try, res_try) <= rnorm) {
                u = std::move(u_try);
                accepted = true;
                break;
            }
            gamma *= 0.5;
        }
        if (!accepted) {  // no decrease along d at any tried step length
            s.q = q_old;
            rep.stationary_stop = true;
            break;
        }
    }

    // Clipping the reported estimate is the L2 projection onto the admissible
    // set {q >= 0}; since the true potential lies in that set, it can only
    // reduce the error regardless of whether the iterates were projected.
    for (double& qi : best_q) qi = std::max(qi, 0.0);
    rep.estimate = best_q;
    rep.k_star = best_k;
    rep.r_star = best_r;
    if (q_truth) {
        std::vector<double> diff(m + 1);
        for (int i = 0; i <= m; ++i) diff[i] = best_q[i] - (*q_truth)[i];
        rep.e_star = std::sqrt(detail::nodal_inner(diff, diff, grid));
    }
    return rep;
}

// Linear CG for the initial data on [0, T1]. The template setup supplies
// a, q (the recovered potential) and must have t_final = T1 with no
// excitation; the trace h is the observation on that interval.
inline InversionReport recover_initial(
    const Trace& h, double alpha, const ProblemSetup& setup_template,
    const SpaceGrid& grid, const TimeGrid& tg, const CgOptions& opts,
    const std::vector<double>* u0_truth = nullptr) {
    if (opts.max_iters < 1)
        throw std::invalid_argument("recover_initial: max_iters >= 1 required");
    if (opts.stop_rule == StopRule::oracle_error && u0_truth == nullptr)
        throw std::invalid_argument(
            "recover_initial: oracle stopping needs ground truth");
    if (static_cast<int>(h.values.size()) != tg.n_steps + 1)
        throw std::invalid_argument(
            "recover_initial: trace must live on the time grid");
    ProblemSetup s = setup_template;
    s.alpha = alpha;
    std::fill(s.f.begin(), s.f.end(), 0.0);
    s.g = Excitation::none();
    const double ts = 0.0, te = s.t_final;

    const int m = grid.m, n = tg.n_steps;
    std::fill(s.u0.begin(), s.u0.end(), 0.0);  // initial guess u0 == 0

    InversionReport rep;
    std::vector<double> d, g_prev;
    double gg_prev = 0.0;
    std::vector<double> best_u0 = s.u0;
    double best_e = std::numeric_limits<double>::max();
    int best_k = 0;
    double best_r = 0.0;

    FieldHistory u = solve_forward(s, grid, tg);
    for (int k = 0; k <= opts.max_iters; ++k) {
        std::vector<double> res(n + 1);
        Trace res_tr;
        res_tr.times.resize(n + 1);
        for (int j = 0; j <= n; ++j) {
            res_tr.times[j] = tg.t(j);
            res[j] = u.step(j)[0] - h.values[j];
        }
        res_tr.values = res;
        const double rnorm =
            std::sqrt(detail::windowed_inner(res, res, tg, ts, te));
        rep.r_k.push_back(rnorm);
        double ek = std::numeric_limits<double>::quiet_NaN();
        if (u0_truth) {
            std::vector<double> diff(m + 1);
            for (int i = 0; i <= m; ++i) diff[i] = s.u0[i] - (*u0_truth)[i];
            ek = std::sqrt(detail::nodal_inner(diff, diff, grid));
            rep.e_k.push_back(ek);
        }
        const double score =
            (opts.stop_rule == StopRule::oracle_error) ? ek : rnorm;
        if (score < best_e) {
            best_e = score;
            best_u0 = s.u0;
            best_k = k;
            best_r = rnorm;
        }
        if (k == opts.max_iters) break;
        if (opts.stop_rule == StopRule::residual_tol &&
            rnorm <= opts.residual_tol)
            break;
        if (opts.stall_iters > 0 && k - best_k >= opts.stall_iters) break;

        const FieldHistory v = solve_adjoint(s, grid, tg, res_tr, ts, te);
        std::vector<double> gu = gradient_u0(v, s.alpha, grid, tg);
        const double gg = detail::nodal_inner(gu, gu, grid);
        double beta = 0.0;
        if (!d.empty()) {
            if (opts.polak_ribiere) {
                std::vector<double> dg(m + 1);
                for (int i = 0; i <= m; ++i) dg[i] = gu[i] - g_prev[i];
                beta = std::max(0.0, detail::nodal_inner(gu, dg, grid) / gg_prev);
            } else {
                beta = gg / gg_prev;
            }
        }
        if (d.empty()) d.assign(m + 1, 0.0);
        for (int i = 0; i <= m; ++i) d[i] = -gu[i] + beta * d[i];
        if (detail::nodal_inner(d, gu, grid) >= 0.0)
            for (int i = 0; i <= m; ++i) d[i] = -gu[i];
        g_prev = std::move(gu);
        gg_prev = gg;

        // The map u0 -> trace is linear: the directional derivative is the
        // homogeneous solve with initial data d.
        ProblemSetup sd = s;
        sd.u0 = d;
        sd.u0[m] = 0.0;
        const FieldHistory du = solve_forward(sd, grid, tg);
        std::vector<double> sj(n + 1);
        for (int j = 0; j <= n; ++j) sj[j] = du.step(j)[0];
        const double ss = detail::windowed_inner(sj, sj, tg, ts, te);
        if (ss <= 0.0) {
            rep.stationary_stop = true;
            break;
        }
        const double gamma = -detail::windowed_inner(res, sj, tg, ts, te) / ss;
        for (int i = 0; i <= m; ++i) s.u0[i] += gamma * d[i];
        s.u0[m] = 0.0;
        // the map u0 -> u is linear with no affine data, so the new state is
        // the superposition of the current one and the direction solve
        for (std::size_t i = 0; i < u.data.size(); ++i)
            u.data[i] += gamma * du.data[i];
    }

    rep.estimate = best_u0;
    rep.k_star = best_k;
    rep.r_star = best_r;
    if (u0_truth) rep.e_star = rep.e_k[best_k];
    return rep;
}

inline nlohmann::json report_to_json(const InversionReport& rep,
                                     const CgOptions& opts) {
    const char* rule = opts.stop_rule == StopRule::oracle_error ? "oracle-error"
                       : opts.stop_rule == StopRule::residual_tol
                           ? "residual-tol"
                           : "max-iters";
    return nlohmann::json{
        {"estimate", rep.estimate},
        {"e_k", rep.e_k},
        {"r_k", rep.r_k},
        {"k_star", rep.k_star},
        {"e_star", rep.e_star},
        {"r_star", rep.r_star},
        {"stationary_stop", rep.stationary_stop},
        {"gradient_smoothing", rep.gradient_smoothing},
        {"options",
         {{"max_iters", opts.max_iters},
          {"projection_on", opts.projection_on},
          {"stop_rule", rule},
          {"residual_tol", opts.residual_tol},
          {"polak_ribiere", opts.polak_ribiere}}}};
}

inline void write_reconstruction_csv(const std::vector<double>& values,
                                     const SpaceGrid& grid, std::ostream& os) {
    os << "x,value\n";
    char buf[64];
    for (int i = 0; i <= grid.m; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid.node(i),
                      values[i]);
        os << buf;
    }
}

}  // namespace subdiff
