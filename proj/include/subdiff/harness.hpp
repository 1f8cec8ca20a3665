#pragma once

// Reproduction driver: benchmark case definitions, data generation on a fine
// grid, and the table/figure pipelines (order recovery, potential recovery,
// initial-data recovery) with CSV/JSON output under out/<case>/<alpha>/.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "continuation.hpp"
#include "inversion.hpp"
#include "json.hpp"
#include "order_fit.hpp"
#include "spectral.hpp"

namespace subdiff {

// A named benchmark problem: coefficients as closures, sampled onto grids on
// demand. Cases "i" and "ii" are the two standard examples.
struct CaseSpec {
    std::string id = "i";
    std::function<double(double)> a = [](double) { return 1.0; };
    std::function<double(double)> q;
    std::function<double(double)> u0;
    std::function<double(double)> f = [](double) { return 0.0; };
    double t_final = 1.0;
    double t_split = 0.5;

    static CaseSpec case_i() {
        CaseSpec c;
        c.id = "i";
        c.q = [](double x) { return x * (1.0 - x); };
        c.u0 = [](double x) {
            return x * x * (1.0 - x) + std::cos(0.5 * M_PI * x);
        };
        return c;
    }

    static CaseSpec case_ii() {
        CaseSpec c;
        c.id = "ii";
        c.q = [](double x) { return std::min(x, 1.0 - x); };
        c.u0 = [](double x) { return std::cos(1.5 * M_PI * x); };
        return c;
    }

    static CaseSpec by_id(const std::string& id) {
        if (id == "i") return case_i();
        if (id == "ii") return case_ii();
        throw std::invalid_argument("CaseSpec: unknown case id '" + id + "'");
    }

    // The boundary condition at x = 1 is homogeneous Dirichlet; incompatible
    // initial data would poison every trace comparison, so flag it loudly.
    bool compatible(double tol = 1e-12) const { return std::abs(u0(1.0)) < tol; }

    ProblemSetup setup(const SpaceGrid& grid, double alpha) const {
        ProblemSetup s;
        s.alpha = alpha;
        s.t_final = t_final;
        s.t_split = t_split;
        s.a = grid.sample(a);
        s.q = grid.sample(q);
        s.u0 = grid.sample(u0);
        s.f = grid.sample(f);
        s.g = Excitation::step_at(t_split);
        return s;
    }
};

struct RunConfig {
    int m_inverse = 200;
    int n_inverse = 2000;
    int m_data = 400;   // data generation mesh (must be finer in space or time)
    // Data share the inversion time grid (finer in space only): the backward
    // Euler temporal error then cancels in the residual instead of acting as
    // a noise floor that the unregularized iteration would overfit.
    int n_data = 2000;
    std::vector<double> alphas{0.3, 0.5, 0.7, 0.9};
    std::vector<double> delta_alphas{0.0, 0.001, 0.005};
    std::vector<std::string> cases{"i", "ii"};
    bool fem_data = true;  // false: spectral synthesis (cleaner oracle)
    int k_modes = 50;      // spectral path mode count
    double aaa_tol = 1e-9;
    int aaa_max_degree = 20;
    std::vector<double> order_windows{1e-3, 1e-4, 1e-5, 1e-6, 1e-7,
                                      1e-8, 1e-9, 1e-10};
    int order_samples = 32;  // geometric points per window
    CgOptions cg;
    std::string out_dir = "out";

    void validate() const {
        if (!(m_data > m_inverse || n_data > n_inverse))
            throw std::invalid_argument(
                "RunConfig: data grid must be finer than the inversion grid");
        if (n_data % n_inverse != 0)
            throw std::invalid_argument(
                "RunConfig: n_data must be a multiple of n_inverse");
    }
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    return nlohmann::json{{"m_inverse", c.m_inverse},
                          {"n_inverse", c.n_inverse},
                          {"m_data", c.m_data},
                          {"n_data", c.n_data},
                          {"alphas", c.alphas},
                          {"delta_alphas", c.delta_alphas},
                          {"cases", c.cases},
                          {"fem_data", c.fem_data},
                          {"k_modes", c.k_modes},
                          {"aaa_tol", c.aaa_tol},
                          {"aaa_max_degree", c.aaa_max_degree},
                          {"order_windows", c.order_windows},
                          {"order_samples", c.order_samples},
                          {"out_dir", c.out_dir},
                          {"cg",
                           {{"max_iters", c.cg.max_iters},
                            {"projection_on", c.cg.projection_on},
                            {"stall_iters", c.cg.stall_iters},
                            {"polak_ribiere", c.cg.polak_ribiere}}}};
}

inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    auto get = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).template get<std::decay_t<decltype(field)>>();
    };
    get("m_inverse", c.m_inverse);
    get("n_inverse", c.n_inverse);
    get("m_data", c.m_data);
    get("n_data", c.n_data);
    get("alphas", c.alphas);
    get("delta_alphas", c.delta_alphas);
    get("cases", c.cases);
    get("fem_data", c.fem_data);
    get("k_modes", c.k_modes);
    get("aaa_tol", c.aaa_tol);
    get("aaa_max_degree", c.aaa_max_degree);
    get("order_windows", c.order_windows);
    get("order_samples", c.order_samples);
    get("out_dir", c.out_dir);
    if (j.contains("cg")) {
        const auto& jc = j.at("cg");
        if (jc.contains("max_iters")) c.cg.max_iters = jc.at("max_iters");
        if (jc.contains("projection_on")) c.cg.projection_on = jc.at("projection_on");
        if (jc.contains("stall_iters")) c.cg.stall_iters = jc.at("stall_iters");
        if (jc.contains("polak_ribiere")) c.cg.polak_ribiere = jc.at("polak_ribiere");
    }
}

namespace detail {

inline std::string alpha_dir_name(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "alpha_%.3f", alpha);
    return buf;
}

inline std::filesystem::path cell_dir(const RunConfig& cfg, const std::string& case_id,
                                      double alpha) {
    std::filesystem::path p = cfg.out_dir;
    p /= "case_" + case_id;
    p /= alpha_dir_name(alpha);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    os << body;
}

}  // namespace detail

// Exact boundary data for one (case, alpha) cell: uniform trace on [0, T]
// sampled on the inversion time grid, plus geometric small-time samples for
// the order fit (always spectral; no time-stepping scheme reaches t ~ 1e-10).
struct GeneratedData {
    Trace h;        // n_inverse + 1 uniform samples on [0, T]
    Trace h_small;  // geometric samples t0 * 2^{-k}, ascending
};

// Spectral synthesis of the trace at arbitrary times.
inline Trace spectral_data(const CaseSpec& cs, double alpha,
                           const std::vector<double>& times, int k_modes,
                           int m_fine = 2000) {
    SpaceGrid grid{m_fine};
    ProblemSetup s = cs.setup(grid, alpha);
    const EigenDecomposition eig = solve_eigen(s, grid, k_modes);
    const SpectralData sd = spectral_coefficients(s, eig, grid);
    SpectralTraceResult res = spectral_trace(s, eig, sd, times);
    return res.trace;
}

inline Trace small_time_trace(const CaseSpec& cs, double alpha, double t0,
                              int n_samples, int k_modes) {
    std::vector<double> times(n_samples);
    for (int k = 0; k < n_samples; ++k)
        times[k] = t0 * std::pow(2.0, -(n_samples - 1 - k));
    return spectral_data(cs, alpha, times, k_modes);
}

inline GeneratedData generate_data(const CaseSpec& cs, double alpha,
                                   const RunConfig& cfg) {
    cfg.validate();
    GeneratedData out;
    out.h.times.resize(cfg.n_inverse + 1);
    for (int j = 0; j <= cfg.n_inverse; ++j)
        out.h.times[j] = cs.t_final * j / cfg.n_inverse;
    if (cfg.fem_data) {
        SpaceGrid grid{cfg.m_data};
        TimeGrid tg{cs.t_final, cfg.n_data};
        ProblemSetup s = cs.setup(grid, alpha);
        const FieldHistory u = solve_forward(s, grid, tg);
        const int stride = cfg.n_data / cfg.n_inverse;
        out.h.values.resize(cfg.n_inverse + 1);
        for (int j = 0; j <= cfg.n_inverse; ++j)
            out.h.values[j] = u.step(stride * j)[0];
    } else {
        out.h = spectral_data(cs, alpha, out.h.times, cfg.k_modes, cfg.m_data * 5);
    }
    out.h_small = small_time_trace(cs, alpha, cfg.order_windows.front(),
                                   cfg.order_samples, cfg.k_modes);
    return out;
}

// ---------------------------------------------------------------------------
// Table 1: recovered order per (window, alpha), one CSV per case.

struct Table1Row {
    double t0 = 0.0;
    std::vector<std::string> alpha_hat;  // one entry per alpha, or "ERROR"
};

inline std::vector<Table1Row> run_table1_case(const CaseSpec& cs,
                                              const RunConfig& cfg,
                                              int* failures = nullptr) {
    std::vector<Table1Row> rows(cfg.order_windows.size());
    for (size_t w = 0; w < cfg.order_windows.size(); ++w)
        rows[w].t0 = cfg.order_windows[w];
    for (double alpha : cfg.alphas) {
        for (size_t w = 0; w < cfg.order_windows.size(); ++w) {
            std::string cell;
            try {
                const Trace hs = small_time_trace(cs, alpha, cfg.order_windows[w],
                                                  cfg.order_samples, cfg.k_modes);
                const OrderFitResult fit = fit_order(hs, cfg.order_windows[w]);
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", fit.alpha_hat);
                cell = buf;
                if (fit.unidentifiable) cell += "*";
            } catch (const std::exception& e) {
                cell = "ERROR";
                if (failures) ++*failures;
            }
            rows[w].alpha_hat.push_back(cell);
        }
    }
    return rows;
}

// Each run_table* driver returns the number of failed cells (0 on success).
inline int run_table1(const RunConfig& cfg) {
    int failures = 0;
    for (const std::string& cid : cfg.cases) {
        const CaseSpec cs = CaseSpec::by_id(cid);
        const auto rows = run_table1_case(cs, cfg, &failures);
        std::ostringstream os;
        os << "t0";
        for (double a : cfg.alphas) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), ",alpha_%.1f", a);
            os << buf;
        }
        os << "\n";
        for (const auto& r : rows) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.0e", r.t0);
            os << buf;
            for (const auto& c : r.alpha_hat) os << "," << c;
            os << "\n";
        }
        std::filesystem::path dir = cfg.out_dir;
        dir /= "case_" + cid;
        std::filesystem::create_directories(dir);
        detail::write_text(dir / "table1.csv", os.str());
    }
    detail::write_text(std::filesystem::path(cfg.out_dir) / "config.json",
                       run_config_to_json(cfg).dump(2) + "\n");
    return failures;
}

// ---------------------------------------------------------------------------
// Table 2: potential recovery per (case, alpha, delta_alpha).

struct CellResult {
    bool ok = false;
    std::string error;
    InversionReport report;
};

// Run the two-stage pipeline for one cell: reduce the data by rational
// continuation, then CG on the potential with the (possibly perturbed) order.
inline CellResult invert_q_cell(const CaseSpec& cs, double alpha, double dalpha,
                                const GeneratedData& data, const RunConfig& cfg,
                                RationalApproximant* approx_out = nullptr,
                                Trace* hbar_out = nullptr) {
    CellResult out;
    try {
        Trace fitpart;
        for (size_t j = 0; j < data.h.times.size(); ++j)
            if (data.h.times[j] <= cs.t_split * (1.0 + 1e-12)) {
                fitpart.times.push_back(data.h.times[j]);
                fitpart.values.push_back(data.h.values[j]);
            }
        const RationalApproximant hr =
            aaa_fit(fitpart, cfg.aaa_tol, cfg.aaa_max_degree);
        const Trace hbar = reduced_data(data.h, hr, cs.t_split);
        if (approx_out) *approx_out = hr;
        if (hbar_out) *hbar_out = hbar;

        SpaceGrid grid{cfg.m_inverse};
        TimeGrid tg{cs.t_final, cfg.n_inverse};
        ProblemSetup tmpl = cs.setup(grid, alpha + dalpha);
        tmpl.q = grid.sample([](double) { return 0.0; });
        tmpl.u0 = grid.sample([](double) { return 0.0; });
        const std::vector<double> q_truth = grid.sample(cs.q);
        out.report = recover_potential(hbar, alpha + dalpha, tmpl, grid, tg,
                                       cfg.cg, &q_truth);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

// Initial-data recovery on [0, T1] given a recovered (or true) potential.
inline CellResult invert_u0_cell(const CaseSpec& cs, double alpha, double dalpha,
                                 const GeneratedData& data,
                                 const std::vector<double>& q_hat,
                                 const RunConfig& cfg) {
    CellResult out;
    try {
        SpaceGrid grid{cfg.m_inverse};
        const int n1 = cfg.n_inverse / 2;
        TimeGrid tg{cs.t_split, n1};
        ProblemSetup tmpl = cs.setup(grid, alpha + dalpha);
        tmpl.t_final = cs.t_split;
        tmpl.t_split = 0.0;
        tmpl.q = q_hat;
        tmpl.u0 = grid.sample([](double) { return 0.0; });
        tmpl.g = Excitation::none();
        Trace h01;
        for (int j = 0; j <= n1; ++j) {
            h01.times.push_back(data.h.times[j]);
            h01.values.push_back(data.h.values[j]);
        }
        const std::vector<double> u0_truth = grid.sample(cs.u0);
        out.report =
            recover_initial(h01, alpha + dalpha, tmpl, grid, tg, cfg.cg, &u0_truth);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

inline void write_cell_report(const std::filesystem::path& dir,
                              const std::string& stem, const CellResult& cell,
                              const RunConfig& cfg, const SpaceGrid& grid) {
    nlohmann::json j;
    if (cell.ok) {
        j = report_to_json(cell.report, cfg.cg);
        write_reconstruction_csv(cell.report.estimate, grid,
                                 (dir / (stem + ".csv")).string());
        std::ostringstream conv;
        conv << "k,e,r\n";
        for (size_t k = 0; k < cell.report.r_k.size(); ++k) {
            char buf[96];
            const double ek =
                k < cell.report.e_k.size() ? cell.report.e_k[k] : std::nan("");
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", k, ek,
                          cell.report.r_k[k]);
            conv << buf;
        }
        detail::write_text(dir / (stem + "_convergence.csv"), conv.str());
    } else {
        j["error"] = cell.error;
    }
    j["config"] = run_config_to_json(cfg);
    detail::write_text(dir / (stem + ".json"), j.dump(2) + "\n");
}

inline int run_table2(const RunConfig& cfg) {
    int failures = 0;
    for (const std::string& cid : cfg.cases) {
        const CaseSpec cs = CaseSpec::by_id(cid);
        std::ostringstream table;
        table << "alpha";
        for (double da : cfg.delta_alphas) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",e_star_da%g,k_star_da%g,r_star_da%g",
                          da, da, da);
            table << buf;
        }
        table << "\n";
        for (double alpha : cfg.alphas) {
            const GeneratedData data = generate_data(cs, alpha, cfg);
            const std::filesystem::path dir = detail::cell_dir(cfg, cid, alpha);
            write_trace_csv(data.h, (dir / "trace.csv").string());
            char abuf[32];
            std::snprintf(abuf, sizeof(abuf), "%.1f", alpha);
            table << abuf;
            SpaceGrid grid{cfg.m_inverse};
            for (double da : cfg.delta_alphas) {
                RationalApproximant hr;
                const CellResult cell = invert_q_cell(cs, alpha, da, data, cfg, &hr);
                char dbuf[48];
                std::snprintf(dbuf, sizeof(dbuf), da == 0.0 ? "q_hat" : "q_hat_da%g",
                              da);
                write_cell_report(dir, dbuf, cell, cfg, grid);
                if (da == 0.0 && cell.ok)
                    detail::write_text(dir / "approximant.json",
                                       approximant_to_json(hr).dump(2) + "\n");
                if (cell.ok) {
                    char buf[96];
                    std::snprintf(buf, sizeof(buf), ",%.3e,%d,%.3e",
                                  cell.report.e_star, cell.report.k_star,
                                  cell.report.r_star);
                    table << buf;
                } else {
                    table << ",ERROR,ERROR,ERROR";
                    ++failures;
                }
            }
            table << "\n";
        }
        std::filesystem::path dir = cfg.out_dir;
        dir /= "case_" + cid;
        detail::write_text(dir / "table2.csv", table.str());
    }
    detail::write_text(std::filesystem::path(cfg.out_dir) / "config.json",
                       run_config_to_json(cfg).dump(2) + "\n");
    return failures;
}

// ---------------------------------------------------------------------------
// Table 3: initial-data recovery with the recovered potential. Reuses a cached
// q_hat.csv from a table-2 run when present, otherwise recomputes it.

inline std::vector<double> read_reconstruction_csv(const std::filesystem::path& p,
                                                   const SpaceGrid& grid) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("cannot open " + p.string());
    std::string line;
    std::getline(is, line);  // header
    std::vector<double> v;
    while (std::getline(is, line)) {
        const size_t comma = line.find(',');
        if (comma == std::string::npos) continue;
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    if (static_cast<int>(v.size()) != grid.n_nodes())
        throw std::runtime_error("reconstruction size mismatch in " + p.string());
    return v;
}

inline int run_table3(const RunConfig& cfg) {
    int failures = 0;
    for (const std::string& cid : cfg.cases) {
        const CaseSpec cs = CaseSpec::by_id(cid);
        std::ostringstream table;
        table << "alpha,e_star,k_star,r_star\n";
        for (double alpha : cfg.alphas) {
            const GeneratedData data = generate_data(cs, alpha, cfg);
            const std::filesystem::path dir = detail::cell_dir(cfg, cid, alpha);
            SpaceGrid grid{cfg.m_inverse};
            char abuf[32];
            std::snprintf(abuf, sizeof(abuf), "%.1f", alpha);
            table << abuf;
            try {
                std::vector<double> q_hat;
                const std::filesystem::path cached = dir / "q_hat.csv";
                if (std::filesystem::exists(cached)) {
                    q_hat = read_reconstruction_csv(cached, grid);
                } else {
                    const CellResult qc = invert_q_cell(cs, alpha, 0.0, data, cfg);
                    if (!qc.ok) throw std::runtime_error(qc.error);
                    q_hat = qc.report.estimate;
                    write_cell_report(dir, "q_hat", qc, cfg, grid);
                }
                const CellResult cell = invert_u0_cell(cs, alpha, 0.0, data, q_hat, cfg);
                write_cell_report(dir, "u0_hat", cell, cfg, grid);
                if (!cell.ok) throw std::runtime_error(cell.error);
                char buf[96];
                std::snprintf(buf, sizeof(buf), ",%.3e,%d,%.3e\n",
                              cell.report.e_star, cell.report.k_star,
                              cell.report.r_star);
                table << buf;
            } catch (const std::exception& e) {
                table << ",ERROR,ERROR,ERROR\n";
                ++failures;
            }
        }
        std::filesystem::path dir = cfg.out_dir;
        dir /= "case_" + cid;
        detail::write_text(dir / "table3.csv", table.str());
    }
    detail::write_text(std::filesystem::path(cfg.out_dir) / "config.json",
                       run_config_to_json(cfg).dump(2) + "\n");
    return failures;
}

// ---------------------------------------------------------------------------
// Figure data: continuation quality on [T1, T] (fig1), reconstruction
// profiles and convergence histories (fig2/fig3 come out of the table runs'
// *_convergence.csv and *.csv files; fig1 is produced here).

inline void run_figures_cell(const CaseSpec& cs, double alpha,
                             const GeneratedData& data,
                             const std::filesystem::path& dir,
                             const RunConfig& cfg) {
    Trace fitpart;
    for (size_t j = 0; j < data.h.times.size(); ++j)
        if (data.h.times[j] <= cs.t_split * (1.0 + 1e-12)) {
            fitpart.times.push_back(data.h.times[j]);
            fitpart.values.push_back(data.h.values[j]);
        }
    const RationalApproximant hr = aaa_fit(fitpart, cfg.aaa_tol, cfg.aaa_max_degree);
    std::ostringstream os;
    os << "t,h,h_r,abs_err\n";
    for (size_t j = 0; j < data.h.times.size(); ++j) {
        const double t = data.h.times[j];
        if (t < cs.t_split) continue;
        const double v = eval_rational(hr, t);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", t,
                      data.h.values[j], v, std::abs(data.h.values[j] - v));
        os << buf;
    }
    detail::write_text(dir / "fig1.csv", os.str());
}

inline int run_figures(const RunConfig& cfg) {
    int failures = 0;
    for (const std::string& cid : cfg.cases) {
        const CaseSpec cs = CaseSpec::by_id(cid);
        for (double alpha : cfg.alphas) {
            const GeneratedData data = generate_data(cs, alpha, cfg);
            const std::filesystem::path dir = detail::cell_dir(cfg, cid, alpha);
            try {
                run_figures_cell(cs, alpha, data, dir, cfg);
            } catch (const std::exception& e) {
                ++failures;
            }
        }
    }
    return failures;
}

}  // namespace subdiff
