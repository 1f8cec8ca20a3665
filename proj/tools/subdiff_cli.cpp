// Command-line front end for the subdiffusion forward/inverse pipeline.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "subdiff/harness.hpp"

using namespace subdiff;

namespace {

RunConfig load_config(const std::string& config_path) {
    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw std::runtime_error("cannot open config " + config_path);
        nlohmann::json j;
        is >> j;
        apply_config_json(cfg, j);
    }
    return cfg;
}

Trace load_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open trace " + path);
    std::string line;
    std::getline(is, line);  // header
    Trace tr;
    while (std::getline(is, line)) {
        const size_t comma = line.find(',');
        if (comma == std::string::npos) continue;
        tr.times.push_back(std::stod(line.substr(0, comma)));
        tr.values.push_back(std::stod(line.substr(comma + 1)));
    }
    tr.check();
    return tr;
}

int run_selftest() {
    int failed = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-40s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failed;
    };
    // special values of the kernel function
    check("mlf E_{1,1}(1) = e",
          std::abs(eval_mlf({1.0, 1.0}, 1.0) - std::exp(1.0)) < 1e-12);
    check("mlf E_{0.5,1}(-1) = erfcx(1)",
          std::abs(eval_mlf({0.5, 1.0}, -1.0) - 0.42758357615580700442) < 1e-12);
    // forward trace starts at the initial value
    {
        const CaseSpec cs = CaseSpec::case_i();
        SpaceGrid grid{64};
        TimeGrid tg{1.0, 64};
        const FieldHistory u = solve_forward(cs.setup(grid, 0.5), grid, tg);
        check("forward h(0) = u0(0) = 1", std::abs(u.step(0)[0] - 1.0) < 1e-12);
    }
    // order fit on synthetic small-time data
    {
        Trace h;
        for (int k = 0; k < 16; ++k) {
            const double t = 1e-6 * std::pow(2.0, -(15 - k));
            h.times.push_back(t);
            h.values.push_back(2.0 - 3.0 * std::pow(t, 0.7));
        }
        const OrderFitResult fit = fit_order(h, 1e-6);
        check("order fit recovers alpha = 0.7", std::abs(fit.alpha_hat - 0.7) < 1e-6);
    }
    // rational continuation interpolates its samples
    {
        Trace s;
        for (int j = 1; j <= 40; ++j) {
            const double t = 0.5 * j / 40.0;
            s.times.push_back(t);
            s.values.push_back(1.0 / (1.0 + t));
        }
        const RationalApproximant r = aaa_fit(s, 1e-12, 20);
        check("aaa reproduces 1/(1+t)",
              std::abs(eval_rational(r, 0.8) - 1.0 / 1.8) < 1e-9);
    }
    std::printf("selftest: %s\n", failed == 0 ? "all ok" : "FAILURES");
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D time-fractional subdiffusion: forward solvers and the "
                 "two-stage inverse pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (RunConfig fields)");

    // shared cell selectors
    std::string case_id = "i";
    double alpha = 0.5, dalpha = 0.0;
    std::string out_path;

    auto* fwd = app.add_subcommand("forward", "solve the forward problem, write t,h CSV");
    int fwd_m = 200, fwd_n = 2000;
    bool fwd_spectral = false;
    fwd->add_option("--case", case_id, "case id: i or ii");
    fwd->add_option("--alpha", alpha, "fractional order in (0,1)");
    fwd->add_option("-m,--mesh", fwd_m, "spatial intervals");
    fwd->add_option("-n,--steps", fwd_n, "time steps");
    fwd->add_flag("--spectral", fwd_spectral, "use the spectral solver");
    fwd->add_option("-o,--out", out_path, "output CSV (default stdout)");

    auto* fit = app.add_subcommand("fit-order", "recover the order from small-time data");
    double fit_t0 = 1e-7;
    std::string fit_trace;
    fit->add_option("--case", case_id, "case id (generates data)");
    fit->add_option("--alpha", alpha, "true order for data generation");
    fit->add_option("--t0", fit_t0, "window upper end");
    fit->add_option("--trace", fit_trace, "fit an existing t,h CSV instead");

    auto* cont = app.add_subcommand("continue", "rational continuation of a trace");
    std::string cont_trace;
    double cont_tsplit = 0.5, cont_tol = 1e-9;
    int cont_maxdeg = 20;
    cont->add_option("--trace", cont_trace, "t,h CSV to fit")->required();
    cont->add_option("--t-split", cont_tsplit, "fit on [0, t_split]");
    cont->add_option("--tol", cont_tol, "relative fit tolerance");
    cont->add_option("--max-degree", cont_maxdeg, "degree cap");
    cont->add_option("-o,--out", out_path, "approximant JSON (default stdout)");

    auto* invq = app.add_subcommand("invert-q", "recover the potential for one cell");
    invq->add_option("--case", case_id, "case id: i or ii");
    invq->add_option("--alpha", alpha, "true order");
    invq->add_option("--dalpha", dalpha, "order perturbation used in inversion");
    invq->add_option("-o,--out", out_path, "output directory (default out/...)");

    auto* invu = app.add_subcommand("invert-u0", "recover the initial data for one cell");
    std::string qhat_path;
    invu->add_option("--case", case_id, "case id: i or ii");
    invu->add_option("--alpha", alpha, "true order");
    invu->add_option("--dalpha", dalpha, "order perturbation used in inversion");
    invu->add_option("--q-hat", qhat_path, "x,value CSV of the potential (default: recover it)");
    invu->add_option("-o,--out", out_path, "output directory (default out/...)");

    auto* rep = app.add_subcommand("reproduce", "run table/figure reproductions");
    std::vector<int> tables;
    bool figures = false;
    std::vector<std::string> rep_cases;
    rep->add_option("--table", tables, "tables to run: 1, 2, 3")
        ->check(CLI::IsMember({1, 2, 3}));
    rep->add_flag("--figures", figures, "emit figure CSV bundles");
    rep->add_option("--case", rep_cases, "restrict to cases (i, ii)");

    // RunConfig overrides (apply after --config)
    RunConfig defaults;
    int o_minv = -1, o_ninv = -1, o_mdata = -1, o_ndata = -1, o_maxit = -1, o_stall = -1;
    std::string o_outdir;
    int o_femdata = -1;
    for (CLI::App* sc : {fwd, fit, cont, invq, invu, rep}) {
        sc->add_option("--m-inverse", o_minv, "inversion mesh intervals");
        sc->add_option("--n-inverse", o_ninv, "inversion time steps");
        sc->add_option("--m-data", o_mdata, "data-generation mesh intervals");
        sc->add_option("--n-data", o_ndata, "data-generation time steps");
        sc->add_option("--max-iters", o_maxit, "CG iteration cap");
        sc->add_option("--stall-iters", o_stall, "stop after this many non-improving iters");
        sc->add_option("--fem-data", o_femdata, "1: fine-mesh FEM data, 0: spectral");
        sc->add_option("--out-dir", o_outdir, "output root directory");
    }

    auto* st = app.add_subcommand("selftest", "quick internal consistency checks");
    (void)st;

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (o_minv > 0) cfg.m_inverse = o_minv;
        if (o_ninv > 0) cfg.n_inverse = o_ninv;
        if (o_mdata > 0) cfg.m_data = o_mdata;
        if (o_ndata > 0) cfg.n_data = o_ndata;
        if (o_maxit > 0) cfg.cg.max_iters = o_maxit;
        if (o_stall >= 0) cfg.cg.stall_iters = o_stall;
        if (o_femdata >= 0) cfg.fem_data = o_femdata != 0;
        if (!o_outdir.empty()) cfg.out_dir = o_outdir;

        if (app.got_subcommand(st)) return run_selftest();

        if (app.got_subcommand(fwd)) {
            const CaseSpec cs = CaseSpec::by_id(case_id);
            Trace tr;
            if (fwd_spectral) {
                std::vector<double> times(fwd_n + 1);
                for (int j = 0; j <= fwd_n; ++j) times[j] = cs.t_final * j / fwd_n;
                tr = spectral_data(cs, alpha, times, cfg.k_modes, fwd_m * 5);
            } else {
                SpaceGrid grid{fwd_m};
                TimeGrid tg{cs.t_final, fwd_n};
                const FieldHistory u = solve_forward(cs.setup(grid, alpha), grid, tg);
                tr.times.resize(fwd_n + 1);
                tr.values.resize(fwd_n + 1);
                for (int j = 0; j <= fwd_n; ++j) {
                    tr.times[j] = tg.t(j);
                    tr.values[j] = u.step(j)[0];
                }
            }
            if (out_path.empty()) {
                write_trace_csv(tr, std::cout);
            } else {
                write_trace_csv(tr, out_path);
            }
            return 0;
        }

        if (app.got_subcommand(fit)) {
            Trace h;
            if (!fit_trace.empty()) {
                h = load_trace_csv(fit_trace);
            } else {
                const CaseSpec cs = CaseSpec::by_id(case_id);
                h = small_time_trace(cs, alpha, fit_t0, cfg.order_samples, cfg.k_modes);
            }
            const OrderFitResult res = fit_order(h, fit_t0);
            nlohmann::json j{{"alpha_hat", res.alpha_hat},
                             {"c0", res.c0},
                             {"c1", res.c1},
                             {"objective", res.objective},
                             {"t0", res.t0},
                             {"unidentifiable", res.unidentifiable}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (app.got_subcommand(cont)) {
            const Trace h = load_trace_csv(cont_trace);
            Trace fitpart;
            for (size_t j = 0; j < h.times.size(); ++j)
                if (h.times[j] <= cont_tsplit * (1.0 + 1e-12)) {
                    fitpart.times.push_back(h.times[j]);
                    fitpart.values.push_back(h.values[j]);
                }
            const RationalApproximant r = aaa_fit(fitpart, cont_tol, cont_maxdeg);
            const std::string body = approximant_to_json(r).dump(2) + "\n";
            if (out_path.empty()) {
                std::cout << body;
            } else {
                std::ofstream os(out_path);
                os << body;
            }
            return 0;
        }

        if (app.got_subcommand(invq) || app.got_subcommand(invu)) {
            const CaseSpec cs = CaseSpec::by_id(case_id);
            if (!out_path.empty()) cfg.out_dir = out_path;
            const GeneratedData data = generate_data(cs, alpha, cfg);
            const std::filesystem::path dir = detail::cell_dir(cfg, case_id, alpha);
            SpaceGrid grid{cfg.m_inverse};
            write_trace_csv(data.h, (dir / "trace.csv").string());
            std::vector<double> q_hat;
            if (app.got_subcommand(invu) && !qhat_path.empty()) {
                q_hat = read_reconstruction_csv(qhat_path, grid);
            } else {
                const CellResult qc = invert_q_cell(cs, alpha, dalpha, data, cfg);
                write_cell_report(dir, "q_hat", qc, cfg, grid);
                if (!qc.ok) {
                    std::cerr << "potential recovery failed: " << qc.error << "\n";
                    return 1;
                }
                q_hat = qc.report.estimate;
                std::printf("q: k*=%d e*=%.3e r*=%.3e\n", qc.report.k_star,
                            qc.report.e_star, qc.report.r_star);
            }
            if (app.got_subcommand(invu)) {
                const CellResult uc = invert_u0_cell(cs, alpha, dalpha, data, q_hat, cfg);
                write_cell_report(dir, "u0_hat", uc, cfg, grid);
                if (!uc.ok) {
                    std::cerr << "initial-data recovery failed: " << uc.error << "\n";
                    return 1;
                }
                std::printf("u0: k*=%d e*=%.3e r*=%.3e\n", uc.report.k_star,
                            uc.report.e_star, uc.report.r_star);
            }
            std::printf("outputs in %s\n", dir.string().c_str());
            return 0;
        }

        if (app.got_subcommand(rep)) {
            if (!rep_cases.empty()) cfg.cases = rep_cases;
            if (tables.empty() && !figures) tables = {1, 2, 3};
            int failures = 0;
            for (int t : tables) {
                if (t == 1) failures += run_table1(cfg);
                if (t == 2) failures += run_table2(cfg);
                if (t == 3) failures += run_table3(cfg);
            }
            if (figures) failures += run_figures(cfg);
            if (failures > 0) {
                std::cerr << failures << " cell(s) failed\n";
                return 1;
            }
            std::printf("all cells complete; outputs in %s\n", cfg.out_dir.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
