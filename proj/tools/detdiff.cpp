// detdiff: transport coefficients of piecewise-linear mod-1 interval maps.
//
// Subcommands
//   scan      J or D over a parameter range (grid / exact / Monte Carlo)
//   boxcount  box-counting curve and fits for a sampled graph
//   localdim  windowed box-dimension scan
//   diffquot  exact difference quotients of D_a(b) with slope fit
//   ensemble  scaled D-difference ensemble, QQ data and normality report
//   simulate  Monte Carlo transport estimate
//   verify    acceptance suite
//
// Exit codes: 0 ok, 1 usage error, 2 numerical refusal (partial output
// written), 3 acceptance failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "detdiff/acceptance.hpp"
#include "detdiff/exact.hpp"
#include "detdiff/fractal.hpp"
#include "detdiff/io.hpp"
#include "detdiff/parallel.hpp"
#include "detdiff/scan.hpp"
#include "detdiff/stats.hpp"
#include "detdiff/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detdiff;

namespace {

struct Common {
    uint64_t seed = 1;
    int threads = default_threads();
    unsigned digits = 30;
    std::string out;
    bool quick = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--threads", c.threads, "worker threads");
    cmd->add_option("--digits", c.digits, "decimal digits for exact values");
    cmd->add_option("--out", c.out, "output path");
    cmd->add_flag("--quick", c.quick, "reduced-size run");
}

std::string canonical_config(const CLI::App& app) {
    std::string s = app.get_name();
    for (const CLI::App* sub : app.get_subcommands()) s += " " + sub->get_name();
    s += "\n";
    s += app.config_to_str(true, false);
    return s;
}

int scan_cmd(const CLI::App& app, const Common& c, ScanConfig cfg, std::string quantity,
             std::string backend) {
    cfg.quantity = quantity == "J" ? ScanQuantity::J : ScanQuantity::D;
    if (backend == "grid") cfg.backend = ScanBackend::grid;
    else if (backend == "exact") cfg.backend = ScanBackend::exact;
    else cfg.backend = ScanBackend::montecarlo;
    cfg.threads = c.threads;
    cfg.seed = c.seed;

    const std::string out = c.out.empty() ? "scan.csv" : c.out;
    const std::string cfg_hash = canonical_config(app);

    // chunk files make long scans resumable: complete chunks are reloaded
    auto chunk_path = [&](long idx) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ".chunk%05ld", idx);
        return out + buf;
    };
    const long nchunks = (cfg.n_points + cfg.chunk - 1) / cfg.chunk;
    long refused = 0;
    {
        CsvWriter w(out + ".part");
        w.stamp(cfg_hash);
        w.meta("points", std::to_string(cfg.n_points));
        w.header({"param", quantity == "J" ? "J" : "D", "error"});
        for (long ci = 0; ci < nchunks; ++ci) {
            const long first = ci * cfg.chunk, last = std::min(cfg.n_points, first + cfg.chunk);
            std::vector<std::string> rows;
            std::ifstream in(chunk_path(ci));
            if (in) {
                std::string line;
                while (std::getline(in, line))
                    if (!line.empty()) rows.push_back(line);
            }
            if (static_cast<long>(rows.size()) != last - first) {
                rows.clear();
                auto ch = scan_chunk(cfg, first, last);
                std::ofstream cf(chunk_path(ci), std::ios::binary);
                for (size_t i = 0; i < ch.param.size(); ++i) {
                    std::string row = fmt_double(ch.param[i]) + "," + fmt_double(ch.value[i]) +
                                      "," + fmt_double(ch.error[i]);
                    cf << row << "\n";
                    rows.push_back(row);
                }
            }
            for (auto& r : rows) {
                w.raw_row({r});
                if (r.find("nan") != std::string::npos) ++refused;
            }
            w.flush();
            std::fprintf(stderr, "\rscan: chunk %ld/%ld", ci + 1, nchunks);
        }
        std::fprintf(stderr, "\n");
    }
    fs::rename(out + ".part", out);
    for (long ci = 0; ci < nchunks; ++ci) fs::remove(chunk_path(ci));
    if (refused > 0) {
        std::fprintf(stderr, "scan: %ld point(s) refused by backend (rows kept as nan)\n", refused);
        return 2;
    }
    return 0;
}

json fit_to_json(const FitResult& f) {
    json j;
    j["model"] = f.model == FitModel::power ? "power" : "log_corrected";
    if (f.model == FitModel::power) {
        j["B"] = f.B;
    } else {
        j["K5"] = f.K5;
        j["K6"] = f.K6;
        j["alpha"] = f.alpha;
        j["seed_spread"] = f.seed_spread;
    }
    j["residual"] = f.residual;
    j["range"] = {f.fit_lo, f.fit_hi};
    j["points"] = f.points;
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    return j;
}

int boxcount_cmd(const CLI::App& app, const Common& c, const std::string& in, double eps_max,
                 double cut_factor, double fit_lo, double fit_hi) {
    auto g = read_graph_csv(in);
    std::vector<double> schedule;
    double e0 = eps_max > 0 ? eps_max : g.range() / 4;
    for (double e = e0; e >= g.spacing() * cut_factor; e /= 2) schedule.push_back(e);
    auto curve = box_count_curve(g, schedule, cut_factor);

    const std::string out = c.out.empty() ? "boxcount.csv" : c.out;
    {
        CsvWriter w(out);
        w.stamp(canonical_config(app));
        w.meta("input", in);
        w.meta("eps_cut", fmt_double(curve.eps_cut));
        w.header({"epsilon", "N", "N_times_eps"});
        for (size_t i = 0; i < curve.eps.size(); ++i)
            w.row({curve.eps[i], static_cast<double>(curve.N[i]),
                   static_cast<double>(curve.N[i]) * curve.eps[i]});
    }
    json fits;
    fits["power"] = fit_to_json(fit_power_law(curve, fit_lo, fit_hi));
    fits["log_corrected"] = fit_to_json(fit_log_corrected(curve, fit_lo, fit_hi));
    fits["eps_cut"] = curve.eps_cut;
    std::ofstream(out + ".fits.json") << fits.dump(2) << "\n";
    std::printf("%s\n", fits.dump(2).c_str());
    return 0;
}

int localdim_cmd(const CLI::App& app, const Common& c, const std::string& in, double window,
                 size_t min_samples) {
    auto g = read_graph_csv(in);
    auto rows = local_dimension_scan(g, window, min_samples);
    const std::string out = c.out.empty() ? "localdim.csv" : c.out;
    CsvWriter w(out);
    w.stamp(canonical_config(app));
    w.header({"center", "B", "B_running_avg", "K5", "K6", "alpha", "log_converged"});
    for (auto& r : rows)
        w.row({r.center, r.power.B, r.B_running, r.log_corrected.K5, r.log_corrected.K6,
               r.log_corrected.alpha, r.log_corrected.converged ? 1.0 : 0.0});
    return 0;
}

int diffquot_cmd(const CLI::App& app, const Common& c, long a, const std::string& b_str,
                 const std::string& db_max_str, const std::string& db_min_str,
                 const std::string& ratio_str, double tol) {
    const Rational b = Rational::parse(b_str);
    const Rational db_max = Rational::parse(db_max_str);
    const double db_min = std::fabs(Rational::parse(db_min_str).to_double());
    const Rational ratio = ratio_str == "a" ? Rational(a) : Rational::parse(ratio_str);
    if (!(abs(ratio) > Rational(1))) throw CLI::ValidationError("--ratio must exceed 1");

    const std::string out = c.out.empty() ? "diffquot.csv" : c.out;
    CsvWriter w(out);
    w.stamp(canonical_config(app));
    w.header({"ln_db", "quotient", "quotient_double", "N_delta", "N_used", "tail_bound"});

    std::vector<double> xs, ys;
    Rational db = db_max;
    while (std::fabs(db.to_double()) >= db_min * (1 - 1e-9)) {
        auto q = diff_quotient(a, b, db, {tol, 20, 200000, 2000000});
        double lx = std::log(std::fabs(db.to_double()));
        w.raw_row({fmt_double(lx), q.quotient.to_decimal(c.digits), fmt_double(q.quotient.to_double()),
                   std::to_string(q.N_delta), std::to_string(q.N_used), fmt_double(q.tail_bound)});
        xs.push_back(lx);
        ys.push_back(q.quotient.to_double());
        db = db / ratio;
    }
    const int n = static_cast<int>(xs.size());
    if (n < 2) throw CLI::ValidationError("diffquot: schedule produced fewer than 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    json j;
    j["a"] = a;
    j["b"] = b_str;
    j["points"] = n;
    j["fitted_slope"] = slope;
    auto rep = predict_log_coefficient(a, b);
    j["prediction_case"] = static_cast<int>(rep.kind);
    j["has_prediction"] = rep.has_value;
    if (rep.has_value) {
        j["predicted_C"] = rep.C;
        j["predicted_slope"] = -rep.C;
        if (rep.C != 0)
            j["relative_error"] = std::fabs(slope + rep.C) / std::fabs(rep.C);
    }
    std::ofstream(out + ".fit.json") << j.dump(2) << "\n";
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int ensemble_cmd(const CLI::App& app, const Common& c, long a, const std::string& db_str, int n,
                 const std::string& b_lo, const std::string& b_hi) {
    EnsembleSpec spec;
    spec.a = a;
    spec.db = Rational::parse(db_str);
    spec.n_samples = c.quick ? std::min(n, 120) : n;
    spec.b_lo = Rational::parse(b_lo);
    spec.b_hi = Rational::parse(b_hi);
    spec.seed = c.seed;
    auto samples = scaled_difference_ensemble(spec);

    std::vector<double> for_sw = samples;
    bool subsampled = false;
    if (for_sw.size() > 5000) {
        for_sw.resize(5000);
        subsampled = true;
        std::fprintf(stderr, "ensemble: Shapiro-Wilk limited to the first 5000 samples\n");
    }
    auto rep = shapiro_wilk(for_sw);
    rep.subsampled = subsampled;
    auto qq = qq_quantiles(samples);

    const std::string out = c.out.empty() ? "ensemble.csv" : c.out;
    {
        CsvWriter w(out);
        w.stamp(canonical_config(app));
        w.header({"theoretical", "sample"});
        for (size_t i = 0; i < qq.sample.size(); ++i) w.row({qq.theoretical[i], qq.sample[i]});
    }
    json j;
    j["a"] = a;
    j["db"] = db_str;
    j["n"] = spec.n_samples;
    j["seed"] = spec.seed;
    j["b_range"] = {b_lo, b_hi};
    j["mean"] = rep.mean;
    j["sd"] = rep.sd;
    j["W"] = rep.W;
    j["p_value"] = rep.p_value;
    j["subsampled"] = rep.subsampled;
    j["qq_line"] = {{"slope", qq.line_slope}, {"intercept", qq.line_intercept}};
    std::ofstream(out + ".report.json") << j.dump(2) << "\n";
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int simulate_cmd(const CLI::App& app, const Common& c, double a, double b, long steps, int walkers,
                 int burn_in, const std::string& walker_csv) {
    SimConfig cfg{MapParamsD(a, b), c.quick ? std::min(steps, 2000L) : steps,
                  c.quick ? std::min(walkers, 2000) : walkers, c.seed, burn_in};
    std::vector<double> S(static_cast<size_t>(cfg.n_walkers));
    parallel_for(S.size(), c.threads, [&](size_t w) {
        S[w] = walker_displacement(cfg, static_cast<int>(w));
    });
    auto est = mc_reduce(cfg, S);
    if (!walker_csv.empty()) {
        CsvWriter w(walker_csv);
        w.stamp(canonical_config(app));
        w.header({"walker", "S_n"});
        for (size_t i = 0; i < S.size(); ++i) w.row({static_cast<double>(i), S[i]});
    }
    json j;
    j["a"] = a;
    j["b"] = b;
    j["steps"] = est.n_steps;
    j["walkers"] = est.n_walkers;
    j["burn_in"] = cfg.burn_in;
    j["seed"] = cfg.seed;
    j["J"] = est.J;
    j["se_J"] = est.se_J;
    j["D"] = est.D;
    j["se_D"] = est.se_D;
    const std::string out = c.out.empty() ? "simulate.json" : c.out;
    std::ofstream(out) << j.dump(2) << "\n";
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int verify_cmd(const Common& c, const std::string& workdir) {
    AcceptanceOptions opt;
    opt.quick = c.quick;
    opt.threads = c.threads;
    opt.workdir = workdir;
    bool all = true;
    run_acceptance(opt, [&](const CriterionResult& r) {
        std::printf("[%s] %2d. %s\n        %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        all = all && r.pass;
    });
    std::printf("%s\n", all ? "ALL CRITERIA PASSED" : "ACCEPTANCE FAILURES PRESENT");
    return all ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transport coefficients of piecewise-linear mod-1 maps"};
    app.set_config("--config", "", "declarative config file (flags override)");
    app.set_version_flag("--version", std::string("detdiff ") + kVersion);
    app.require_subcommand(1);

    Common common;

    // scan
    auto* scan = app.add_subcommand("scan", "scan J or D over a parameter range");
    ScanConfig scfg;
    std::string axis = "a", quantity = "D", backend = "grid";
    scan->add_option("--axis", axis, "scan axis: a or b")->check(CLI::IsMember({"a", "b"}));
    scan->add_option("--min", scfg.lo, "range start")->required();
    scan->add_option("--max", scfg.hi, "range end")->required();
    scan->add_option("-n,--points", scfg.n_points, "number of points")->required();
    scan->add_option("--fixed", scfg.fixed, "value of the other parameter");
    scan->add_option("--quantity", quantity, "J or D")->check(CLI::IsMember({"J", "D"}));
    scan->add_option("--backend", backend, "grid | exact | mc")
        ->check(CLI::IsMember({"grid", "exact", "mc"}));
    scan->add_option("-M,--cells", scfg.M, "Ulam cells (grid backend)");
    scan->add_option("--density-tol", scfg.density_tol, "invariant-density L1 tolerance");
    scan->add_option("--tail-tol", scfg.tail_tol, "correlation tail tolerance");
    scan->add_flag("--richardson", scfg.richardson, "add two-resolution error estimate");
    scan->add_option("--mc-steps", scfg.mc_steps, "steps per walker (mc backend)");
    scan->add_option("--mc-walkers", scfg.mc_walkers, "walkers (mc backend)");
    scan->add_option("--chunk", scfg.chunk, "points per resumable chunk");
    add_common(scan, common);

    // boxcount
    auto* boxc = app.add_subcommand("boxcount", "box-count a graph CSV and fit both models");
    std::string bc_in;
    double bc_eps_max = 0, bc_cut = 1000, bc_fit_lo = 0.5, bc_fit_hi = 6.0;
    boxc->add_option("--in", bc_in, "input CSV (param,value)")->required();
    boxc->add_option("--eps-max", bc_eps_max, "largest box size (default range/4)");
    boxc->add_option("--cut-factor", bc_cut, "resolution cutoff in grid spacings");
    boxc->add_option("--fit-lo", bc_fit_lo, "fit window lower -ln(eps)");
    boxc->add_option("--fit-hi", bc_fit_hi, "fit window upper -ln(eps)");
    add_common(boxc, common);

    // localdim
    auto* ld = app.add_subcommand("localdim", "windowed box-dimension scan");
    std::string ld_in;
    double ld_window = 0.06;
    size_t ld_min_samples = 1000;
    ld->add_option("--in", ld_in, "input CSV (param,value)")->required();
    ld->add_option("--window", ld_window, "window width in parameter units");
    ld->add_option("--min-samples", ld_min_samples, "minimum samples per window");
    add_common(ld, common);

    // diffquot
    auto* dq = app.add_subcommand("diffquot", "exact difference quotients of D_a(b)");
    long dq_a = 3;
    std::string dq_b = "0", dq_db_max = "1e-10", dq_db_min = "1e-40", dq_ratio = "a";
    double dq_tol = 1e-6;
    dq->add_option("--a", dq_a, "integer slope")->required();
    dq->add_option("--b", dq_b, "bias (exact: p/q or decimal)");
    dq->add_option("--db-max", dq_db_max, "largest increment");
    dq->add_option("--db-min", dq_db_min, "smallest increment");
    dq->add_option("--ratio", dq_ratio, "schedule divisor ('a' = commensurate)");
    dq->add_option("--tol", dq_tol, "tail target relative to db");
    add_common(dq, common);

    // ensemble
    auto* en = app.add_subcommand("ensemble", "scaled D-difference ensemble and normality report");
    long en_a = 4;
    std::string en_db = "1e-30", en_blo = "0", en_bhi = "1/2";
    int en_n = 500;
    en->add_option("--a", en_a, "integer slope");
    en->add_option("--db", en_db, "bias increment (exact)");
    en->add_option("-n,--samples", en_n, "ensemble size");
    en->add_option("--b-lo", en_blo, "bias range start");
    en->add_option("--b-hi", en_bhi, "bias range end");
    add_common(en, common);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo transport estimate");
    double sim_a = 3.0, sim_b = 0.0;
    long sim_steps = 10000;
    int sim_walkers = 10000, sim_burn = 200;
    std::string sim_walker_csv;
    sim->add_option("--a", sim_a, "slope")->required();
    sim->add_option("--b", sim_b, "bias");
    sim->add_option("--steps", sim_steps, "steps per walker");
    sim->add_option("--walkers", sim_walkers, "number of walkers");
    sim->add_option("--burn-in", sim_burn, "burn-in steps");
    sim->add_option("--walker-csv", sim_walker_csv, "optional per-walker S_n CSV");
    add_common(sim, common);

    // verify
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    std::string ver_workdir = "acceptance_work";
    ver->add_option("--workdir", ver_workdir, "cache directory for scans");
    add_common(ver, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*scan) {
            scfg.axis = axis[0];
            return scan_cmd(app, common, scfg, quantity, backend);
        }
        if (*boxc) return boxcount_cmd(app, common, bc_in, bc_eps_max, bc_cut, bc_fit_lo, bc_fit_hi);
        if (*ld) return localdim_cmd(app, common, ld_in, ld_window, ld_min_samples);
        if (*dq) return diffquot_cmd(app, common, dq_a, dq_b, dq_db_max, dq_db_min, dq_ratio, dq_tol);
        if (*en) return ensemble_cmd(app, common, en_a, en_db, en_n, en_blo, en_bhi);
        if (*sim)
            return simulate_cmd(app, common, sim_a, sim_b, sim_steps, sim_walkers, sim_burn,
                                sim_walker_csv);
        if (*ver) return verify_cmd(common, ver_workdir);
    } catch (const grid_refusal& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return 2;
    } catch (const tolerance_unreachable& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return 2;
    } catch (const convergence_error& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
