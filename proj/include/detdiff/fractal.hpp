#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace detdiff {

// A function graph sampled on a uniform parameter grid.
struct GraphSample {
    std::vector<double> param;
    std::vector<double> value;
    std::string axis_label = "param";

    void validate() const {
        if (param.size() < 2 || param.size() != value.size())
            throw std::invalid_argument("GraphSample: need >= 2 aligned samples");
        double d0 = param[1] - param[0];
        for (size_t i = 0; i + 1 < param.size(); ++i) {
            double d = param[i + 1] - param[i];
            if (!(d > 0) || std::fabs(d - d0) > 1e-12 * std::max(1.0, std::fabs(d0)))
                throw std::invalid_argument("GraphSample: grid not uniform");
        }
    }
    double spacing() const { return (param.back() - param.front()) / (param.size() - 1); }
    double range() const { return param.back() - param.front(); }
};

// Column-based box count: the parameter axis is cut into width-eps columns
// anchored at param.front(); the y boxes are anchored at 0. A sample sitting
// exactly on a column boundary counts toward both neighbors.
inline uint64_t box_count(const GraphSample& g, double eps) {
    if (!(eps > 0)) throw std::domain_error("box_count: eps must be positive");
    const double x0 = g.param.front();
    const double range = g.range();
    const size_t ncol = static_cast<size_t>(std::ceil(range / eps - 1e-12));
    std::vector<double> cmin(ncol, std::numeric_limits<double>::infinity());
    std::vector<double> cmax(ncol, -std::numeric_limits<double>::infinity());
    auto feed = [&](size_t k, double y) {
        cmin[k] = std::min(cmin[k], y);
        cmax[k] = std::max(cmax[k], y);
    };
    for (size_t i = 0; i < g.param.size(); ++i) {
        double y = g.value[i];
        if (!std::isfinite(y)) continue;
        double u = (g.param[i] - x0) / eps;
        double k = std::floor(u);
        size_t ki = std::min(static_cast<size_t>(std::max(0.0, k)), ncol - 1);
        feed(ki, y);
        // samples on a shared column boundary count toward both neighbors
        if (ki > 0 && u - static_cast<double>(ki) <= 1e-12) feed(ki - 1, y);
        if (ki + 1 < ncol && (static_cast<double>(ki) + 1.0) - u <= 1e-12) feed(ki + 1, y);
    }
    uint64_t n = 0;
    for (size_t k = 0; k < ncol; ++k) {
        if (!(cmin[k] <= cmax[k])) continue; // empty column
        int64_t jlo = static_cast<int64_t>(std::floor(cmin[k] / eps));
        int64_t jhi = static_cast<int64_t>(std::floor(cmax[k] / eps));
        n += static_cast<uint64_t>(jhi - jlo + 1);
    }
    return n;
}

struct BoxCountCurve {
    std::vector<double> eps;       // decreasing
    std::vector<uint64_t> N;
    double eps_cut = 0;            // resolution limit: spacing * 1e3
    std::vector<bool> resolved;    // eps >= eps_cut
};

// Geometric schedule, ratio 1/2, from range/4 down to the resolution cutoff.
// `cut_factor` sets where box counting stops resolving the graph and starts
// resolving isolated samples; 1000 spacings is conservative, ~167 matches the
// empirically observed bend-off for 1e6-point graphs.
inline BoxCountCurve box_count_curve(const GraphSample& g, std::vector<double> schedule = {},
                                     double cut_factor = 1e3) {
    g.validate();
    BoxCountCurve out;
    out.eps_cut = g.spacing() * cut_factor;
    if (schedule.empty())
        for (double e = g.range() / 4; e >= out.eps_cut; e /= 2) schedule.push_back(e);
    if (schedule.empty()) schedule.push_back(g.range() / 4);
    for (double e : schedule) {
        out.eps.push_back(e);
        out.N.push_back(box_count(g, e));
        out.resolved.push_back(e >= out.eps_cut);
    }
    return out;
}

enum class FitModel { power, log_corrected };

struct FitResult {
    FitModel model = FitModel::power;
    double B = 0;                    // power law N ~ eps^-B
    double K5 = 0, K6 = 0, alpha = 0; // N = K5 eps^-1 (1 + K6 ln eps)^alpha
    double residual = 0;             // rms of the fit variable
    double fit_lo = 0, fit_hi = 0;   // -ln eps window actually used
    int iterations = 0;
    bool converged = false;
    double seed_spread = 0;          // max relative parameter spread across seeds
    int points = 0;
};

namespace detail {

struct FitData {
    std::vector<double> t;  // -ln eps
    std::vector<double> y;  // ln(N eps)
};

inline FitData fit_window(const BoxCountCurve& c, double lo, double hi) {
    FitData d;
    for (size_t i = 0; i < c.eps.size(); ++i) {
        double t = -std::log(c.eps[i]);
        if (t < lo || t > hi) continue;
        if (!c.resolved[i]) continue; // never fit beyond the resolution cutoff
        d.t.push_back(t);
        d.y.push_back(std::log(static_cast<double>(c.N[i]) * c.eps[i]));
    }
    return d;
}

// solve the 3x3 system A x = b in place (partial pivoting)
inline bool solve3(std::array<std::array<double, 3>, 3>& A, std::array<double, 3>& b,
                   std::array<double, 3>& x) {
    std::array<int, 3> idx{0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(A[idx[r]][col]) > std::fabs(A[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        if (std::fabs(A[idx[col]][col]) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            double f = A[idx[r]][col] / A[idx[col]][col];
            for (int cc = col; cc < 3; ++cc) A[idx[r]][cc] -= f * A[idx[col]][cc];
            b[idx[r]] -= f * b[idx[col]];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[idx[r]];
        for (int cc = r + 1; cc < 3; ++cc) s -= A[idx[r]][cc] * x[cc];
        x[r] = s / A[idx[r]][r];
    }
    return true;
}

} // namespace detail

// Straight least squares on (ln eps, ln N); B = -slope.
inline FitResult fit_power_law(const BoxCountCurve& c, double lo, double hi) {
    auto d = detail::fit_window(c, lo, hi);
    FitResult r;
    r.model = FitModel::power;
    r.points = static_cast<int>(d.t.size());
    if (d.t.size() < 3) throw std::invalid_argument("fit_power_law: need >= 3 points in range");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(d.t.size());
    for (int i = 0; i < n; ++i) {
        double x = -d.t[i];      // ln eps
        double y = d.y[i] - x;   // ln N = ln(N eps) - ln eps
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-300) throw std::invalid_argument("fit_power_law: degenerate range");
    double slope = (n * sxy - sx * sy) / denom;
    r.B = -slope;
    double icept = (sy - slope * sx) / n;
    double ss = 0;
    for (int i = 0; i < n; ++i) {
        double x = -d.t[i], y = d.y[i] - x;
        double e = y - (slope * x + icept);
        ss += e * e;
    }
    r.residual = std::sqrt(ss / n);
    r.fit_lo = lo;
    r.fit_hi = hi;
    r.converged = true;
    return r;
}

// Damped Gauss-Newton (Levenberg-Marquardt schedule) for
//   ln(N eps) = ln K5 + alpha ln(1 - K6 t),  t = -ln eps.
// Refits from each seed and reports the parameter spread across converged fits.
inline FitResult fit_log_corrected(const BoxCountCurve& c, double lo, double hi,
                                   std::vector<std::array<double, 3>> seeds = {}) {
    auto d = detail::fit_window(c, lo, hi);
    if (d.t.size() < 6) throw std::invalid_argument("fit_log_corrected: need >= 6 points in range");
    if (seeds.empty()) seeds = {{1.0, -1.0, 1.0}, {2.0, -0.5, 1.5}, {0.5, -2.0, 0.8}};
    const int n = static_cast<int>(d.t.size());

    auto cost_of = [&](const std::array<double, 3>& th) {
        // th = {ln K5, K6, alpha}
        double ss = 0;
        for (int i = 0; i < n; ++i) {
            double arg = 1.0 - th[1] * d.t[i];
            if (arg <= 1e-12) return std::numeric_limits<double>::infinity();
            double r = d.y[i] - (th[0] + th[2] * std::log(arg));
            ss += r * r;
        }
        return ss;
    };

    FitResult best;
    best.model = FitModel::log_corrected;
    best.points = n;
    best.fit_lo = lo;
    best.fit_hi = hi;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::array<double, 3>> winners;

    for (auto seed : seeds) {
        std::array<double, 3> th{std::log(std::max(seed[0], 1e-12)), seed[1], seed[2]};
        double cost = cost_of(th);
        double lambda = 1e-3;
        int it = 0;
        bool conv = false;
        int plateau = 0;
        for (; it < 400; ++it) {
            std::array<std::array<double, 3>, 3> JtJ{};
            std::array<double, 3> Jtr{};
            for (int i = 0; i < n; ++i) {
                double arg = 1.0 - th[1] * d.t[i];
                if (arg <= 1e-12) { arg = 1e-12; }
                double r = d.y[i] - (th[0] + th[2] * std::log(arg));
                // dr/dtheta
                std::array<double, 3> g{-1.0, th[2] * d.t[i] / arg, -std::log(arg)};
                for (int p = 0; p < 3; ++p) {
                    Jtr[p] += g[p] * r;
                    for (int q = 0; q < 3; ++q) JtJ[p][q] += g[p] * g[q];
                }
            }
            double gnorm = std::max({std::fabs(Jtr[0]), std::fabs(Jtr[1]), std::fabs(Jtr[2])});
            if (gnorm < 1e-10 * (1.0 + cost)) { conv = true; break; }
            auto A = JtJ;
            for (int p = 0; p < 3; ++p) A[p][p] += lambda * (JtJ[p][p] + 1e-12);
            std::array<double, 3> rhs{-Jtr[0], -Jtr[1], -Jtr[2]}, step{};
            if (!detail::solve3(A, rhs, step)) { lambda *= 10; continue; }
            std::array<double, 3> cand{th[0] + step[0], th[1] + step[1], th[2] + step[2]};
            double cc = cost_of(cand);
            if (cc < cost) {
                // cost plateau counts as convergence: the log-corrected model
                // has a flat valley (large |K6|, small alpha) along which the
                // gradient never quite vanishes
                if (cost - cc <= 1e-7 * (1.0 + cost)) {
                    if (++plateau >= 3) {
                        th = cand;
                        cost = cc;
                        conv = true;
                        break;
                    }
                } else {
                    plateau = 0;
                }
                th = cand;
                cost = cc;
                lambda = std::max(lambda / 3, 1e-12);
            } else {
                lambda *= 10;
                if (lambda > 1e12) {
                    conv = plateau > 0;
                    break;
                }
            }
        }
        if (conv) winners.push_back(th);
        if (cost < best_cost) {
            best_cost = cost;
            best.K5 = std::exp(th[0]);
            best.K6 = th[1];
            best.alpha = th[2];
            best.iterations = it;
            best.converged = conv;
            best.residual = std::sqrt(cost / n);
        }
    }
    if (winners.size() >= 2) {
        double spread = 0;
        for (size_t i = 1; i < winners.size(); ++i)
            for (int p = 0; p < 3; ++p) {
                double ref = std::max(1e-9, std::fabs(winners[0][p]));
                spread = std::max(spread, std::fabs(winners[i][p] - winners[0][p]) / ref);
            }
        best.seed_spread = spread;
    }
    return best;
}

struct LocalDimRow {
    double center = 0;
    FitResult power;
    FitResult log_corrected;
    double B_running = 0; // 3-neighbor running average, filled by the scan
};

// Both fits on consecutive windows of the given width.
inline std::vector<LocalDimRow> local_dimension_scan(const GraphSample& g, double window_width,
                                                     size_t min_samples = 1000) {
    g.validate();
    const double spacing = g.spacing();
    const size_t win = static_cast<size_t>(std::llround(window_width / spacing)) + 1;
    if (win < min_samples)
        throw std::invalid_argument("local_dimension_scan: window holds too few samples");
    std::vector<LocalDimRow> rows;
    for (size_t s = 0; s + win <= g.param.size(); s += win) {
        GraphSample w;
        w.param.assign(g.param.begin() + s, g.param.begin() + s + win);
        w.value.assign(g.value.begin() + s, g.value.begin() + s + win);
        auto curve = box_count_curve(w);
        LocalDimRow row;
        row.center = 0.5 * (w.param.front() + w.param.back());
        double lo = -std::log(w.range() / 4) - 1e-9, hi = -std::log(curve.eps_cut) + 1e-9;
        row.power = fit_power_law(curve, lo, hi);
        try {
            row.log_corrected = fit_log_corrected(curve, lo, hi);
        } catch (const std::invalid_argument&) {
            row.log_corrected.converged = false;
        }
        rows.push_back(row);
    }
    for (size_t i = 0; i < rows.size(); ++i) {
        double s = rows[i].power.B;
        int cnt = 1;
        if (i > 0) { s += rows[i - 1].power.B; ++cnt; }
        if (i + 1 < rows.size()) { s += rows[i + 1].power.B; ++cnt; }
        rows[i].B_running = s / cnt;
    }
    return rows;
}

} // namespace detdiff
