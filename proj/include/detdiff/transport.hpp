#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detdiff/transfer.hpp"

namespace detdiff {

struct grid_refusal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct tolerance_unreachable : std::runtime_error {
    double achieved;
    tolerance_unreachable(const std::string& what, double got)
        : std::runtime_error(what + " (achieved bound " + std::to_string(got) + ")"), achieved(got) {}
};

// l_k(u) = u (1 + |ln u|)^k, the continuity-modulus scale (natural log).
inline double modulus_ell(int k, double u) {
    if (!(u > 0)) throw std::domain_error("modulus_ell: u must be positive");
    return u * std::pow(1.0 + std::fabs(std::log(u)), k);
}

// J = b + (a-1) \int x h(x) dx with exact per-cell moments.
inline double drift(const MapParamsD& mp, const GridDensity& h) {
    if (!h.normalized) throw std::invalid_argument("drift: density not normalized");
    double m = 0;
    for (int i = 0; i < h.M; ++i) m += h.values[static_cast<size_t>(i)] * h.cell_mid(i);
    m /= h.M;
    return mp.b + (mp.a - 1.0) * m;
}

struct CorrelationSeries {
    std::vector<double> c;   // c_0 .. c_N
    double tail_bound = 0;   // bound on |sum_{n>N} c_n|
    double tail_ratio = 0;   // 2/a
    int truncation() const { return static_cast<int>(c.size()) - 1; }
};

enum class TransportMethod { grid, exact, montecarlo };

struct TransportResult {
    double J = 0;
    double D = 0;
    CorrelationSeries series;
    TransportMethod method = TransportMethod::grid;
    double error_estimate = 0;
};

// ---------------------------------------------------------------------------
// Exact piecewise-affine correlation engine. Valid at integer slope, where
// Lebesgue measure is invariant (h = 1) and psi_hat = (a-1)x. The state
// u_n = P^n(psi_hat) is mean zero, so the variation-contraction rate 2/a
// turns its computed variation into a rigorous tail bound:
//   sum_{n>N} |c_n| <= |psi_hat|_inf Var(u_N) / (a - 2).
template <class S>
class PwCorrelationEngine {
public:
    PwCorrelationEngine(MapParams<S> mp, PfOptions opt = {})
        : mp_(std::move(mp)), opt_(opt), u_(PiecewiseAffineFn<S>::identity()) {
        using T = scalar_traits<S>;
        psi_slope_ = mp_.a - T::from_int(1);
        u_ = PiecewiseAffineFn<S>::affine(psi_slope_, T::from_int(0));
        // c_0 = (a-1)^2 / 12
        c0_ = psi_slope_ * psi_slope_ / T::from_int(12);
    }

    const S& c0() const { return c0_; }

    // advance one step: u <- P u, returns c_n = \int u psi_hat
    S step() {
        u_ = apply_pf(mp_, u_, opt_);
        ++n_;
        return integrate_product(u_, PiecewiseAffineFn<S>::affine(psi_slope_, scalar_traits<S>::from_int(0)));
    }

    int n() const { return n_; }
    const PiecewiseAffineFn<S>& state() const { return u_; }

    double tail_bound() const {
        using T = scalar_traits<S>;
        double a = T::to_double(mp_.a);
        double psi_inf = T::to_double(psi_slope_) / 2.0;
        if (a <= 2.0) return std::numeric_limits<double>::infinity();
        return T::to_double(u_.total_variation()) * psi_inf / (a - 2.0);
    }

    // Detects exact self-similar decay u_{n} = lambda u_{n-1}; when it fires
    // the geometric tail sums in closed form (rational path only).
    std::optional<S> eigen_ratio(const PiecewiseAffineFn<S>& prev) const {
        static_assert(scalar_traits<S>::exact);
        if (prev.piece_count() != u_.piece_count()) return std::nullopt;
        if (prev.breakpoints() != u_.breakpoints()) return std::nullopt;
        std::optional<S> lambda;
        for (size_t i = 0; i < u_.piece_count(); ++i) {
            const auto &pn = u_.pieces()[i], &pp = prev.pieces()[i];
            // pn = lambda * pp componentwise
            for (auto [num, den] : {std::pair{pn.slope, pp.slope}, std::pair{pn.intercept, pp.intercept}}) {
                if (den == scalar_traits<S>::from_int(0)) {
                    if (num != scalar_traits<S>::from_int(0)) return std::nullopt;
                    continue;
                }
                S r = num / den;
                if (!lambda)
                    lambda = r;
                else if (*lambda != r)
                    return std::nullopt;
            }
        }
        if (!lambda || !(scalar_traits<S>::abs(*lambda) < scalar_traits<S>::from_int(1))) return std::nullopt;
        return lambda;
    }

private:
    MapParams<S> mp_;
    PfOptions opt_;
    PiecewiseAffineFn<S> u_;
    S psi_slope_{};
    S c0_{};
    int n_ = 0;
};

inline bool is_integer_slope(double a) { return std::fabs(a - std::round(a)) < 1e-12; }

// Green-Kubo diffusion at integer slope via the exact operator in doubles.
// Fast enough for dense bias scans; the rational engine certifies values.
inline TransportResult diffusion_exact_double(const MapParamsD& mp, double tail_tol = 1e-10,
                                              int max_terms = 20000) {
    if (!is_integer_slope(mp.a))
        throw std::invalid_argument("diffusion_exact_double: integer slope required");
    PwCorrelationEngine<double> eng(mp);
    TransportResult res;
    res.method = TransportMethod::exact;
    res.J = mp.b;
    res.series.tail_ratio = 2.0 / mp.a;
    res.series.c.push_back(eng.c0());
    double sum = 0.5 * eng.c0();
    while (true) {
        double cn = eng.step();
        res.series.c.push_back(cn);
        sum += cn;
        double tb = eng.tail_bound();
        if (tb < tail_tol) {
            res.series.tail_bound = tb;
            break;
        }
        if (eng.n() >= max_terms)
            throw tolerance_unreachable("diffusion_exact_double: tail tolerance unreachable", tb);
    }
    res.D = sum;
    res.error_estimate = res.series.tail_bound;
    return res;
}

// ---------------------------------------------------------------------------
// Grid (Ulam) path.

struct GridTransportOptions {
    int M = 1 << 16;
    double density_tol = 1e-12;
    double tail_tol = 1e-10;
    int max_terms = 400'000;
    int max_density_iterations = 400'000;
    bool richardson = true; // re-run at M/2 and report the difference
    const GridDensity* warm_start = nullptr;
};

namespace detail {

struct GridCorrState {
    double J = 0;
    double c0 = 0;
    double psi_inf = 0;
    std::vector<double> u; // cell averages of psi_hat * h
};

inline GridCorrState grid_corr_init(const MapParamsD& mp, const GridDensity& h) {
    GridCorrState st;
    st.J = drift(mp, h);
    const double slope = mp.a - 1.0, beta = mp.b - st.J;
    const double len = 1.0 / h.M;
    st.psi_inf = std::max(std::fabs(-0.5 * slope + beta), std::fabs(0.5 * slope + beta));
    st.u.resize(static_cast<size_t>(h.M));
    st.c0 = 0;
    for (int i = 0; i < h.M; ++i) {
        double pm = slope * h.cell_mid(i) + beta;
        st.u[static_cast<size_t>(i)] = pm * h.values[static_cast<size_t>(i)];
        st.c0 += h.values[static_cast<size_t>(i)] * (pm * pm + slope * slope * len * len / 12.0);
    }
    st.c0 /= h.M;
    return st;
}

} // namespace detail

// Correlation sum on a prepared matrix/density pair (the density is reusable
// as a warm start for neighboring parameters in scans).
inline TransportResult diffusion_grid_prepared(const MapParamsD& mp, const UlamMatrix& A,
                                               const GridDensity& h, const GridTransportOptions& opt) {
    auto st = detail::grid_corr_init(mp, h);
    TransportResult res;
    res.method = TransportMethod::grid;
    res.J = st.J;
    res.series.tail_ratio = 2.0 / mp.a;
    res.series.c.push_back(st.c0);
    double sum = 0.5 * st.c0;
    std::vector<double> w;
    const double slope = mp.a - 1.0, beta = mp.b - st.J;
    int n = 0;
    while (true) {
        A.apply(st.u, w);
        st.u.swap(w);
        ++n;
        double cn = 0;
        for (int i = 0; i < A.M; ++i)
            cn += st.u[static_cast<size_t>(i)] * (slope * (-0.5 + (i + 0.5) / A.M) + beta);
        cn /= A.M;
        res.series.c.push_back(cn);
        sum += cn;
        double tb = grid_variation(st.u) * st.psi_inf / (mp.a - 2.0);
        if (tb < opt.tail_tol) {
            res.series.tail_bound = tb;
            break;
        }
        if (n >= opt.max_terms)
            throw tolerance_unreachable("diffusion_grid: tail tolerance unreachable", tb);
    }
    res.D = sum;
    res.error_estimate = res.series.tail_bound;
    return res;
}

inline TransportResult diffusion_grid(const MapParamsD& mp, const GridTransportOptions& opt = {}) {
    if (mp.a <= 2.0 + 1e-3)
        throw grid_refusal("diffusion_grid: slope too close to 2 for a certifiable truncation");
    auto A = ulam_matrix(mp, opt.M);
    DensityOptions dopt;
    dopt.tol = opt.density_tol;
    dopt.max_iterations = opt.max_density_iterations;
    dopt.warm_start = opt.warm_start;
    auto dens = invariant_density(A, dopt);
    auto res = diffusion_grid_prepared(mp, A, dens.h, opt);
    if (opt.richardson && opt.M >= 64) {
        GridTransportOptions half = opt;
        half.M = opt.M / 2;
        half.richardson = false;
        half.warm_start = nullptr;
        TransportResult coarse = diffusion_grid(mp, half);
        res.error_estimate += std::fabs(res.D - coarse.D);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Oscillation statistics against the modulus scales.

struct ModulusReport {
    double width = 0;     // window diameter u
    double osc = 0;       // max over windows of (max - min)
    double ratio_l1 = 0;  // osc / l1(u)
    double ratio_l2 = 0;  // osc / l2(u)
};

// `values` sampled on a uniform grid with the given spacing; windows of each
// width slide by half a window.
inline std::vector<ModulusReport> continuity_scan(const std::vector<double>& values, double spacing,
                                                  const std::vector<double>& widths) {
    std::vector<ModulusReport> out;
    for (double u : widths) {
        size_t n_win = std::max<size_t>(2, static_cast<size_t>(std::llround(u / spacing)) + 1);
        if (n_win > values.size()) throw std::invalid_argument("continuity_scan: window wider than data");
        size_t stride = std::max<size_t>(1, (n_win - 1) / 2);
        double osc = 0;
        for (size_t s = 0; s + n_win <= values.size(); s += stride) {
            double lo = values[s], hi = values[s];
            for (size_t i = s + 1; i < s + n_win; ++i) {
                lo = std::min(lo, values[i]);
                hi = std::max(hi, values[i]);
            }
            osc = std::max(osc, hi - lo);
        }
        out.push_back({u, osc, osc / modulus_ell(1, u), osc / modulus_ell(2, u)});
    }
    return out;
}

} // namespace detdiff
