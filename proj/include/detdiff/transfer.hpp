#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "detdiff/map.hpp"
#include "detdiff/piecewise.hpp"

namespace detdiff {

struct convergence_error : std::runtime_error {
    double residual;
    convergence_error(const std::string& what, double res)
        : std::runtime_error(what + " (last residual " + std::to_string(res) + ")"), residual(res) {}
};

struct PfOptions {
    size_t piece_cap = 1'000'000;
};

// Exact transfer operator on piecewise-affine functions:
//   (Pf)(x) = (1/a) * sum over valid preimage sheets y_k(x) = (x + k - b)/a.
// Sheets for the interior branches are valid on all of I; the two end sheets
// switch on/off at the images of -1/2 and +1/2.
template <class S>
PiecewiseAffineFn<S> apply_pf(const MapParams<S>& mp, const PiecewiseAffineFn<S>& f,
                              const PfOptions& opt = {}) {
    using T = scalar_traits<S>;
    const S half = T::ratio(1, 2);
    auto bs = branch_set(mp);

    const S t_left = eval_map(mp, -half);              // sheet -p valid for x >= t_left
    S t_right = mp.a * half + mp.b - T::from_int(bs.q); // sheet q valid for x < t_right; T(1/2^-) limit

    std::vector<S> cand{-half, half};
    if (t_left > -half && t_left < half) cand.push_back(t_left);
    if (t_right > -half && t_right < half) cand.push_back(t_right);
    // images of f's breakpoints through the branch containing them
    for (const S& y : f.breakpoints()) {
        if (!(y > -half && y < half)) continue;
        // branch index k with A_k <= y < B_k:  k = floor(a*y + b + 1/2)
        long k = T::floor_i64(mp.a * y + mp.b + half);
        S x = mp.a * y + mp.b - T::from_int(k);
        if (x > -half && x < half) cand.push_back(x);
    }
    std::sort(cand.begin(), cand.end());
    if constexpr (T::exact) {
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    } else {
        std::vector<S> dedup{cand.front()};
        for (const S& x : cand)
            if (x - dedup.back() > T::merge_tol()) dedup.push_back(x);
        dedup.back() = half;
        cand = std::move(dedup);
    }
    if (cand.size() - 1 > opt.piece_cap) throw piece_overflow(cand.size() - 1);

    std::vector<typename PiecewiseAffineFn<S>::Piece> ps;
    ps.reserve(cand.size() - 1);
    const S inv_a = T::from_int(1) / mp.a;
    for (size_t i = 0; i + 1 < cand.size(); ++i) {
        S mid = (cand[i] + cand[i + 1]) / T::from_int(2);
        S slope = T::from_int(0), intercept = T::from_int(0);
        for (long k = -bs.p; k <= bs.q; ++k) {
            if (k == -bs.p && !(mid >= t_left)) continue;
            if (k == bs.q && !(mid < t_right)) continue;
            S y = (mid + T::from_int(k) - mp.b) * inv_a;
            auto pf = f.pieces()[f.piece_index(y)];
            // (1/a) f((x + k - b)/a)
            slope += pf.slope * inv_a * inv_a;
            intercept += (pf.slope * (T::from_int(k) - mp.b) * inv_a + pf.intercept) * inv_a;
        }
        ps.push_back({slope, intercept});
    }
    return PiecewiseAffineFn<S>(std::move(cand), std::move(ps));
}

template <class S>
struct LasotaYorkeReport {
    S lhs;   // Var(Pf)
    S rhs;   // (2/a) Var(f) + 2 |int f|
    bool pass;
};

template <class S>
LasotaYorkeReport<S> check_lasota_yorke(const MapParams<S>& mp, const PiecewiseAffineFn<S>& f) {
    using T = scalar_traits<S>;
    auto pf = apply_pf(mp, f);
    S lhs = pf.total_variation();
    S rhs = T::from_int(2) / mp.a * f.total_variation() + T::from_int(2) * T::abs(f.integral());
    S slack = T::exact ? T::from_int(0)
                       : T::ratio(1, 1000000000) * (T::from_int(1) + f.total_variation());
    return {lhs, rhs, lhs <= rhs + slack};
}

// |int (Pf) g - int f (g o T)|, zero in exact arithmetic.
template <class S>
S duality_residual(const MapParams<S>& mp, const PiecewiseAffineFn<S>& f,
                   const PiecewiseAffineFn<S>& g) {
    using T = scalar_traits<S>;
    S lhs = integrate_product(apply_pf(mp, f), g);
    S rhs = integrate_product(f, compose_with_map(g, mp));
    return T::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Ulam discretization on M uniform cells.

struct GridDensity {
    int M = 0;
    std::vector<double> values; // cell averages
    bool normalized = false;

    double cell_mid(int i) const { return -0.5 + (i + 0.5) / M; }
    double mean() const { return std::accumulate(values.begin(), values.end(), 0.0) / M; }
};

inline double grid_l1(const std::vector<double>& u) {
    double s = 0;
    for (double x : u) s += std::fabs(x);
    return s / u.size();
}

// Variation of the cellwise-constant extension by zero.
inline double grid_variation(const std::vector<double>& u) {
    double s = std::fabs(u.front()) + std::fabs(u.back());
    for (size_t i = 0; i + 1 < u.size(); ++i) s += std::fabs(u[i + 1] - u[i]);
    return s;
}

// Row-stochastic transition matrix: entry (j -> i) is the fraction of cell j
// mapped into cell i, computed from exact branch-overlap lengths.
struct UlamMatrix {
    int M = 0;
    struct Entry {
        int32_t col;
        double w;
    };
    std::vector<Entry> entries;
    std::vector<uint32_t> row_start; // size M+1

    // density row-vector update: out_i = sum_j v_j A[j][i]
    void apply(const std::vector<double>& v, std::vector<double>& out) const {
        out.assign(static_cast<size_t>(M), 0.0);
        for (int j = 0; j < M; ++j) {
            double vj = v[static_cast<size_t>(j)];
            if (vj == 0.0) continue;
            for (uint32_t e = row_start[j]; e < row_start[j + 1]; ++e)
                out[static_cast<size_t>(entries[e].col)] += vj * entries[e].w;
        }
    }

    double row_sum(int j) const {
        double s = 0;
        for (uint32_t e = row_start[j]; e < row_start[j + 1]; ++e) s += entries[e].w;
        return s;
    }
};

inline UlamMatrix ulam_matrix(const MapParamsD& mp, int M) {
    if (M < 2) throw std::invalid_argument("ulam_matrix: M too small");
    UlamMatrix A;
    A.M = M;
    A.row_start.assign(static_cast<size_t>(M) + 1, 0);
    auto bs = branch_set(mp);
    const double cell = 1.0 / M;
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < M; ++j) {
        row.clear();
        const double cl = -0.5 + j * cell, cr = -0.5 + (j + 1) * cell;
        for (long k = -bs.p; k <= bs.q; ++k) {
            double sl = std::max(cl, bs.lower(k));
            double sr = std::min(cr, bs.upper(k));
            if (sr <= sl) continue;
            double ylo = mp.a * sl + mp.b - static_cast<double>(k);
            double yhi = mp.a * sr + mp.b - static_cast<double>(k);
            int ilo = std::clamp(static_cast<int>(std::floor((ylo + 0.5) * M)), 0, M - 1);
            int ihi = std::clamp(static_cast<int>(std::floor((yhi + 0.5) * M - 1e-12)), ilo, M - 1);
            for (int i = ilo; i <= ihi; ++i) {
                double bl = -0.5 + i * cell, br = -0.5 + (i + 1) * cell;
                double ov = std::min(yhi, br) - std::max(ylo, bl);
                // preimage measure within C_j: the branch contracts by 1/a
                if (ov > 0) row.emplace_back(i, ov * M / mp.a);
            }
        }
        std::sort(row.begin(), row.end());
        // merge duplicate columns (adjacent branches can hit the same cell)
        for (size_t t = 0; t < row.size(); ++t) {
            if (t + 1 < row.size() && row[t + 1].first == row[t].first) {
                row[t + 1].second += row[t].second;
                continue;
            }
            A.entries.push_back({row[t].first, row[t].second});
        }
        A.row_start[static_cast<size_t>(j) + 1] = static_cast<uint32_t>(A.entries.size());
    }
    return A;
}

struct DensityResult {
    GridDensity h;
    double residual = 0;  // last successive L1 difference
    int iterations = 0;
    double variation = 0; // Var of the grid density
};

struct DensityOptions {
    double tol = 1e-12;
    int max_iterations = 400'000;
    const GridDensity* warm_start = nullptr;
};

// Power iteration of the Ulam matrix from the uniform density (or a warm
// start) until the successive L1 difference drops below tol.
inline DensityResult invariant_density(const UlamMatrix& A, const DensityOptions& opt = {}) {
    const int M = A.M;
    std::vector<double> v(static_cast<size_t>(M), 1.0), w;
    if (opt.warm_start && opt.warm_start->M == M) v = opt.warm_start->values;
    double res = 0;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        A.apply(v, w);
        res = 0;
        for (int i = 0; i < M; ++i) res += std::fabs(w[i] - v[i]);
        res /= M;
        v.swap(w);
        if (res < opt.tol) break;
        if ((it & 63) == 63) {
            double m = std::accumulate(v.begin(), v.end(), 0.0) / M;
            for (double& x : v) x /= m;
        }
    }
    if (res >= opt.tol)
        throw convergence_error("invariant_density: power iteration did not converge", res);
    double m = std::accumulate(v.begin(), v.end(), 0.0) / M;
    for (double& x : v) x /= m;
    DensityResult out;
    out.h = GridDensity{M, std::move(v), true};
    out.residual = res;
    out.iterations = it + 1;
    out.variation = grid_variation(out.h.values);
    return out;
}

inline DensityResult invariant_density(const MapParamsD& mp, int M, const DensityOptions& opt = {}) {
    return invariant_density(ulam_matrix(mp, M), opt);
}

struct MixingReport {
    double gamma_hat = 0;
    double bound = 0; // 2/a
    int n_lo = 0, n_hi = 0;
};

// Decay-rate estimate of |P^n f|_1 for a mean-zero test function, from the
// ratio of norms across the usable range of n.
inline MixingReport mixing_rate(const MapParamsD& mp, int M, int n_max = 120) {
    auto A = ulam_matrix(mp, M);
    std::vector<double> v(static_cast<size_t>(M)), w;
    for (int i = 0; i < M; ++i) v[static_cast<size_t>(i)] = -0.5 + (i + 0.5) / M;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / M;
    for (double& x : v) x -= mean;

    std::vector<double> norms{grid_l1(v)};
    for (int n = 0; n < n_max; ++n) {
        A.apply(v, w);
        v.swap(w);
        norms.push_back(grid_l1(v));
        if (norms.back() < 1e-13 * norms.front()) break;
    }
    MixingReport rep;
    rep.bound = 2.0 / mp.a;
    rep.n_lo = std::min<int>(4, static_cast<int>(norms.size()) - 2);
    rep.n_hi = static_cast<int>(norms.size()) - 1;
    while (rep.n_hi > rep.n_lo + 1 && norms[rep.n_hi] < 1e-12 * norms.front()) --rep.n_hi;
    rep.gamma_hat = std::pow(norms[rep.n_hi] / norms[rep.n_lo], 1.0 / (rep.n_hi - rep.n_lo));
    return rep;
}

} // namespace detdiff
