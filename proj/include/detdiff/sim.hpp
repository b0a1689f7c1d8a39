#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "detdiff/map.hpp"
#include "detdiff/normal.hpp"

namespace detdiff {

// Counter-style splitmix64 generator with per-stream derivation, so walker w
// of a seeded run produces the same draws whether walkers run serially or in
// parallel.
struct Rng {
    uint64_t state;

    static uint64_t mix(uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static Rng stream(uint64_t seed, uint64_t index) {
        return Rng{mix(mix(seed) ^ (0x9E3779B97F4A7C15ull * (index + 1)))};
    }

    uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1)
    double next_unit() {
        uint64_t r = next_u64() >> 11; // 53 bits
        return (static_cast<double>(r) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double next_normal() { return norm_quantile(next_unit()); }
};

struct SimConfig {
    MapParamsD params;
    long n_steps = 10'000;
    int n_walkers = 10'000;
    uint64_t seed = 1;
    int burn_in = 200;
};

struct SimEstimate {
    double J = 0;
    double D = 0;
    double se_J = 0;
    double se_D = 0;
    long n_steps = 0;
    int n_walkers = 0;
};

// S_n trajectory from x0: the walk accumulates psi along the mod-map orbit,
// which equals the lifted displacement without ever iterating the unbounded
// lift in floating point.
inline std::vector<double> displacement_series(const MapParamsD& mp, double x0, long n) {
    if (!in_domain(x0)) throw std::domain_error("displacement_series: x0 outside I");
    auto psi = displacement(mp);
    std::vector<double> s(static_cast<size_t>(n) + 1, 0.0);
    double x = x0, acc = 0;
    for (long k = 0; k < n; ++k) {
        acc += psi(x);
        s[static_cast<size_t>(k) + 1] = acc;
        x = eval_map(mp, x);
    }
    return s;
}

namespace detail {

inline double pairwise_sum(const std::vector<double>& v, size_t lo, size_t hi) {
    if (hi - lo <= 8) {
        double s = 0;
        for (size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

} // namespace detail

namespace detail {

// One map step with seeded dither at the roundoff scale. Slopes that are
// powers of two multiply exactly in binary floating point, so the mod
// reduction would shift information out of the mantissa and every orbit
// would collapse onto an exactly periodic cycle; the dither restores the
// rounding noise that other slopes pick up anyway.
inline double dithered_step(const MapParamsD& mp, double x, Rng& rng) {
    double y = eval_map(mp, x) + (rng.next_unit() - 0.5) * 0x1p-50;
    if (y < -0.5) y = -0.5;
    if (y >= 0.5) y = std::nextafter(0.5, 0.0);
    return y;
}

} // namespace detail

// Final S_n for one seeded walker, starting from the relaxed density.
inline double walker_displacement(const SimConfig& cfg, int walker) {
    Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(walker));
    double x = -0.5 + rng.next_unit();
    if (x >= 0.5) x = std::nextafter(0.5, 0.0);
    for (int k = 0; k < cfg.burn_in; ++k) x = detail::dithered_step(cfg.params, x, rng);
    auto psi = displacement(cfg.params);
    double acc = 0;
    for (long k = 0; k < cfg.n_steps; ++k) {
        acc += psi(x);
        x = detail::dithered_step(cfg.params, x, rng);
    }
    return acc;
}

// J and D from an ensemble of walkers, with batched standard errors.
// `fill` lets callers parallelize the walker loop; it must write S[w] for all w.
inline SimEstimate mc_reduce(const SimConfig& cfg, const std::vector<double>& S) {
    const int W = cfg.n_walkers;
    const double n = static_cast<double>(cfg.n_steps);
    SimEstimate est;
    est.n_steps = cfg.n_steps;
    est.n_walkers = W;
    double mean = detail::pairwise_sum(S) / W;
    std::vector<double> sq(S.size());
    for (size_t i = 0; i < S.size(); ++i) sq[i] = (S[i] - mean) * (S[i] - mean);
    double var = detail::pairwise_sum(sq) / (W - 1);
    est.J = mean / n;
    est.D = var / (2 * n);

    const int B = std::min(32, std::max(2, W / 16));
    std::vector<double> bJ, bD;
    for (int b = 0; b < B; ++b) {
        size_t lo = static_cast<size_t>(b) * S.size() / B, hi = static_cast<size_t>(b + 1) * S.size() / B;
        if (hi - lo < 2) continue;
        double bm = detail::pairwise_sum(S, lo, hi) / (hi - lo);
        double bv = 0;
        for (size_t i = lo; i < hi; ++i) bv += (S[i] - bm) * (S[i] - bm);
        bv /= (hi - lo - 1);
        bJ.push_back(bm / n);
        bD.push_back(bv / (2 * n));
    }
    auto se = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        m /= v.size();
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / (v.size() - 1) / v.size());
    };
    est.se_J = se(bJ);
    est.se_D = se(bD);
    return est;
}

inline SimEstimate mc_transport(const SimConfig& cfg) {
    if (cfg.n_walkers < 32) throw std::invalid_argument("mc_transport: need >= 32 walkers");
    std::vector<double> S(static_cast<size_t>(cfg.n_walkers));
    for (int w = 0; w < cfg.n_walkers; ++w) S[static_cast<size_t>(w)] = walker_displacement(cfg, w);
    return mc_reduce(cfg, S);
}

struct CltPoint {
    long n = 0;
    double ks_distance = 0;     // to N(0, 2D)
    double scaled_variance = 0; // var(n^{-1/2}(S_n - nJ))
};

// Empirical law of n^{-1/2}(S_n - nJ) against N(0, 2D) along an n-grid.
inline std::vector<CltPoint> clt_check(const SimConfig& cfg, const std::vector<long>& n_grid,
                                       double J, double D) {
    long n_max = 0;
    for (long n : n_grid) n_max = std::max(n_max, n);
    std::vector<std::vector<double>> samples(n_grid.size(),
                                             std::vector<double>(static_cast<size_t>(cfg.n_walkers)));
    auto psi = displacement(cfg.params);
    for (int w = 0; w < cfg.n_walkers; ++w) {
        Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(w));
        double x = -0.5 + rng.next_unit();
        if (x >= 0.5) x = std::nextafter(0.5, 0.0);
        for (int k = 0; k < cfg.burn_in; ++k) x = detail::dithered_step(cfg.params, x, rng);
        double acc = 0;
        size_t gi = 0;
        std::vector<std::pair<long, size_t>> marks;
        for (size_t g = 0; g < n_grid.size(); ++g) marks.emplace_back(n_grid[g], g);
        std::sort(marks.begin(), marks.end());
        for (long k = 1; k <= n_max; ++k) {
            acc += psi(x);
            x = detail::dithered_step(cfg.params, x, rng);
            while (gi < marks.size() && marks[gi].first == k) {
                samples[marks[gi].second][static_cast<size_t>(w)] =
                    (acc - static_cast<double>(k) * J) / std::sqrt(static_cast<double>(k));
                ++gi;
            }
        }
    }
    std::vector<CltPoint> out;
    const double sigma = std::sqrt(2 * D);
    for (size_t g = 0; g < n_grid.size(); ++g) {
        CltPoint pt;
        pt.n = n_grid[g];
        double m = 0;
        for (double v : samples[g]) m += v;
        m /= cfg.n_walkers;
        double var = 0;
        for (double v : samples[g]) var += (v - m) * (v - m);
        pt.scaled_variance = var / (cfg.n_walkers - 1);
        // KS distance (inline to avoid a stats dependency)
        std::vector<double> x = samples[g];
        std::sort(x.begin(), x.end());
        double d = 0;
        const int n = static_cast<int>(x.size());
        for (int i = 0; i < n; ++i) {
            double f = sigma > 0 ? norm_cdf(x[static_cast<size_t>(i)] / sigma)
                                 : (x[static_cast<size_t>(i)] >= 0 ? 1.0 : 0.0);
            d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
            d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
        }
        pt.ks_distance = d;
        out.push_back(pt);
    }
    return out;
}

} // namespace detdiff
