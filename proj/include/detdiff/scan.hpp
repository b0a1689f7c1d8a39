#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "detdiff/parallel.hpp"
#include "detdiff/sim.hpp"
#include "detdiff/transport.hpp"

namespace detdiff {

enum class ScanQuantity { J, D };
enum class ScanBackend { grid, exact, montecarlo };

struct ScanConfig {
    char axis = 'a';             // 'a' or 'b'
    double lo = 2.0, hi = 8.0;
    long n_points = 2000;
    double fixed = 0.0;          // the other parameter
    ScanQuantity quantity = ScanQuantity::D;
    ScanBackend backend = ScanBackend::grid;
    // grid backend
    int M = 4096;
    double density_tol = 1e-9;
    double tail_tol = 1e-9;
    bool richardson = false;
    // exact backend
    double exact_tail_tol = 1e-10;
    // monte carlo backend
    long mc_steps = 100'000;
    int mc_walkers = 1000;
    uint64_t seed = 1;
    int threads = 1;
    long chunk = 10'000;
};

struct ScanChunk {
    long first = 0;
    std::vector<double> param, value, error;
};

inline double scan_param(const ScanConfig& cfg, long i) {
    if (cfg.n_points == 1) return cfg.lo;
    return cfg.lo + (cfg.hi - cfg.lo) * static_cast<double>(i) / static_cast<double>(cfg.n_points - 1);
}

// One contiguous chunk [first, last). Grid scans warm-start the invariant
// density from the previous point of the same chunk, so results depend only
// on the chunk partition, never on thread scheduling.
inline ScanChunk scan_chunk(const ScanConfig& cfg, long first, long last) {
    ScanChunk out;
    out.first = first;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    GridDensity warm;
    bool have_warm = false;
    for (long i = first; i < last; ++i) {
        double p = scan_param(cfg, i);
        double a = cfg.axis == 'a' ? p : cfg.fixed;
        double b = cfg.axis == 'a' ? cfg.fixed : p;
        double value = nan, error = nan;
        try {
            if (cfg.backend == ScanBackend::grid) {
                if (a <= 2.0 + 1e-3) throw grid_refusal("scan: grid backend refuses a <= 2.001");
                MapParamsD mp(a, b);
                auto A = ulam_matrix(mp, cfg.M);
                auto dens = invariant_density(A, {cfg.density_tol, 400000,
                                                  have_warm ? &warm : nullptr});
                if (cfg.quantity == ScanQuantity::J) {
                    value = drift(mp, dens.h);
                    error = cfg.density_tol;
                } else {
                    GridTransportOptions o;
                    o.M = cfg.M;
                    o.density_tol = cfg.density_tol;
                    o.tail_tol = cfg.tail_tol;
                    auto res = diffusion_grid_prepared(mp, A, dens.h, o);
                    if (cfg.richardson) {
                        GridTransportOptions half = o;
                        half.M = cfg.M / 2;
                        auto coarse = diffusion_grid(mp, half);
                        res.error_estimate += std::fabs(res.D - coarse.D);
                    }
                    value = res.D;
                    error = res.error_estimate;
                }
                warm = std::move(dens.h);
                have_warm = true;
            } else if (cfg.backend == ScanBackend::exact) {
                MapParamsD mp(a, b);
                auto res = diffusion_exact_double(mp, cfg.exact_tail_tol);
                value = cfg.quantity == ScanQuantity::J ? res.J : res.D;
                error = res.series.tail_bound;
            } else {
                SimConfig sc{MapParamsD(a, b), cfg.mc_steps, cfg.mc_walkers,
                             cfg.seed + static_cast<uint64_t>(i) * 0x9E3779B9ull, 200};
                auto est = mc_transport(sc);
                value = cfg.quantity == ScanQuantity::J ? est.J : est.D;
                error = 3 * (cfg.quantity == ScanQuantity::J ? est.se_J : est.se_D);
            }
        } catch (const grid_refusal&) {
            // recorded as a missing row; the scan continues
        } catch (const tolerance_unreachable&) {
        } catch (const convergence_error&) {
        } catch (const std::domain_error&) {
        }
        out.param.push_back(p);
        out.value.push_back(value);
        out.error.push_back(error);
    }
    return out;
}

struct ScanResult {
    std::vector<double> param, value, error;
    long refused = 0;
};

// `on_chunk`, when set, is called in chunk order (for persistence).
inline ScanResult scan_all(const ScanConfig& cfg,
                           const std::function<void(const ScanChunk&)>& on_chunk = {}) {
    const long n = cfg.n_points;
    const long nchunks = (n + cfg.chunk - 1) / cfg.chunk;
    std::vector<ScanChunk> chunks(static_cast<size_t>(nchunks));
    parallel_for(static_cast<size_t>(nchunks), cfg.threads, [&](size_t c) {
        long first = static_cast<long>(c) * cfg.chunk;
        long last = std::min(n, first + cfg.chunk);
        chunks[c] = scan_chunk(cfg, first, last);
    });
    ScanResult res;
    res.param.reserve(static_cast<size_t>(n));
    for (auto& ch : chunks) {
        if (on_chunk) on_chunk(ch);
        for (size_t i = 0; i < ch.param.size(); ++i) {
            res.param.push_back(ch.param[i]);
            res.value.push_back(ch.value[i]);
            res.error.push_back(ch.error[i]);
            if (!std::isfinite(ch.value[i])) ++res.refused;
        }
    }
    return res;
}

} // namespace detdiff
