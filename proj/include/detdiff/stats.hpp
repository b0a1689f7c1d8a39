#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "detdiff/exact.hpp"
#include "detdiff/normal.hpp"
#include "detdiff/sim.hpp"

namespace detdiff {

struct NormalityReport {
    double mean = 0;
    double sd = 0;
    double W = 0;
    double p_value = 0;
    int n = 0;
    bool subsampled = false;
};

// Shapiro-Wilk W and its p-value via Royston's approximation (valid for
// 3 <= n <= 5000); larger samples must be subsampled by the caller.
inline NormalityReport shapiro_wilk(std::vector<double> x) {
    const int n = static_cast<int>(x.size());
    if (n < 3 || n > 5000) throw std::domain_error("shapiro_wilk: n must be in [3, 5000]");
    std::sort(x.begin(), x.end());

    NormalityReport rep;
    rep.n = n;
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double ssq = 0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    rep.mean = mean;
    rep.sd = std::sqrt(ssq / (n - 1));
    if (ssq <= 0) throw std::domain_error("shapiro_wilk: degenerate sample");

    // expected normal order statistics (Blom) and normalized weights
    std::vector<double> m(n);
    for (int i = 0; i < n; ++i) m[i] = norm_quantile((i + 1 - 0.375) / (n + 0.25));
    double mm = 0;
    for (double v : m) mm += v * v;
    std::vector<double> w(n);
    const double u = 1.0 / std::sqrt(static_cast<double>(n));
    const double rsm = 1.0 / std::sqrt(mm);
    if (n <= 5) {
        double wn = m[n - 1] * rsm + u * (0.221157 + u * (-0.147981 + u * (-2.071190 + u * (4.434685 - 2.706056 * u))));
        double phi = (mm - 2 * m[n - 1] * m[n - 1]) / (1 - 2 * wn * wn);
        w[n - 1] = wn;
        w[0] = -wn;
        for (int i = 1; i < n - 1; ++i) w[i] = m[i] / std::sqrt(phi);
    } else {
        double wn = m[n - 1] * rsm + u * (0.221157 + u * (-0.147981 + u * (-2.071190 + u * (4.434685 - 2.706056 * u))));
        double wn1 = m[n - 2] * rsm + u * (0.042981 + u * (-0.293762 + u * (-1.752461 + u * (5.682633 - 3.582633 * u))));
        double phi = (mm - 2 * m[n - 1] * m[n - 1] - 2 * m[n - 2] * m[n - 2]) / (1 - 2 * wn * wn - 2 * wn1 * wn1);
        w[n - 1] = wn;
        w[0] = -wn;
        w[n - 2] = wn1;
        w[1] = -wn1;
        for (int i = 2; i < n - 2; ++i) w[i] = m[i] / std::sqrt(phi);
    }

    double num = 0;
    for (int i = 0; i < n; ++i) num += w[i] * x[i];
    rep.W = num * num / ssq;
    if (rep.W > 1.0) rep.W = 1.0;

    // normalizing transform for the p-value
    double z;
    if (n == 3) {
        double pw = 6.0 / M_PI * (std::asin(std::sqrt(rep.W)) - std::asin(std::sqrt(0.75)));
        rep.p_value = std::clamp(pw, 0.0, 1.0);
        return rep;
    }
    if (n <= 11) {
        double g = -2.273 + 0.459 * n;
        double mu = 0.5440 + n * (-0.39978 + n * (0.025054 - n * 0.0006714));
        double sig = std::exp(1.3822 + n * (-0.77857 + n * (0.062767 - n * 0.0020322)));
        z = (-std::log(g - std::log(1 - rep.W)) - mu) / sig;
    } else {
        double ln = std::log(static_cast<double>(n));
        double mu = -1.5861 + ln * (-0.31082 + ln * (-0.083751 + ln * 0.0038915));
        double sig = std::exp(-0.4803 + ln * (-0.082676 + ln * 0.0030302));
        z = (std::log(1 - rep.W) - mu) / sig;
    }
    rep.p_value = std::clamp(1.0 - norm_cdf(z), 0.0, 1.0);
    return rep;
}

struct QQData {
    std::vector<double> theoretical; // Phi^-1((i - 3/8)/(n + 1/4))
    std::vector<double> sample;      // order statistics
    double line_slope = 0;           // sample sd
    double line_intercept = 0;       // sample mean
    bool degenerate = false;         // sd == 0
};

inline QQData qq_quantiles(std::vector<double> x) {
    const int n = static_cast<int>(x.size());
    if (n < 10) throw std::domain_error("qq_quantiles: need n >= 10");
    std::sort(x.begin(), x.end());
    QQData q;
    q.sample = x;
    q.theoretical.resize(n);
    for (int i = 0; i < n; ++i) q.theoretical[i] = norm_quantile((i + 1 - 0.375) / (n + 0.25));
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double ssq = 0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    q.line_intercept = mean;
    q.line_slope = n > 1 ? std::sqrt(ssq / (n - 1)) : 0.0;
    q.degenerate = !(q.line_slope > 0);
    return q;
}

// ---------------------------------------------------------------------------
// Ensembles of scaled diffusion differences (D(b + db) - D(b)) / (db sqrt(-ln db))
// over random b, on the exact path. b is drawn as an exact dyadic rational so
// identical seeds give bit-identical ensembles.

struct EnsembleSpec {
    long a = 4;
    Rational db = Rational::pow10(-30);
    int n_samples = 500;
    Rational b_lo = Rational(0);
    Rational b_hi = Rational(1, 2);
    uint64_t seed = 1;
    double quotient_tol = 1e-6;
};

inline std::vector<double> scaled_difference_ensemble(const EnsembleSpec& spec) {
    if (spec.n_samples < 1) throw std::invalid_argument("ensemble: n_samples < 1");
    double dbd = std::fabs(spec.db.to_double());
    double scale = dbd * std::sqrt(-std::log(dbd));
    if (!(scale > 0)) throw std::domain_error("ensemble: db must satisfy 0 < |db| < 1");
    std::vector<double> out(static_cast<size_t>(spec.n_samples));
    const Rational width = spec.b_hi - spec.b_lo;
    const long den = 1L << 53;
    for (int i = 0; i < spec.n_samples; ++i) {
        Rng rng = Rng::stream(spec.seed, static_cast<uint64_t>(i));
        long r = static_cast<long>(rng.next_u64() >> 11); // 53 bits
        Rational b = spec.b_lo + width * Rational(r, den);
        auto dq = diff_quotient(spec.a, b, spec.db, {spec.quotient_tol, 20, 200000, 2000000});
        out[static_cast<size_t>(i)] = dq.quotient.to_double() * dbd / scale;
    }
    return out;
}

// Kolmogorov-Smirnov distance of a sample to N(mu, sigma^2).
inline double ks_distance_normal(std::vector<double> x, double mu, double sigma) {
    std::sort(x.begin(), x.end());
    const int n = static_cast<int>(x.size());
    double d = 0;
    for (int i = 0; i < n; ++i) {
        double f = norm_cdf((x[i] - mu) / sigma);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

} // namespace detdiff
