#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detdiff/transport.hpp"

namespace detdiff {

// Arbitrary-precision analysis at integer slopes. Lebesgue measure is
// invariant there, so correlations reduce to exact rational integrals
//   c_n = (a-1)^2 \int x (P^n id)(x) dx
// and drift is the identity J(a,b) = b.

inline MapParamsQ integer_map(long a, const Rational& b) {
    if (a < 2) throw std::domain_error("integer_map: slope must be an integer >= 2");
    return MapParamsQ(Rational(a), b);
}

inline Rational exact_drift(long a, const Rational& b) {
    // b + (a-1) \int x h dx with h = 1, via the piecewise machinery
    (void)integer_map(a, b);
    return b + (Rational(a) - Rational(1)) * PiecewiseAffineQ::constant(Rational(1)).moment1();
}

inline Rational exact_correlation(long a, const Rational& b, int n) {
    auto mp = integer_map(a, b);
    PwCorrelationEngine<Rational> eng(mp);
    if (n == 0) return eng.c0();
    Rational cn;
    for (int i = 0; i < n; ++i) cn = eng.step();
    return cn;
}

struct ExactDiffusion {
    Rational value;          // partial sum, or the exact value when tail_exact
    double tail_bound = 0;   // 0 when tail_exact
    bool tail_exact = false; // geometric self-similar tail summed in closed form
    int terms = 0;           // truncation index N
};

struct ExactOptions {
    double tail_tol = 1e-14;
    int min_terms = 0;
    int max_terms = 100'000;
    size_t piece_cap = 1'000'000;
};

inline ExactDiffusion exact_diffusion(long a, const Rational& b, const ExactOptions& opt = {}) {
    auto mp = integer_map(a, b);
    PfOptions pfo{opt.piece_cap};
    PwCorrelationEngine<Rational> eng(mp, pfo);
    ExactDiffusion out;
    out.value = eng.c0() / Rational(2);
    PiecewiseAffineQ prev = eng.state();
    while (true) {
        Rational cn = eng.step();
        out.value += cn;
        out.terms = eng.n();
        if (auto lambda = eng.eigen_ratio(prev)) {
            // all later c_n scale by lambda each step: sum exactly
            out.value += cn * *lambda / (Rational(1) - *lambda);
            out.tail_exact = true;
            out.tail_bound = 0;
            return out;
        }
        prev = eng.state();
        if (eng.n() >= opt.min_terms) {
            double tb = eng.tail_bound();
            if (tb < opt.tail_tol) {
                out.tail_bound = tb;
                return out;
            }
        }
        if (eng.n() >= opt.max_terms)
            throw tolerance_unreachable("exact_diffusion: tail tolerance unreachable", eng.tail_bound());
    }
}

// ---------------------------------------------------------------------------
// Orbit of bhat = -1/2 + b/(a-1) under the unbiased map, with exact cycle
// detection. Rational orbits of integer-slope maps always cycle.

struct OrbitCycle {
    std::vector<Rational> preperiod;
    std::vector<Rational> cycle;
    bool cycle_contains_minus_half = false;
    bool cycle_contains_bhat = false;
    Rational bhat;
};

inline OrbitCycle orbit_of_bhat(long a, const Rational& b) {
    MapParamsQ t0(Rational(a), Rational(0));
    OrbitCycle out;
    out.bhat = Rational(-1, 2) + b / Rational(a - 1);
    std::map<Rational, size_t> seen;
    std::vector<Rational> orbit;
    Rational x = out.bhat;
    while (true) {
        auto it = seen.find(x);
        if (it != seen.end()) {
            out.preperiod.assign(orbit.begin(), orbit.begin() + static_cast<long>(it->second));
            out.cycle.assign(orbit.begin() + static_cast<long>(it->second), orbit.end());
            break;
        }
        seen.emplace(x, orbit.size());
        orbit.push_back(x);
        x = eval_map(t0, x);
    }
    const Rational mhalf(-1, 2);
    for (const auto& c : out.cycle) {
        if (c == mhalf) out.cycle_contains_minus_half = true;
        if (c == out.bhat) out.cycle_contains_bhat = true;
    }
    return out;
}

// chi_b(x) = 1_{[-1/2, bhat)}(x) - b/(a-1)  and  g_b(x) = x + chi_b(x)
inline Rational g_b_at(long a, const Rational& b, const Rational& bhat, const Rational& x) {
    Rational v = x - b / Rational(a - 1);
    if (x >= Rational(-1, 2) && x < bhat) v += Rational(1);
    return v;
}

// ---------------------------------------------------------------------------
// Predicted coefficient C_{a,b} of the leading log correction,
//   D_a(b') - D_a(b) = C_{a,b} (b'-b) log|b'-b|^{-1} + O(b'-b).
// Markov-partition parameters with a clean cycle (avoiding -1/2 and bhat)
// use the cycle average of g_b; b in {0, +-1/2} have hand-derived constants
// that account for the one-sided limits at the discontinuities.

enum class LogCoeffCase {
    even_b0,        // C = 0, difference is O(b')
    odd_b0,         // C = -(a-1)/(2 ln a)
    even_half,      // |C| = (a-1)/(2 ln a), sign from the approach side
    odd_half,       // |C| = (a-1)/(4 ln a)
    generic_cycle,  // C = (a-1) <g_b>_cycle / ln a
    no_prediction   // cycle hits -1/2 or bhat away from the covered cases
};

struct LogCoeffReport {
    LogCoeffCase kind = LogCoeffCase::no_prediction;
    bool has_value = false;
    double C = 0;              // signed coefficient (for b = +-1/2: inward side)
    Rational cycle_average;    // <g_b> over the cycle (generic case)
    OrbitCycle orbit;
};

inline LogCoeffReport predict_log_coefficient(long a, const Rational& b) {
    if (a < 3) throw std::domain_error("predict_log_coefficient: integer slope >= 3 required");
    if (b < Rational(0)) {
        // D(a,b) = D(a,-b): the coefficient flips sign with the reflection
        LogCoeffReport r = predict_log_coefficient(a, -b);
        r.C = -r.C;
        return r;
    }
    const bool even = (a % 2 == 0);
    const double lna = std::log(static_cast<double>(a));
    LogCoeffReport rep;
    rep.orbit = orbit_of_bhat(a, b);
    if (b == Rational(0)) {
        rep.kind = even ? LogCoeffCase::even_b0 : LogCoeffCase::odd_b0;
        rep.has_value = true;
        rep.C = even ? 0.0 : -(a - 1) / (2.0 * lna);
        return rep;
    }
    if (b == Rational(1, 2)) {
        // approaching from b' < 1/2
        rep.kind = even ? LogCoeffCase::even_half : LogCoeffCase::odd_half;
        rep.has_value = true;
        rep.C = even ? (a - 1) / (2.0 * lna) : (a - 1) / (4.0 * lna);
        return rep;
    }
    if (rep.orbit.cycle_contains_minus_half || rep.orbit.cycle_contains_bhat) {
        rep.kind = LogCoeffCase::no_prediction;
        return rep;
    }
    Rational sum(0);
    for (const auto& x : rep.orbit.cycle) sum += g_b_at(a, b, rep.orbit.bhat, x);
    rep.cycle_average = sum / Rational(static_cast<long>(rep.orbit.cycle.size()));
    rep.kind = LogCoeffCase::generic_cycle;
    rep.has_value = true;
    rep.C = (a - 1) * rep.cycle_average.to_double() / lna;
    return rep;
}

// ---------------------------------------------------------------------------
// Difference quotients (D(b') - D(b)) / (b' - b) with both diffusion sums
// truncated at one shared index, so the tails cancel structurally instead of
// having to be small individually.

struct DiffQuotientAnalysis {
    long a = 0;
    Rational b, b_prime;
    Rational delta;          // (b'-b)/(a-1)
    int N_delta = 0;         // ceil(log|delta|^{-1} / log a)
    int N_used = 0;
    Rational quotient;
    double tail_bound = 0;   // bound on the quotient error from truncation
};

struct DiffQuotientOptions {
    double tol = 1e-6;      // target: tail of D-difference <= tol * |db|
    int margin = 20;        // extra terms past N_delta
    int max_terms = 100'000;
    size_t piece_cap = 1'000'000;
};

inline DiffQuotientAnalysis diff_quotient(long a, const Rational& b, const Rational& db,
                                          const DiffQuotientOptions& opt = {}) {
    if (db == Rational(0)) throw std::domain_error("diff_quotient: zero increment");
    Rational b2 = b + db;
    auto mp1 = integer_map(a, b);
    auto mp2 = integer_map(a, b2);

    DiffQuotientAnalysis out;
    out.a = a;
    out.b = b;
    out.b_prime = b2;
    out.delta = db / Rational(a - 1);
    double ad = static_cast<double>(a);
    double abs_delta = std::fabs(out.delta.to_double());
    out.N_delta = static_cast<int>(std::ceil(std::log(1.0 / abs_delta) / std::log(ad)));

    PfOptions pfo{opt.piece_cap};
    PwCorrelationEngine<Rational> e1(mp1, pfo), e2(mp2, pfo);
    Rational s1 = e1.c0() / Rational(2), s2 = e2.c0() / Rational(2);
    const double target = opt.tol * std::fabs(db.to_double());
    int n = 0;
    double tb = 0;
    while (true) {
        s1 += e1.step();
        s2 += e2.step();
        ++n;
        if (n >= out.N_delta + opt.margin) {
            tb = e1.tail_bound() + e2.tail_bound();
            if (tb < target) break;
        }
        if (n >= opt.max_terms)
            throw tolerance_unreachable("diff_quotient: tail tolerance unreachable",
                                        e1.tail_bound() + e2.tail_bound());
    }
    out.N_used = n;
    out.quotient = (s2 - s1) / db;
    out.tail_bound = tb / std::fabs(db.to_double());
    return out;
}

} // namespace detdiff
