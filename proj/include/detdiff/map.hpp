#pragma once

#include <stdexcept>
#include <vector>

#include "detdiff/scalar.hpp"

namespace detdiff {

// The interval map family T(x) = a*x + b reduced mod 1 into I = [-1/2, 1/2).
// Slopes a > 2 are required for the analysis paths; a = 2 is admitted so the
// exact engine can evaluate the zero-diffusion limit.
template <class S>
struct MapParams {
    S a;
    S b;

    MapParams(S slope, S bias) : a(std::move(slope)), b(std::move(bias)) {
        using T = scalar_traits<S>;
        if (!(a >= T::from_int(2))) throw std::domain_error("MapParams: slope must be >= 2");
        if (T::abs(b) > T::ratio(1, 2)) throw std::domain_error("MapParams: bias must lie in [-1/2, 1/2]");
    }
};

using MapParamsD = MapParams<double>;
using MapParamsQ = MapParams<Rational>;

template <class S>
bool in_domain(const S& x) {
    using T = scalar_traits<S>;
    return x >= T::ratio(-1, 2) && x < T::ratio(1, 2);
}

// One step of the mod map. The reduction subtracts the integer
// m = floor(a*x + b + 1/2) so that the float and rational paths agree.
template <class S>
S eval_map(const MapParams<S>& mp, const S& x) {
    using T = scalar_traits<S>;
    if (!in_domain(x)) throw std::domain_error("eval_map: x outside [-1/2, 1/2)");
    S y = mp.a * x + mp.b;
    long m = T::floor_i64(y + T::ratio(1, 2));
    return y - T::from_int(m);
}

// The lift to the real axis: no reduction. Satisfies lift(x+1) = lift(x) + a,
// and lift(x) - x equals the displacement observable psi(x) on I.
template <class S>
S eval_lift(const MapParams<S>& mp, const S& x) {
    return mp.a * x + mp.b;
}

// Displacement observable psi(x) = (a-1)x + b; `offset` absorbs centering.
template <class S>
struct Observable {
    S slope;
    S offset;
    S operator()(const S& x) const { return slope * x + offset; }

    S sup_norm() const {
        using T = scalar_traits<S>;
        S lo = T::abs((*this)(T::ratio(-1, 2)));
        S hi = T::abs((*this)(T::ratio(1, 2)));
        return lo > hi ? lo : hi;
    }
};

template <class S>
Observable<S> displacement(const MapParams<S>& mp) {
    using T = scalar_traits<S>;
    return Observable<S>{mp.a - T::from_int(1), mp.b};
}

template <class S>
Observable<S> centered(const Observable<S>& psi, const S& drift) {
    return Observable<S>{psi.slope, psi.offset - drift};
}

// Monotonicity branches of T. Branch k = -p..q lives on (A_k, B_k), is affine
// with slope a and intercept b - k, and maps into [-1/2, 1/2).
template <class S>
struct BranchSet {
    long p = 0;
    long q = 0;
    std::vector<S> endpoints; // A_{-p}, A_{-p+1}, ..., A_q, B_q  (size p+q+2)

    long branch_count() const { return p + q + 1; }
    const S& lower(long k) const { return endpoints[static_cast<size_t>(k + p)]; }
    const S& upper(long k) const { return endpoints[static_cast<size_t>(k + p + 1)]; }
};

template <class S>
BranchSet<S> branch_set(const MapParams<S>& mp) {
    using T = scalar_traits<S>;
    const S half = T::ratio(1, 2);
    S t = (mp.a + T::from_int(1)) / T::from_int(2);
    BranchSet<S> bs;
    bs.p = T::ceil_i64(t - mp.b) - 1;
    bs.q = T::ceil_i64(t + mp.b) - 1;
    bs.endpoints.reserve(static_cast<size_t>(bs.p + bs.q + 2));
    bs.endpoints.push_back(-half);
    for (long k = -bs.p + 1; k <= bs.q; ++k)
        bs.endpoints.push_back((T::from_int(k) - half - mp.b) / mp.a);
    bs.endpoints.push_back(half);
    return bs;
}

// All y in [-1/2, 1/2) with T(y) = x; one per branch whose image covers x.
template <class S>
std::vector<S> preimages(const MapParams<S>& mp, const S& x) {
    using T = scalar_traits<S>;
    if (!in_domain(x)) throw std::domain_error("preimages: x outside [-1/2, 1/2)");
    const S half = T::ratio(1, 2);
    // y = (x + m - b)/a in [-1/2, 1/2)  <=>  b - x - a/2 <= m < b - x + a/2
    S lo = mp.b - x - mp.a / T::from_int(2);
    S hi = mp.b - x + mp.a / T::from_int(2);
    long m_lo = T::ceil_i64(lo);
    long m_hi = T::ceil_i64(hi) - 1; // strict upper end: largest integer < hi
    std::vector<S> ys;
    ys.reserve(static_cast<size_t>(m_hi - m_lo + 1));
    for (long m = m_lo; m <= m_hi; ++m) {
        S y = (x + T::from_int(m) - mp.b) / mp.a;
        if (y >= -half && y < half) ys.push_back(y);
    }
    return ys;
}

} // namespace detdiff
