#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "detdiff/map.hpp"
#include "detdiff/scalar.hpp"

namespace detdiff {

struct piece_overflow : std::runtime_error {
    size_t pieces;
    explicit piece_overflow(size_t n)
        : std::runtime_error("piecewise function exceeded piece cap"), pieces(n) {}
};

// A function on I = [-1/2, 1/2] given by affine pieces between sorted
// breakpoints. Evaluation is right-continuous at interior breakpoints; the
// right endpoint uses the last piece. Integrals, first moments and total
// variation (with extension by zero outside I) are closed-form.
template <class S>
class PiecewiseAffineFn {
public:
    struct Piece {
        S slope;
        S intercept;
        S at(const S& x) const { return slope * x + intercept; }
    };

    PiecewiseAffineFn(std::vector<S> breaks, std::vector<Piece> pieces)
        : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
        if (pieces_.empty() || breaks_.size() != pieces_.size() + 1)
            throw std::invalid_argument("PiecewiseAffineFn: size mismatch");
        for (size_t i = 0; i + 1 < breaks_.size(); ++i)
            if (!(breaks_[i] < breaks_[i + 1]))
                throw std::invalid_argument("PiecewiseAffineFn: breakpoints not increasing");
    }

    static PiecewiseAffineFn constant(const S& c) {
        using T = scalar_traits<S>;
        return PiecewiseAffineFn({T::ratio(-1, 2), T::ratio(1, 2)}, {Piece{T::from_int(0), c}});
    }

    static PiecewiseAffineFn identity() {
        using T = scalar_traits<S>;
        return PiecewiseAffineFn({T::ratio(-1, 2), T::ratio(1, 2)}, {Piece{T::from_int(1), T::from_int(0)}});
    }

    static PiecewiseAffineFn affine(const S& slope, const S& intercept) {
        using T = scalar_traits<S>;
        return PiecewiseAffineFn({T::ratio(-1, 2), T::ratio(1, 2)}, {Piece{slope, intercept}});
    }

    const std::vector<S>& breakpoints() const { return breaks_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    size_t piece_count() const { return pieces_.size(); }
    const S& lo() const { return breaks_.front(); }
    const S& hi() const { return breaks_.back(); }

    size_t piece_index(const S& x) const {
        // last i with breaks_[i] <= x, clamped to a valid piece
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
        size_t i = static_cast<size_t>(it - breaks_.begin());
        if (i == 0) throw std::domain_error("PiecewiseAffineFn: x below domain");
        if (i > pieces_.size()) {
            if (x > hi()) throw std::domain_error("PiecewiseAffineFn: x above domain");
            i = pieces_.size();
        }
        return i - 1;
    }

    S eval(const S& x) const { return pieces_[piece_index(x)].at(x); }

    S integral() const {
        using T = scalar_traits<S>;
        S acc = T::from_int(0);
        for (size_t i = 0; i < pieces_.size(); ++i) {
            const S &l = breaks_[i], &r = breaks_[i + 1];
            acc += pieces_[i].slope * (r * r - l * l) / T::from_int(2) + pieces_[i].intercept * (r - l);
        }
        return acc;
    }

    // \int_lo^hi f, for [lo, hi] inside the domain
    S integral(const S& lo, const S& hi) const {
        using T = scalar_traits<S>;
        if (hi <= lo) return T::from_int(0);
        S acc = T::from_int(0);
        size_t i = piece_index(lo);
        S cur = lo;
        while (cur < hi) {
            S top = breaks_[i + 1] < hi ? breaks_[i + 1] : hi;
            acc += pieces_[i].slope * (top * top - cur * cur) / T::from_int(2)
                 + pieces_[i].intercept * (top - cur);
            cur = top;
            if (++i >= pieces_.size()) break;
        }
        return acc;
    }

    // \int x f(x) dx
    S moment1() const {
        using T = scalar_traits<S>;
        S acc = T::from_int(0);
        for (size_t i = 0; i < pieces_.size(); ++i) {
            const S &l = breaks_[i], &r = breaks_[i + 1];
            acc += pieces_[i].slope * (r * r * r - l * l * l) / T::from_int(3)
                 + pieces_[i].intercept * (r * r - l * l) / T::from_int(2);
        }
        return acc;
    }

    // Variation of f extended by zero outside I: boundary values count as jumps.
    S total_variation() const {
        using T = scalar_traits<S>;
        S acc = T::abs(pieces_.front().at(lo()));
        for (size_t i = 0; i < pieces_.size(); ++i) {
            const S &l = breaks_[i], &r = breaks_[i + 1];
            acc += T::abs(pieces_[i].slope) * (r - l);
            if (i + 1 < pieces_.size())
                acc += T::abs(pieces_[i + 1].at(r) - pieces_[i].at(r));
        }
        acc += T::abs(pieces_.back().at(hi()));
        return acc;
    }

    S sup_norm() const {
        using T = scalar_traits<S>;
        S best = T::from_int(0);
        for (size_t i = 0; i < pieces_.size(); ++i) {
            S vl = T::abs(pieces_[i].at(breaks_[i]));
            S vr = T::abs(pieces_[i].at(breaks_[i + 1]));
            if (vl > best) best = vl;
            if (vr > best) best = vr;
        }
        return best;
    }

    PiecewiseAffineFn scaled(const S& c) const {
        auto ps = pieces_;
        for (auto& p : ps) {
            p.slope = p.slope * c;
            p.intercept = p.intercept * c;
        }
        return PiecewiseAffineFn(breaks_, std::move(ps));
    }

    PiecewiseAffineFn shifted(const S& c) const {
        auto ps = pieces_;
        for (auto& p : ps) p.intercept = p.intercept + c;
        return PiecewiseAffineFn(breaks_, std::move(ps));
    }

private:
    std::vector<S> breaks_;
    std::vector<Piece> pieces_;
};

using PiecewiseAffineD = PiecewiseAffineFn<double>;
using PiecewiseAffineQ = PiecewiseAffineFn<Rational>;

namespace detail {

template <class S>
std::vector<S> merged_breaks(const PiecewiseAffineFn<S>& f, const PiecewiseAffineFn<S>& g) {
    std::vector<S> bp;
    bp.reserve(f.breakpoints().size() + g.breakpoints().size());
    std::merge(f.breakpoints().begin(), f.breakpoints().end(),
               g.breakpoints().begin(), g.breakpoints().end(), std::back_inserter(bp));
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

} // namespace detail

// Pointwise sum; breakpoints are merged.
template <class S>
PiecewiseAffineFn<S> add(const PiecewiseAffineFn<S>& f, const PiecewiseAffineFn<S>& g) {
    using T = scalar_traits<S>;
    auto bp = detail::merged_breaks(f, g);
    std::vector<typename PiecewiseAffineFn<S>::Piece> ps;
    ps.reserve(bp.size() - 1);
    for (size_t i = 0; i + 1 < bp.size(); ++i) {
        S mid = (bp[i] + bp[i + 1]) / T::from_int(2);
        auto pf = f.pieces()[f.piece_index(mid)];
        auto pg = g.pieces()[g.piece_index(mid)];
        ps.push_back({pf.slope + pg.slope, pf.intercept + pg.intercept});
    }
    return PiecewiseAffineFn<S>(std::move(bp), std::move(ps));
}

// \int f g dx, exact (the integrand is piecewise quadratic).
template <class S>
S integrate_product(const PiecewiseAffineFn<S>& f, const PiecewiseAffineFn<S>& g) {
    using T = scalar_traits<S>;
    auto bp = detail::merged_breaks(f, g);
    S acc = T::from_int(0);
    for (size_t i = 0; i + 1 < bp.size(); ++i) {
        const S &l = bp[i], &r = bp[i + 1];
        S mid = (l + r) / T::from_int(2);
        auto pf = f.pieces()[f.piece_index(mid)];
        auto pg = g.pieces()[g.piece_index(mid)];
        S s1 = pf.slope, c1 = pf.intercept, s2 = pg.slope, c2 = pg.intercept;
        acc += s1 * s2 * (r * r * r - l * l * l) / T::from_int(3)
             + (s1 * c2 + s2 * c1) * (r * r - l * l) / T::from_int(2)
             + c1 * c2 * (r - l);
    }
    return acc;
}

// g composed with the mod map: piecewise affine on the refinement of T's
// branches by the preimages of g's breakpoints.
template <class S>
PiecewiseAffineFn<S> compose_with_map(const PiecewiseAffineFn<S>& g, const MapParams<S>& mp) {
    using T = scalar_traits<S>;
    auto bs = branch_set(mp);
    std::vector<S> bp;
    std::vector<typename PiecewiseAffineFn<S>::Piece> ps;
    for (long k = -bs.p; k <= bs.q; ++k) {
        const S &lo = bs.lower(k), &hi = bs.upper(k);
        // cuts inside this branch at preimages of g's interior breakpoints
        std::vector<S> cuts{lo};
        for (const S& y : g.breakpoints()) {
            S x = (y - mp.b + T::from_int(k)) / mp.a;
            if (x > lo && x < hi) cuts.push_back(x);
        }
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (!(cuts[i] < cuts[i + 1])) continue;
            S mid = (cuts[i] + cuts[i + 1]) / T::from_int(2);
            S ymid = mp.a * mid + mp.b - T::from_int(k);
            auto pg = g.pieces()[g.piece_index(ymid)];
            // g(a x + b - k) = (g.slope*a) x + g.slope*(b-k) + g.intercept
            bp.push_back(cuts[i]);
            ps.push_back({pg.slope * mp.a, pg.slope * (mp.b - T::from_int(k)) + pg.intercept});
        }
    }
    bp.push_back(T::ratio(1, 2));
    return PiecewiseAffineFn<S>(std::move(bp), std::move(ps));
}

} // namespace detdiff
