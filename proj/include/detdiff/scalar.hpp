#pragma once

#include <cmath>
#include <cstdint>

#include "detdiff/rational.hpp"

namespace detdiff {

// Uniform access to the two scalar backends: IEEE double for grid and scan
// work, exact rationals for the integer-slope engine. Numeric code below the
// CLI is templated on the scalar and uses these helpers only.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double from_int(long n) { return static_cast<double>(n); }
    static double ratio(long n, long d) { return static_cast<double>(n) / static_cast<double>(d); }
    static double abs(double x) { return std::fabs(x); }
    static long floor_i64(double x) { return static_cast<long>(std::floor(x)); }
    static long ceil_i64(double x) { return static_cast<long>(std::ceil(x)); }
    static double to_double(double x) { return x; }
    // breakpoints closer than this are merged on the float path
    static double merge_tol() { return 1e-15; }
};

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static Rational from_int(long n) { return Rational(n); }
    static Rational ratio(long n, long d) { return Rational(n, d); }
    static Rational abs(const Rational& x) { return x.abs(); }
    static long floor_i64(const Rational& x) { return x.floor_i64(); }
    static long ceil_i64(const Rational& x) { return x.ceil_i64(); }
    static double to_double(const Rational& x) { return x.to_double(); }
    static Rational merge_tol() { return Rational(0); }
};

} // namespace detdiff
