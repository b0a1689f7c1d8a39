#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace detdiff {

// Exact rational arithmetic backed by GMP. Values are kept canonical
// (coprime numerator/denominator, positive denominator).
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(static_cast<long>(n)) {}
    Rational(int n) : v_(n) {}
    Rational(long num, long den) : v_(num, den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        v_.canonicalize();
    }
    explicit Rational(mpq_class q) : v_(std::move(q)) { v_.canonicalize(); }

    // 10^k for any integer k, exact.
    static Rational pow10(long k) {
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), 10u, static_cast<unsigned long>(k < 0 ? -k : k));
        return k >= 0 ? Rational(mpq_class(p)) : Rational(mpq_class(1, p));
    }

    // Accepts "p/q", integers, and decimal/scientific forms ("0.25", "1e-30",
    // "-2.5e-3"), all parsed exactly.
    static Rational parse(const std::string& s) {
        if (s.empty()) throw std::invalid_argument("Rational::parse: empty string");
        auto slash = s.find('/');
        if (slash != std::string::npos) {
            mpq_class q(mpz_class(s.substr(0, slash), 10), mpz_class(s.substr(slash + 1), 10));
            return Rational(q);
        }
        size_t i = 0;
        bool neg = false;
        if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
        std::string digits;
        long frac_len = 0, expo = 0;
        for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) digits += s[i];
        if (i < s.size() && s[i] == '.') {
            for (++i; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
                digits += s[i];
                ++frac_len;
            }
        }
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
            expo = std::stol(s.substr(i + 1));
            i = s.size();
        }
        if (digits.empty() || i != s.size())
            throw std::invalid_argument("Rational::parse: bad number: " + s);
        Rational r{mpq_class(mpz_class(digits, 10))};
        r = r * pow10(expo - frac_len);
        return neg ? -r : r;
    }

    static Rational pow_int(const Rational& base, long e) {
        Rational r(1), b = base;
        long n = e < 0 ? -e : e;
        while (n > 0) {
            if (n & 1) r = r * b;
            b = b * b;
            n >>= 1;
        }
        if (e < 0) {
            if (r.v_ == 0) throw std::domain_error("Rational: 0^negative");
            r = Rational(1) / r;
        }
        return r;
    }

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ + b.v_)); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ - b.v_)); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ * b.v_)); }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.v_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(mpq_class(a.v_ / b.v_));
    }
    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    Rational abs() const { return v_ < 0 ? -*this : *this; }
    int sign() const { return sgn(v_); }

    // Largest integer <= value. Requires the result to fit in long.
    long floor_i64() const {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
        if (!q.fits_slong_p()) throw std::overflow_error("Rational::floor_i64 overflow");
        return q.get_si();
    }
    long ceil_i64() const {
        mpz_class q;
        mpz_cdiv_q(q.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
        if (!q.fits_slong_p()) throw std::overflow_error("Rational::ceil_i64 overflow");
        return q.get_si();
    }

    double to_double() const { return v_.get_d(); }
    bool is_integer() const { return v_.get_den() == 1; }

    std::string num_string() const { return v_.get_num().get_str(); }
    std::string den_string() const { return v_.get_den().get_str(); }

    // Scientific rendering with the requested number of significant digits,
    // e.g. 1/3 with 6 digits -> "3.33333e-01".
    std::string to_decimal(unsigned digits = 30) const {
        if (digits == 0) digits = 1;
        if (v_ == 0) return "0";
        mpq_class a = ::abs(v_);
        // decimal exponent: e with 10^e <= a < 10^(e+1)
        long e = 0;
        mpq_class ten(10), one(1);
        if (a >= one) {
            mpq_class t = a;
            while (t >= ten) { t /= ten; ++e; }
        } else {
            mpq_class t = a;
            while (t < one) { t *= ten; --e; }
        }
        // round(a * 10^(digits-1-e)) as an integer
        long shift = static_cast<long>(digits) - 1 - e;
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), 10u, static_cast<unsigned long>(shift < 0 ? -shift : shift));
        mpq_class scaled = shift >= 0 ? mpq_class(a * p) : mpq_class(a / p);
        mpz_class n, r;
        mpz_fdiv_qr(n.get_mpz_t(), r.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
        mpq_class frac(r, scaled.get_den());
        if (frac * 2 >= 1) n += 1;
        std::string ds = n.get_str();
        if (static_cast<long>(ds.size()) > static_cast<long>(digits)) {
            // rounding carried into one more digit (e.g. 9.99 -> 10.0)
            ds.pop_back();
            ++e;
        }
        std::string out;
        if (v_ < 0) out += '-';
        out += ds.substr(0, 1);
        if (ds.size() > 1) {
            out += '.';
            out += ds.substr(1);
        }
        out += 'e';
        out += (e < 0 ? '-' : '+');
        std::string es = std::to_string(e < 0 ? -e : e);
        if (es.size() < 2) es.insert(es.begin(), '0');
        out += es;
        return out;
    }

    const mpq_class& raw() const { return v_; }

private:
    mpq_class v_;
};

inline Rational abs(const Rational& r) { return r.abs(); }
inline double to_double(const Rational& r) { return r.to_double(); }

} // namespace detdiff
