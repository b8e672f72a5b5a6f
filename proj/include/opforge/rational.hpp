#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <gmpxx.h>

namespace opforge {

/// Exact rational scalar backed by GMP. Always stored in lowest terms
/// with a positive denominator; equality and ordering are exact.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(long n, long d) : v_(n, d) {
        if (d == 0) throw std::invalid_argument("Rational: zero denominator");
        v_.canonicalize();
    }
    explicit Rational(const mpz_class& n) : v_(n) {}
    Rational(const mpz_class& n, const mpz_class& d) : v_(n, d) {
        if (d == 0) throw std::invalid_argument("Rational: zero denominator");
        v_.canonicalize();
    }
    explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }

    static Rational from_string(const std::string& s) {
        mpq_class q(s);
        q.canonicalize();
        return Rational(q);
    }

    mpz_class numerator() const { return v_.get_num(); }
    mpz_class denominator() const { return v_.get_den(); }
    bool is_zero() const { return sgn(v_) == 0; }
    bool is_integer() const { return v_.get_den() == 1; }
    int sign() const { return sgn(v_); }

    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw std::invalid_argument("Rational: division by zero");
        v_ /= o.v_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    /// Bit-size proxy used for pivot selection (smaller = better pivot).
    size_t size_metric() const {
        return mpz_sizeinbase(v_.get_num().get_mpz_t(), 2) +
               mpz_sizeinbase(v_.get_den().get_mpz_t(), 2);
    }

    /// Exact decimal string, "p/q" when the denominator is not 1.
    std::string str() const { return v_.get_str(); }

    const mpq_class& raw() const { return v_; }

private:
    mpq_class v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// Coefficient field selector: rationals by default, or a prime field.
struct FieldSpec {
    // 0 means Q; otherwise arithmetic is done modulo this prime.
    std::uint64_t prime = 0;

    bool is_rational() const { return prime == 0; }

    static FieldSpec rationals() { return FieldSpec{}; }
    static FieldSpec mod(std::uint64_t p) {
        if (p < 2) throw std::invalid_argument("FieldSpec: prime must be >= 2");
        return FieldSpec{p};
    }
};

/// Arithmetic helpers modulo a (word-sized) prime.
namespace fp {

inline std::uint64_t add(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
    std::uint64_t s = a + b;
    return s >= p ? s - p : s;
}
inline std::uint64_t sub(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
    return a >= b ? a - b : a + p - b;
}
inline std::uint64_t mul(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
    return static_cast<std::uint64_t>((unsigned __int128)a * b % p);
}
inline std::uint64_t pow(std::uint64_t a, std::uint64_t e, std::uint64_t p) {
    std::uint64_t r = 1 % p;
    while (e) {
        if (e & 1) r = mul(r, a, p);
        a = mul(a, a, p);
        e >>= 1;
    }
    return r;
}
inline std::uint64_t inv(std::uint64_t a, std::uint64_t p) {
    if (a % p == 0) throw std::domain_error("fp::inv of zero");
    return pow(a % p, p - 2, p);  // p prime
}

/// Image of an exact rational in F_p. The denominator must be a unit mod p.
inline std::uint64_t reduce(const Rational& r, std::uint64_t p) {
    mpz_class num = r.numerator() % mpz_class(static_cast<unsigned long>(p));
    mpz_class den = r.denominator() % mpz_class(static_cast<unsigned long>(p));
    std::uint64_t n = mpz_class(num < 0 ? num + mpz_class(static_cast<unsigned long>(p)) : num).get_ui();
    std::uint64_t d = den.get_ui();
    if (d == 0) throw std::domain_error("rational has nonunit denominator mod p");
    return mul(n, inv(d, p), p);
}

}  // namespace fp

}  // namespace opforge
