#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace opforge {

/// Laurent polynomial in one variable q with integer coefficients.
/// Used for Poincaré polynomials; negative exponents are allowed.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::int64_t constant) {
        if (constant != 0) c_[0] = constant;
    }
    static Poly monomial(int exp, std::int64_t coeff = 1) {
        Poly p;
        if (coeff != 0) p.c_[exp] = coeff;
        return p;
    }

    const std::map<int, std::int64_t>& coeffs() const { return c_; }
    std::int64_t coeff(int exp) const {
        auto it = c_.find(exp);
        return it == c_.end() ? 0 : it->second;
    }
    bool is_zero() const { return c_.empty(); }

    void add_term(int exp, std::int64_t coeff) {
        auto it = c_.find(exp);
        if (it == c_.end()) {
            if (coeff != 0) c_[exp] = coeff;
            return;
        }
        it->second += coeff;
        if (it->second == 0) c_.erase(it);
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [e, c] : o.c_) add_term(e, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [e, c] : o.c_) add_term(e, -c);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly r;
        for (const auto& [ea, ca] : a.c_)
            for (const auto& [eb, cb] : b.c_) r.add_term(ea + eb, ca * cb);
        return r;
    }
    Poly operator*(std::int64_t k) const {
        Poly r;
        if (k != 0)
            for (const auto& [e, c] : c_) r.c_[e] = c * k;
        return r;
    }
    friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
    friend bool operator!=(const Poly& a, const Poly& b) { return a.c_ != b.c_; }

    std::int64_t eval_at_one() const {
        std::int64_t s = 0;
        for (const auto& [e, c] : c_) s += c;
        return s;
    }

    /// Alternating sum sum_j (-1)^j c_j (Euler characteristic of a graded count).
    std::int64_t euler() const {
        std::int64_t s = 0;
        for (const auto& [e, c] : c_) s += (e % 2 == 0) ? c : -c;
        return s;
    }

    /// q^shift * P(1/q): reflect exponents and shift. This is the degree
    /// transform appearing in the duality predictions.
    Poly shift_reflect(int shift) const {
        Poly r;
        for (const auto& [e, c] : c_) r.c_[shift - e] = c;
        return r;
    }

    /// Multiply by q^shift.
    Poly shifted(int shift) const {
        Poly r;
        for (const auto& [e, c] : c_) r.c_[e + shift] = c;
        return r;
    }

    /// Human-readable form, e.g. "1 + 3q + 2q^2", "q^-1 + 2", "0".
    std::string str() const {
        if (c_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [e, c] : c_) {
            std::int64_t a = c;
            if (first) {
                if (a < 0) { out += "-"; a = -a; }
            } else {
                out += a < 0 ? " - " : " + ";
                if (a < 0) a = -a;
            }
            first = false;
            std::string mono;
            if (e == 0) {
                mono = std::to_string(a);
            } else {
                if (a != 1) mono = std::to_string(a);
                mono += "q";
                if (e != 1) mono += "^" + std::to_string(e);
            }
            out += mono;
        }
        return out;
    }

private:
    std::map<int, std::int64_t> c_;
};

}  // namespace opforge
