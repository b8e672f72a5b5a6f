#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "opforge/rational.hpp"

namespace opforge {

/// Sparse matrix over the exact rationals. Entries are stored as a
/// coordinate table keyed by (row, col); zero entries are never stored.
class SparseMatrix {
public:
    SparseMatrix() : rows_(0), cols_(0) {}
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("SparseMatrix: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t nnz() const { return entries_.size(); }

    void set(int r, int c, const Rational& v) {
        check_index(r, c);
        if (v.is_zero())
            entries_.erase({r, c});
        else
            entries_[{r, c}] = v;
    }

    void add(int r, int c, const Rational& v) {
        check_index(r, c);
        auto it = entries_.find({r, c});
        if (it == entries_.end()) {
            if (!v.is_zero()) entries_[{r, c}] = v;
            return;
        }
        it->second += v;
        if (it->second.is_zero()) entries_.erase(it);
    }

    Rational get(int r, int c) const {
        check_index(r, c);
        auto it = entries_.find({r, c});
        return it == entries_.end() ? Rational(0) : it->second;
    }

    const std::map<std::pair<int, int>, Rational>& entries() const { return entries_; }

    bool is_zero() const { return entries_.empty(); }

    SparseMatrix transpose() const {
        SparseMatrix t(cols_, rows_);
        for (const auto& [rc, v] : entries_) t.entries_[{rc.second, rc.first}] = v;
        return t;
    }

    friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("SparseMatrix: shape mismatch in product");
        // Row-major accumulation; b indexed by leading row.
        std::map<int, std::vector<std::pair<int, Rational>>> brows;
        for (const auto& [rc, v] : b.entries_) brows[rc.first].push_back({rc.second, v});
        SparseMatrix c(a.rows_, b.cols_);
        for (const auto& [rc, av] : a.entries_) {
            auto it = brows.find(rc.second);
            if (it == brows.end()) continue;
            for (const auto& [col, bv] : it->second) c.add(rc.first, col, av * bv);
        }
        return c;
    }

    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
    }

    /// Column-major view: for each column, the (row, value) pairs sorted by row.
    std::vector<std::vector<std::pair<int, Rational>>> columns() const {
        std::vector<std::vector<std::pair<int, Rational>>> out(cols_);
        for (const auto& [rc, v] : entries_) out[rc.second].push_back({rc.first, v});
        return out;
    }

    SparseMatrix apply(const std::vector<Rational>&) const = delete;

    /// Matrix-vector product, exact.
    std::vector<Rational> mul_vec(const std::vector<Rational>& x) const {
        if (static_cast<int>(x.size()) != cols_)
            throw std::invalid_argument("SparseMatrix: vector length mismatch");
        std::vector<Rational> y(rows_, Rational(0));
        for (const auto& [rc, v] : entries_)
            if (!x[rc.second].is_zero()) y[rc.first] += v * x[rc.second];
        return y;
    }

private:
    void check_index(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw std::invalid_argument("SparseMatrix: index out of bounds");
    }

    int rows_, cols_;
    std::map<std::pair<int, int>, Rational> entries_;
};

namespace detail {

// A sparse row with primitive integer entries: sorted (col, value) pairs,
// gcd of values 1, leading value positive. Fraction-free elimination on
// these rows keeps every intermediate value an integer.
struct IntRow {
    std::vector<std::pair<int, mpz_class>> e;

    bool empty() const { return e.empty(); }
    int lead() const { return e.front().first; }

    // Divides out the gcd (signed so the leading entry stays positive) and
    // returns it; returns 1 for the empty row.
    mpz_class strip_content() {
        if (e.empty()) return 1;
        mpz_class g = 0;
        for (auto& [c, v] : e) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v.get_mpz_t());
        if (sgn(e.front().second) < 0) g = -g;
        if (g != 1)
            for (auto& [c, v] : e) mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), g.get_mpz_t());
        return g;
    }
};

// r := (pivot_lead * r - r_lead * pivot) / content  (cancels the leading
// column of r). Exact and fraction-free. Returns the net scale applied to r
// (ignoring the pivot-row summand), i.e. pivot_lead / content.
inline Rational eliminate(IntRow& r, const IntRow& piv) {
    const mpz_class a = piv.e.front().second;
    mpz_class b = 0;
    for (const auto& [c, v] : r.e)
        if (c == piv.lead()) { b = v; break; }
    if (b == 0) return Rational(1);
    std::vector<std::pair<int, mpz_class>> out;
    out.reserve(r.e.size() + piv.e.size());
    size_t i = 0, j = 0;
    while (i < r.e.size() || j < piv.e.size()) {
        if (j == piv.e.size() || (i < r.e.size() && r.e[i].first < piv.e[j].first)) {
            out.push_back({r.e[i].first, a * r.e[i].second});
            ++i;
        } else if (i == r.e.size() || piv.e[j].first < r.e[i].first) {
            out.push_back({piv.e[j].first, -b * piv.e[j].second});
            ++j;
        } else {
            mpz_class v = a * r.e[i].second - b * piv.e[j].second;
            if (v != 0) out.push_back({r.e[i].first, std::move(v)});
            ++i;
            ++j;
        }
    }
    r.e = std::move(out);
    mpz_class g = r.strip_content();
    return Rational(a, g);
}

// Clears denominators and strips content. When `scale` is given it receives
// the positive rational s with result == s * input.
inline IntRow to_int_row(const std::vector<std::pair<int, Rational>>& sparse_row,
                         Rational* scale = nullptr) {
    mpz_class l = 1;
    for (const auto& [c, v] : sparse_row)
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.denominator().get_mpz_t());
    IntRow r;
    r.e.reserve(sparse_row.size());
    for (const auto& [c, v] : sparse_row) {
        mpz_class scaled = v.numerator() * (l / v.denominator());
        if (scaled != 0) r.e.push_back({c, std::move(scaled)});
    }
    std::sort(r.e.begin(), r.e.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    mpz_class g = r.strip_content();
    if (scale) *scale = g == 0 ? Rational(1) : Rational(mpz_class(l), g);
    return r;
}

// Incremental row-echelon accumulator over Q (fraction-free integer rows).
// Pivot rows are keyed by leading column; each incoming row is reduced
// against existing pivots and becomes a new pivot if nonzero.
struct EchelonQ {
    std::map<int, IntRow> pivots;

    // Returns true if the row increased the rank.
    bool insert(IntRow r) {
        while (!r.empty()) {
            auto it = pivots.find(r.lead());
            if (it == pivots.end()) {
                pivots.emplace(r.lead(), std::move(r));
                return true;
            }
            eliminate(r, it->second);
        }
        return false;
    }

    // Full normal form: eliminates every pivot column from the row, not just
    // the leading one. `scale` (if given) receives the positive rational s
    // such that the result is congruent to s * input modulo the row space.
    IntRow reduce(IntRow r, Rational* scale = nullptr) const {
        Rational s(1);
        size_t pos = 0;
        while (pos < r.e.size()) {
            auto it = pivots.find(r.e[pos].first);
            if (it == pivots.end()) {
                ++pos;  // eliminations only touch columns to the right
                continue;
            }
            s *= eliminate(r, it->second);
        }
        if (scale) *scale = s;
        return r;
    }

    int rank() const { return static_cast<int>(pivots.size()); }
};

// Row-echelon over F_p, same interface.
struct EchelonP {
    std::uint64_t p;
    std::map<int, std::vector<std::pair<int, std::uint64_t>>> pivots;

    explicit EchelonP(std::uint64_t prime) : p(prime) {}

    bool insert(std::vector<std::pair<int, std::uint64_t>> r) {
        normalize(r);
        while (!r.empty()) {
            auto it = pivots.find(r.front().first);
            if (it == pivots.end()) {
                // Scale so the leading entry is 1.
                std::uint64_t s = fp::inv(r.front().second, p);
                for (auto& [c, v] : r) v = fp::mul(v, s, p);
                pivots.emplace(r.front().first, std::move(r));
                return true;
            }
            subtract_pivot(r, it->second);
        }
        return false;
    }

    int rank() const { return static_cast<int>(pivots.size()); }

private:
    void normalize(std::vector<std::pair<int, std::uint64_t>>& r) const {
        std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        r.erase(std::remove_if(r.begin(), r.end(), [](const auto& e) { return e.second == 0; }),
                r.end());
    }

    void subtract_pivot(std::vector<std::pair<int, std::uint64_t>>& r,
                        const std::vector<std::pair<int, std::uint64_t>>& piv) const {
        std::uint64_t b = r.front().second;  // pivot row is monic
        std::vector<std::pair<int, std::uint64_t>> out;
        out.reserve(r.size() + piv.size());
        size_t i = 0, j = 0;
        while (i < r.size() || j < piv.size()) {
            if (j == piv.size() || (i < r.size() && r[i].first < piv[j].first)) {
                out.push_back(r[i++]);
            } else if (i == r.size() || piv[j].first < r[i].first) {
                out.push_back({piv[j].first, fp::sub(0, fp::mul(b, piv[j].second, p), p)});
                ++j;
            } else {
                std::uint64_t v = fp::sub(r[i].second, fp::mul(b, piv[j].second, p), p);
                if (v != 0) out.push_back({r[i].first, v});
                ++i;
                ++j;
            }
        }
        r = std::move(out);
    }
};

// Rows of a matrix ordered cheapest-first: fewer nonzeros, then smaller
// entries. This is the pivoting heuristic: small sparse rows first keeps
// coefficient growth down in the fraction-free elimination.
inline std::vector<std::vector<std::pair<int, Rational>>> gather_rows(const SparseMatrix& m) {
    std::vector<std::vector<std::pair<int, Rational>>> rows(m.rows());
    for (const auto& [rc, v] : m.entries()) rows[rc.first].push_back({rc.second, v});
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        size_t sa = 0, sb = 0;
        for (const auto& [c, v] : a) sa += v.size_metric();
        for (const auto& [c, v] : b) sb += v.size_metric();
        return sa < sb;
    });
    return rows;
}

}  // namespace detail

/// Exact rank over Q, or over F_p when the field selects a prime.
inline int rank(const SparseMatrix& m, const FieldSpec& field = FieldSpec::rationals()) {
    auto rows = detail::gather_rows(m);
    if (field.is_rational()) {
        detail::EchelonQ ech;
        for (auto& row : rows)
            if (!row.empty()) ech.insert(detail::to_int_row(row));
        return ech.rank();
    }
    detail::EchelonP ech(field.prime);
    for (auto& row : rows) {
        if (row.empty()) continue;
        std::vector<std::pair<int, std::uint64_t>> r;
        r.reserve(row.size());
        for (const auto& [c, v] : row) r.push_back({c, fp::reduce(v, field.prime)});
        ech.insert(std::move(r));
    }
    return ech.rank();
}

/// Exact basis of the kernel. Vectors satisfy m * v = 0; their count is
/// cols - rank. Over F_p the vectors have integer entries in [0, p).
inline std::vector<std::vector<Rational>> kernel_basis(const SparseMatrix& m,
                                                       const FieldSpec& field = FieldSpec::rationals()) {
    const int n = m.cols();
    std::vector<std::vector<Rational>> basis;

    if (field.is_rational()) {
        // Reduced row echelon form over Q with dense rows (matrices passed
        // here are small; rank() is the workhorse elsewhere).
        std::vector<std::vector<Rational>> rr;
        for (auto& row : detail::gather_rows(m)) {
            if (row.empty()) continue;
            std::vector<Rational> dense(n, Rational(0));
            for (const auto& [c, v] : row) dense[c] = v;
            rr.push_back(std::move(dense));
        }
        std::vector<int> pivot_col;
        size_t piv_rows = 0;
        for (int c = 0; c < n && piv_rows < rr.size(); ++c) {
            size_t sel = piv_rows;
            while (sel < rr.size() && rr[sel][c].is_zero()) ++sel;
            if (sel == rr.size()) continue;
            std::swap(rr[piv_rows], rr[sel]);
            Rational inv = Rational(1) / rr[piv_rows][c];
            for (int j = c; j < n; ++j) rr[piv_rows][j] *= inv;
            for (size_t r = 0; r < rr.size(); ++r) {
                if (r == piv_rows || rr[r][c].is_zero()) continue;
                Rational f = rr[r][c];
                for (int j = c; j < n; ++j) rr[r][j] -= f * rr[piv_rows][j];
            }
            pivot_col.push_back(c);
            ++piv_rows;
        }
        std::vector<bool> is_pivot(n, false);
        for (int c : pivot_col) is_pivot[c] = true;
        for (int c = 0; c < n; ++c) {
            if (is_pivot[c]) continue;
            std::vector<Rational> v(n, Rational(0));
            v[c] = Rational(1);
            for (size_t r = 0; r < pivot_col.size(); ++r) v[pivot_col[r]] = -rr[r][c];
            basis.push_back(std::move(v));
        }
        return basis;
    }

    const std::uint64_t p = field.prime;
    std::vector<std::vector<std::uint64_t>> rr;
    for (auto& row : detail::gather_rows(m)) {
        if (row.empty()) continue;
        std::vector<std::uint64_t> dense(n, 0);
        for (const auto& [c, v] : row) dense[c] = fp::reduce(v, p);
        rr.push_back(std::move(dense));
    }
    std::vector<int> pivot_col;
    size_t piv_rows = 0;
    for (int c = 0; c < n && piv_rows < rr.size(); ++c) {
        size_t sel = piv_rows;
        while (sel < rr.size() && rr[sel][c] == 0) ++sel;
        if (sel == rr.size()) continue;
        std::swap(rr[piv_rows], rr[sel]);
        std::uint64_t inv = fp::inv(rr[piv_rows][c], p);
        for (int j = c; j < n; ++j) rr[piv_rows][j] = fp::mul(rr[piv_rows][j], inv, p);
        for (size_t r = 0; r < rr.size(); ++r) {
            if (r == piv_rows || rr[r][c] == 0) continue;
            std::uint64_t f = rr[r][c];
            for (int j = c; j < n; ++j)
                rr[r][j] = fp::sub(rr[r][j], fp::mul(f, rr[piv_rows][j], p), p);
        }
        pivot_col.push_back(c);
        ++piv_rows;
    }
    std::vector<bool> is_pivot(n, false);
    for (int c : pivot_col) is_pivot[c] = true;
    for (int c = 0; c < n; ++c) {
        if (is_pivot[c]) continue;
        std::vector<Rational> v(n, Rational(0));
        v[c] = Rational(1);
        for (size_t r = 0; r < pivot_col.size(); ++r) {
            std::uint64_t neg = rr[r][c] == 0 ? 0 : p - rr[r][c];
            v[pivot_col[r]] = Rational(static_cast<long>(neg));
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace opforge
