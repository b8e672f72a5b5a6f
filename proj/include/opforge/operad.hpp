#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "opforge/free_operad.hpp"
#include "opforge/graded.hpp"

namespace opforge {

using Coords = std::map<int, Rational>;

inline void coords_axpy(Coords& acc, const Rational& c, const Coords& v) {
    if (c.is_zero()) return;
    for (const auto& [i, x] : v) {
        auto it = acc.find(i);
        if (it == acc.end())
            acc.emplace(i, c * x);
        else {
            it->second += c * x;
            if (it->second.is_zero()) acc.erase(it);
        }
    }
}

inline SparseMatrix columns_to_matrix(int rows, const std::vector<Coords>& cols) {
    SparseMatrix m(rows, static_cast<int>(cols.size()));
    for (size_t c = 0; c < cols.size(); ++c)
        for (const auto& [r, v] : cols[c]) m.set(r, static_cast<int>(c), v);
    return m;
}

inline Coords apply_matrix(const SparseMatrix& m, const Coords& v) {
    Coords out;
    for (const auto& [rc, val] : m.entries()) {
        auto it = v.find(rc.second);
        if (it == v.end()) continue;
        auto pos = out.find(rc.first);
        if (pos == out.end())
            out.emplace(rc.first, val * it->second);
        else {
            pos->second += val * it->second;
            if (pos->second.is_zero()) out.erase(pos);
        }
    }
    return out;
}

/// Orientation-comparison sign for the one-dimensional suspension spaces:
/// the sign relating or(I) ^ or(J) to or(I u_a J) in the splice convention
/// (I = {1..i}, J inserted at slot a), where or(K) is the wedge of the
/// difference functionals anchored at min(K). Raised to the n-th power by
/// callers for the n-fold suspension.
inline int suspension_splice_sign(int i, int a, int j) {
    const int total = i + j - 1;
    const int dim = total - 1;
    if (dim <= 0) return 1;
    // Functional basis g_t = dx_t - dx_1, t = 2..total. Rows: pullbacks of
    // or(I) then or(J); sign = det.
    auto rho = [&](int s) { return s < a ? s : (s == a ? a : s + j - 1); };
    std::vector<std::vector<Rational>> m(dim, std::vector<Rational>(dim, Rational(0)));
    int row = 0;
    auto put = [&](int r, int col_label, long v) {
        if (col_label >= 2) m[r][col_label - 2] += Rational(v);
    };
    for (int s = 2; s <= i; ++s, ++row) {
        put(row, rho(s), 1);
        put(row, rho(1), -1);
    }
    for (int u = 2; u <= j; ++u, ++row) {
        put(row, a + u - 1, 1);
        put(row, a, -1);
    }
    // Sign of the determinant by exact Gaussian elimination.
    int sign = 1;
    for (int c = 0; c < dim; ++c) {
        int piv = -1;
        for (int r = c; r < dim; ++r)
            if (!m[r][c].is_zero()) { piv = r; break; }
        if (piv < 0) throw std::logic_error("suspension sign: singular comparison matrix");
        if (piv != c) {
            std::swap(m[piv], m[c]);
            sign = -sign;
        }
        if (m[c][c].sign() < 0) sign = -sign;
        for (int r = c + 1; r < dim; ++r) {
            if (m[r][c].is_zero()) continue;
            Rational f = m[r][c] / m[c][c];
            for (int cc = c; cc < dim; ++cc) m[r][cc] -= f * m[c][cc];
        }
    }
    return sign;
}

/// Sign of a bijection acting on the suspension line: the permutation sign
/// between the sorted source and target labels.
inline int suspension_action_sign(const Bijection& sigma) { return sigma.sorted_sign(); }

/// An operad of graded vector spaces with chosen bases. Compositions follow
/// the splice convention: composing arity i at slot a with arity j yields an
/// element whose slots 1..a-1 come from the outer factor, a..a+j-1 from the
/// inner factor, and the rest from the outer factor shifted up.
class Operad : public std::enable_shared_from_this<Operad> {
public:
    using Ptr = std::shared_ptr<const Operad>;
    virtual ~Operad() = default;

    virtual std::string name() const = 0;
    /// Largest arity with composition/action tables (basis enumeration and
    /// Poincaré polynomials work beyond it).
    virtual int table_cap() const = 0;
    virtual GradedSpace space(int k) const = 0;
    virtual Coords compose(int i, int a, int j, int x, int y) const = 0;
    virtual SparseMatrix action(int k, const Bijection& sigma) const = 0;

    virtual bool unital() const { return false; }
    virtual Coords forget(int k, int pos, int x) const {
        (void)k; (void)pos; (void)x;
        throw std::domain_error(name() + " has no unitary extension");
    }

    /// Binary generators as (display name, basis index in space(2)).
    virtual std::vector<std::pair<std::string, int>> generator_list() const = 0;
    /// Relation rows over the free-engine arity-3 tree basis (saturated
    /// under relabelings).
    virtual const RelationSet& relations() const = 0;
    virtual const FreeEngine& engine() const = 0;
    /// Lift of a basis element as a generator tree (arity >= 2).
    virtual Tree lift(int k, int x) const = 0;

    /// Non-null when this operad is a suspension wrapper.
    virtual Ptr suspension_base() const { return nullptr; }
    virtual int suspension_shift() const { return 0; }

    Poly poincare(int k) const { return space(k).poincare(); }
};

/// The built-in presented operads: com, lie (bracket of degree -1) and
/// pois(n) (product of degree 0, bracket of degree n-1). Normal bases are
/// products of Lyndon-word standard bracketings over set partitions; the
/// rewrite map is coset projection modulo the relation ideal in the free
/// operad, which audits the basis dimensions on construction.
class BuiltinOperad : public Operad {
public:
    enum class Kind { Com, Lie, Pois };

    static Ptr com() { return Ptr(new BuiltinOperad(Kind::Com, 0)); }
    static Ptr lie() { return Ptr(new BuiltinOperad(Kind::Lie, 0)); }
    static Ptr pois(int n) {
        if (n < 1) throw std::invalid_argument("pois(n) needs n >= 1");
        return Ptr(new BuiltinOperad(Kind::Pois, n));
    }

    Kind kind() const { return kind_; }
    int pois_n() const { return n_; }
    int bracket_degree() const { return kind_ == Kind::Lie ? -1 : n_ - 1; }

    std::string name() const override {
        switch (kind_) {
            case Kind::Com: return "com";
            case Kind::Lie: return "lie";
            default: return "pois(" + std::to_string(n_) + ")";
        }
    }

    int table_cap() const override {
        switch (kind_) {
            case Kind::Com: return 12;
            case Kind::Lie: return 6;
            default: return 5;
        }
    }

    /// A basis monomial: partition blocks (sorted by minimum), each carrying
    /// a multilinear Lyndon word.
    struct Monomial {
        std::vector<std::vector<int>> words;

        int degree(int bracket_deg) const {
            int d = 0;
            for (const auto& w : words) d += bracket_deg * (static_cast<int>(w.size()) - 1);
            return d;
        }

        std::string label() const {
            bool compact = true;
            for (const auto& w : words)
                for (int l : w)
                    if (l > 9) compact = false;
            std::string s;
            for (size_t b = 0; b < words.size(); ++b) {
                if (b) s += "\xc2\xb7";  // middle dot
                s += word_label(words[b], compact);
            }
            return s;
        }

        static std::string word_label(const std::vector<int>& w, bool compact) {
            if (w.size() == 1) return std::to_string(w[0]);
            size_t split = split_point(w);
            std::vector<int> u(w.begin(), w.begin() + split), v(w.begin() + split, w.end());
            std::string sep = compact ? "" : ",";
            return "[" + word_label(u, compact) + sep + word_label(v, compact) + "]";
        }

        /// Standard factorization w = uv of a multilinear Lyndon word:
        /// v starts at the minimum of w[1:].
        static size_t split_point(const std::vector<int>& w) {
            size_t arg = 1;
            for (size_t i = 2; i < w.size(); ++i)
                if (w[i] < w[arg]) arg = i;
            return arg;
        }
    };

    const std::vector<Monomial>& monomials(int k) const {
        std::lock_guard<std::mutex> lock(mu_);
        return monomials_locked(k);
    }

    GradedSpace space(int k) const override {
        std::lock_guard<std::mutex> lock(mu_);
        const auto& ms = monomials_locked(k);
        std::vector<std::pair<std::string, int>> basis;
        basis.reserve(ms.size());
        for (const auto& m : ms) basis.push_back({m.label(), m.degree(bracket_degree())});
        return GradedSpace(std::move(basis));
    }

    Coords compose(int i, int a, int j, int x, int y) const override {
        if (a < 1 || a > i) throw std::invalid_argument("compose: slot out of range");
        if (i == 1) return {{y, Rational(1)}};
        if (j == 1) return {{x, Rational(1)}};
        if (kind_ == Kind::Com) return {{0, Rational(1)}};
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(i, a, j, x, y);
        auto it = compose_cache_.find(key);
        if (it != compose_cache_.end()) return it->second;
        const int k = i + j - 1;
        const QuotientArity& q = quotient_locked(k);
        auto [tidx, sign] = engine_.compose(i, a, lift_locked(i, x), j, lift_locked(j, y));
        Coords out = q.project({{tidx, Rational(sign)}});
        compose_cache_.emplace(key, out);
        return out;
    }

    SparseMatrix action(int k, const Bijection& sigma) const override {
        if (sigma.domain() != FiniteSet::standard(k))
            throw std::invalid_argument("action: bijection must permute {1..k}");
        if (k == 1 || kind_ == Kind::Com) {
            SparseMatrix m(dim(k), dim(k));
            for (int i = 0; i < dim(k); ++i) m.set(i, i, Rational(1));
            return m;
        }
        std::lock_guard<std::mutex> lock(mu_);
        std::string key = std::to_string(k) + ":";
        for (const auto& [a, b] : sigma.entries()) key += std::to_string(b) + ",";
        auto it = action_cache_.find(key);
        if (it != action_cache_.end()) return it->second;
        const QuotientArity& q = quotient_locked(k);
        const auto& ms = monomials_locked(k);
        std::vector<Coords> cols(ms.size());
        for (size_t x = 0; x < ms.size(); ++x) {
            auto [tidx, sign] = engine_.relabel(k, sigma, lift_locked(k, static_cast<int>(x)));
            cols[x] = q.project({{tidx, Rational(sign)}});
        }
        SparseMatrix m = columns_to_matrix(static_cast<int>(ms.size()), cols);
        action_cache_.emplace(std::move(key), m);
        return m;
    }

    bool unital() const override { return kind_ != Kind::Lie; }

    Coords forget(int k, int pos, int x) const override {
        if (kind_ == Kind::Lie) throw std::domain_error("lie has no unitary extension");
        if (k < 2) throw std::invalid_argument("forget: arity must be >= 2");
        if (pos < 1 || pos > k) throw std::invalid_argument("forget: position out of range");
        std::lock_guard<std::mutex> lock(mu_);
        const Monomial& m = monomials_locked(k).at(x);
        // A bare factor at pos is dropped (silently, degree 0); a bracket
        // word of length >= 2 containing pos is killed.
        std::vector<std::vector<int>> words;
        for (const auto& w : m.words) {
            bool has = std::find(w.begin(), w.end(), pos) != w.end();
            if (has) {
                if (w.size() > 1) return {};
                continue;
            }
            std::vector<int> relabeled;
            relabeled.reserve(w.size());
            for (int l : w) relabeled.push_back(l > pos ? l - 1 : l);
            words.push_back(std::move(relabeled));
        }
        Monomial target{std::move(words)};
        const auto& ms = monomials_locked(k - 1);
        for (size_t t = 0; t < ms.size(); ++t)
            if (ms[t].words == target.words) return {{static_cast<int>(t), Rational(1)}};
        throw std::logic_error("forget: target monomial missing from basis");
    }

    std::vector<std::pair<std::string, int>> generator_list() const override {
        std::lock_guard<std::mutex> lock(mu_);
        const auto& ms = monomials_locked(2);
        auto find = [&](const std::vector<std::vector<int>>& words) {
            for (size_t i = 0; i < ms.size(); ++i)
                if (ms[i].words == words) return static_cast<int>(i);
            throw std::logic_error("generator missing from arity-2 basis");
        };
        switch (kind_) {
            case Kind::Com: return {{"product", find({{1}, {2}})}};
            case Kind::Lie: return {{"bracket", find({{1, 2}})}};
            default: return {{"product", find({{1}, {2}})}, {"bracket", find({{1, 2}})}};
        }
    }

    const RelationSet& relations() const override { return relations_; }
    const FreeEngine& engine() const override { return engine_; }

    Tree lift(int k, int x) const override {
        std::lock_guard<std::mutex> lock(mu_);
        return lift_locked(k, x);
    }

    /// Builds the coset projector at arity k, which audits that the ideal
    /// rank equals dim F(k) - (number of basis monomials) and that the
    /// monomial lifts stay independent. The independent rank oracle.
    void audit(int k) const {
        std::lock_guard<std::mutex> lock(mu_);
        quotient_locked(k);
    }

    int dim(int k) const { return static_cast<int>(monomials(k).size()); }

private:
    BuiltinOperad(Kind kind, int n)
        : kind_(kind), n_(n), engine_(make_generators(kind, n)) {
        build_relations();
    }

    static std::vector<Generator> make_generators(Kind kind, int n) {
        switch (kind) {
            case Kind::Com: return {{"m", 0, +1}};
            case Kind::Lie: return {{"b", -1, +1}};
            default:
                // Bracket transposition sign (-1)^n: antisymmetric for odd n
                // (classical Poisson), symmetric for even n.
                return {{"m", 0, +1}, {"b", n - 1, n % 2 == 0 ? +1 : -1}};
        }
    }

    int gen_m() const { return 0; }
    int gen_b() const { return kind_ == Kind::Pois ? 1 : 0; }

    // Relation instances over the arity-3 tree basis, saturated under the
    // six leaf relabelings so the planted ideal is the full stable ideal.
    // Instances are written as raw trees exactly as the identities read;
    // canonicalization supplies the parity-dependent signs.
    void build_relations() {
        std::vector<FreeVec> raw;
        auto leaf = [](int l) { return BuildNode::leaf(l); };
        auto node = [](int gen, BuildNode a, BuildNode b) {
            return BuildNode::vertex(gen, {std::move(a), std::move(b)});
        };
        auto add_term = [&](FreeVec& v, const BuildNode& b, long coeff) {
            auto [idx, sign] = engine_.canon_index(b);
            axpy(v, Rational(coeff * sign), {{idx, Rational(1)}});
        };
        const int m = gen_m(), b = gen_b();
        if (kind_ != Kind::Lie) {
            // (1*2)*3 - 1*(2*3)
            FreeVec assoc;
            add_term(assoc, node(m, node(m, leaf(1), leaf(2)), leaf(3)), 1);
            add_term(assoc, node(m, leaf(1), node(m, leaf(2), leaf(3))), -1);
            raw.push_back(std::move(assoc));
        }
        if (kind_ != Kind::Com) {
            // [[1,2],3] + [[2,3],1] + [[3,1],2]
            FreeVec jac;
            add_term(jac, node(b, node(b, leaf(1), leaf(2)), leaf(3)), 1);
            add_term(jac, node(b, node(b, leaf(2), leaf(3)), leaf(1)), 1);
            add_term(jac, node(b, node(b, leaf(3), leaf(1)), leaf(2)), 1);
            raw.push_back(std::move(jac));
        }
        if (kind_ == Kind::Pois) {
            // [1, 2*3] - [1,2]*3 - 2*[1,3]
            FreeVec der;
            add_term(der, node(b, leaf(1), node(m, leaf(2), leaf(3))), 1);
            add_term(der, node(m, node(b, leaf(1), leaf(2)), leaf(3)), -1);
            add_term(der, node(m, leaf(2), node(b, leaf(1), leaf(3))), -1);
            raw.push_back(std::move(der));
        }
        // Saturate over all relabelings of {1,2,3}.
        const auto& sp3 = engine_.space(3);
        std::vector<int> perm = {1, 2, 3};
        std::sort(perm.begin(), perm.end());
        do {
            Bijection sigma(std::map<int, int>{{1, perm[0]}, {2, perm[1]}, {3, perm[2]}});
            for (const auto& row : raw) {
                FreeVec image;
                for (const auto& [t, c] : row) {
                    auto [idx, sign] = engine_.relabel(3, sigma, sp3.trees[t]);
                    axpy(image, c * Rational(sign), {{idx, Rational(1)}});
                }
                if (!image.empty()) relations_.rows.push_back(std::move(image));
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    const std::vector<Monomial>& monomials_locked(int k) const {
        auto it = monomials_.find(k);
        if (it != monomials_.end()) return it->second;
        if (k < 0) throw std::invalid_argument("operad arity must be >= 1");
        if (k == 0) throw std::invalid_argument("operads have no arity-0 space (see modules)");
        if (k > 9) throw std::domain_error("basis enumeration capped at arity 9");
        std::vector<Monomial> out;
        if (k == 1) {
            out.push_back(Monomial{{{1}}});
        } else {
            std::vector<int> labels(k);
            for (int i = 0; i < k; ++i) labels[i] = i + 1;
            switch (kind_) {
                case Kind::Com:
                    out.push_back(all_singletons(labels));
                    break;
                case Kind::Lie:
                    for (auto& w : lyndon_words(labels)) out.push_back(Monomial{{w}});
                    break;
                case Kind::Pois:
                    for (const auto& part : detail::set_partitions(labels)) {
                        std::vector<std::vector<std::vector<int>>> options;
                        for (const auto& block : part) options.push_back(lyndon_words(block));
                        std::vector<size_t> pick(options.size(), 0);
                        while (true) {
                            Monomial m;
                            for (size_t i = 0; i < options.size(); ++i)
                                m.words.push_back(options[i][pick[i]]);
                            out.push_back(std::move(m));
                            size_t i = 0;
                            while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
                            if (i == pick.size()) break;
                        }
                    }
                    break;
            }
        }
        const int bd = bracket_degree();
        std::stable_sort(out.begin(), out.end(), [&](const Monomial& a, const Monomial& b) {
            int da = a.degree(bd), db = b.degree(bd);
            if (da != db) return da < db;
            return a.label() < b.label();
        });
        return monomials_.emplace(k, std::move(out)).first->second;
    }

    static Monomial all_singletons(const std::vector<int>& labels) {
        Monomial m;
        for (int l : labels) m.words.push_back({l});
        return m;
    }

    /// Multilinear Lyndon words on a sorted label set: the minimum followed
    /// by every permutation of the rest, in lexicographic order.
    static std::vector<std::vector<int>> lyndon_words(std::vector<int> labels) {
        std::sort(labels.begin(), labels.end());
        std::vector<int> rest(labels.begin() + 1, labels.end());
        std::vector<std::vector<int>> out;
        std::sort(rest.begin(), rest.end());
        do {
            std::vector<int> w = {labels[0]};
            w.insert(w.end(), rest.begin(), rest.end());
            out.push_back(std::move(w));
        } while (std::next_permutation(rest.begin(), rest.end()));
        return out;
    }

    static BuildNode word_tree(const std::vector<int>& w, int bgen) {
        if (w.size() == 1) return BuildNode::leaf(w[0]);
        size_t split = Monomial::split_point(w);
        std::vector<int> u(w.begin(), w.begin() + split), v(w.begin() + split, w.end());
        return BuildNode::vertex(bgen, {word_tree(u, bgen), word_tree(v, bgen)});
    }

    Tree lift_locked(int k, int x) const {
        auto key = std::make_pair(k, x);
        auto it = lift_cache_.find(key);
        if (it != lift_cache_.end()) return it->second;
        const Monomial& m = monomials_locked(k).at(x);
        if (k < 2) throw std::invalid_argument("lift: arity-1 unit has no tree");
        // Right comb of products over the blocks, each block its standard
        // bracketing. Already in canonical child order, so the lift sign
        // must be +1; anything else means a convention drift.
        BuildNode b = comb(m, 0);
        auto [tree, sign] = engine_.canon_signed(b);
        if (sign != 1) throw std::logic_error("monomial lift acquired a sign");
        lift_cache_.emplace(key, tree);
        return tree;
    }

    BuildNode comb(const Monomial& m, size_t from) const {
        if (from + 1 == m.words.size()) return word_tree(m.words[from], gen_b());
        return BuildNode::vertex(gen_m(), {word_tree(m.words[from], gen_b()), comb(m, from + 1)});
    }

    const QuotientArity& quotient_locked(int k) const {
        auto it = quotients_.find(k);
        if (it != quotients_.end()) return *it->second;
        if (k > table_cap() && kind_ != Kind::Com)
            throw std::domain_error(name() + ": rewriting tables capped at arity " +
                                    std::to_string(table_cap()));
        if (k < 3) {
            // Arity 2 has no relations.
            return build_quotient(k, {});
        }
        std::vector<FreeVec> rows;
        if (k == 3)
            rows = relations_.rows;
        else
            rows = ideal_rows_step(engine_, k, quotient_locked(k - 1).rref_rows());
        return build_quotient(k, rows);
    }

    const QuotientArity& build_quotient(int k, const std::vector<FreeVec>& rows) const {
        const auto& ms = monomials_locked(k);
        std::vector<int> lifts;
        lifts.reserve(ms.size());
        for (size_t x = 0; x < ms.size(); ++x)
            lifts.push_back(engine_.index_of(k, lift_locked(k, static_cast<int>(x))));
        auto q = std::make_unique<QuotientArity>(engine_, k, rows, lifts);
        return *quotients_.emplace(k, std::move(q)).first->second;
    }

    Kind kind_;
    int n_;
    FreeEngine engine_;
    RelationSet relations_;
    mutable std::mutex mu_;
    mutable std::map<int, std::vector<Monomial>> monomials_;
    mutable std::map<int, std::unique_ptr<QuotientArity>> quotients_;
    mutable std::map<std::pair<int, int>, Tree> lift_cache_;
    mutable std::map<std::tuple<int, int, int, int, int>, Coords> compose_cache_;
    mutable std::map<std::string, SparseMatrix> action_cache_;
};

/// Operadic n-fold suspension: same basis labels, arity-k degrees shifted
/// by n(k-1), compositions twisted by the orientation sign of the
/// suspension line and the Koszul sign of the inner line passing the outer
/// element, actions twisted by the n-th power of the permutation sign.
class SuspendedOperad : public Operad {
public:
    SuspendedOperad(Ptr base, int n) : base_(std::move(base)), n_(n) {}

    std::string name() const override {
        return "s_" + std::to_string(n_) + " " + base_->name();
    }
    int table_cap() const override { return base_->table_cap(); }

    GradedSpace space(int k) const override {
        GradedSpace base = base_->space(k);
        std::vector<std::pair<std::string, int>> basis;
        basis.reserve(base.dim());
        for (int i = 0; i < base.dim(); ++i)
            basis.push_back({base.label(i), base.degree(i) + n_ * (k - 1)});
        return GradedSpace(std::move(basis));
    }

    Coords compose(int i, int a, int j, int x, int y) const override {
        Coords base = base_->compose(i, a, j, x, y);
        if (n_ % 2 == 0) return base;
        int sign = suspension_splice_sign(i, a, j);
        // The inner suspension line (degree n(j-1)) passes the outer basis
        // element.
        if ((j - 1) % 2 != 0 && base_->space(i).degree(x) % 2 != 0) sign = -sign;
        if (sign == 1) return base;
        Coords out;
        for (const auto& [b, c] : base) out[b] = -c;
        return out;
    }

    SparseMatrix action(int k, const Bijection& sigma) const override {
        SparseMatrix m = base_->action(k, sigma);
        if (n_ % 2 != 0 && suspension_action_sign(sigma) < 0) {
            SparseMatrix neg(m.rows(), m.cols());
            for (const auto& [rc, v] : m.entries()) neg.set(rc.first, rc.second, -v);
            return neg;
        }
        return m;
    }

    std::vector<std::pair<std::string, int>> generator_list() const override {
        return base_->generator_list();
    }
    const RelationSet& relations() const override { return base_->relations(); }
    const FreeEngine& engine() const override { return base_->engine(); }
    Tree lift(int k, int x) const override { return base_->lift(k, x); }

    Ptr suspension_base() const override { return base_; }
    int suspension_shift() const override { return n_; }

private:
    Ptr base_;
    int n_;
};

inline Operad::Ptr suspend(Operad::Ptr o, int n) {
    if (n == 0) return o;
    return std::make_shared<SuspendedOperad>(std::move(o), n);
}

/// An element of O(I): exact coordinates over the standard basis at arity
/// |I|, slots identified with the sorted labels of I.
class OperadElement {
public:
    OperadElement(Operad::Ptr op, FiniteSet set, Coords coords)
        : op_(std::move(op)), set_(std::move(set)), coords_(std::move(coords)) {}

    static OperadElement basis(Operad::Ptr op, FiniteSet set, int index) {
        return OperadElement(std::move(op), std::move(set), {{index, Rational(1)}});
    }
    static OperadElement zero(Operad::Ptr op, FiniteSet set) {
        return OperadElement(std::move(op), std::move(set), {});
    }

    const Operad::Ptr& operad() const { return op_; }
    const FiniteSet& set() const { return set_; }
    int arity() const { return set_.size(); }
    const Coords& coords() const { return coords_; }
    bool is_zero() const { return coords_.empty(); }

    /// Reinterpret on another set of the same size (order-preserving).
    OperadElement with_set(FiniteSet s) const {
        if (s.size() != set_.size()) throw std::invalid_argument("with_set: size mismatch");
        return OperadElement(op_, std::move(s), coords_);
    }

    OperadElement operator+(const OperadElement& o) const {
        require_same(o);
        Coords c = coords_;
        coords_axpy(c, Rational(1), o.coords_);
        return OperadElement(op_, set_, std::move(c));
    }
    OperadElement operator-(const OperadElement& o) const {
        require_same(o);
        Coords c = coords_;
        coords_axpy(c, Rational(-1), o.coords_);
        return OperadElement(op_, set_, std::move(c));
    }
    OperadElement operator*(const Rational& r) const {
        Coords c;
        for (const auto& [i, v] : coords_)
            if (!(v * r).is_zero()) c[i] = v * r;
        return OperadElement(op_, set_, std::move(c));
    }
    friend bool operator==(const OperadElement& a, const OperadElement& b) {
        return a.set_ == b.set_ && a.coords_ == b.coords_;
    }

    /// Functorial action of a bijection sigma: I -> I'.
    OperadElement relabeled(const Bijection& sigma) const {
        if (sigma.domain() != set_) throw std::invalid_argument("relabeled: domain mismatch");
        FiniteSet target = sigma.codomain();
        // Conjugate to the standard permutation between sorted positions.
        std::map<int, int> std_map;
        for (int i = 0; i < set_.size(); ++i) {
            int from = set_.labels()[i];
            std_map[i + 1] = target.index_of(sigma(from)) + 1;
        }
        SparseMatrix m = op_->action(arity(), Bijection(std::move(std_map)));
        return OperadElement(op_, std::move(target), apply_matrix(m, coords_));
    }

    /// Partial composition at position a (an element of this element's set).
    OperadElement compose_at(int a, const OperadElement& y) const {
        if (op_.get() != y.op_.get())
            throw std::invalid_argument("compose_at: operads differ");
        CompositeSet comp = infinitesimal_composite(set_, a, y.set());
        const int i = arity(), j = y.arity();
        const int slot = set_.index_of(a) + 1;
        Coords raw;
        for (const auto& [x, cx] : coords_)
            for (const auto& [yy, cy] : y.coords_)
                coords_axpy(raw, cx * cy, op_->compose(i, slot, j, x, yy));
        // Conjugate splice positions to the sorted order of the composite.
        std::map<int, int> to_sorted;
        for (int p = 1; p <= i + j - 1; ++p) {
            int label;
            if (p < slot)
                label = set_.labels()[p - 1];
            else if (p < slot + j)
                label = comp.j_relabel(y.set().labels()[p - slot]);
            else
                label = set_.labels()[p - j];
            to_sorted[p] = comp.set.index_of(label) + 1;
        }
        SparseMatrix m = op_->action(i + j - 1, Bijection(std::move(to_sorted)));
        return OperadElement(op_, comp.set, apply_matrix(m, raw));
    }

    /// Unitary forgetting map: substitute the unit at position a.
    OperadElement forget(int a) const {
        if (!op_->unital()) throw std::domain_error(op_->name() + " has no unitary extension");
        if (arity() < 2) throw std::invalid_argument("forget: arity must be >= 2");
        const int pos = set_.index_of(a) + 1;
        Coords out;
        for (const auto& [x, c] : coords_) coords_axpy(out, c, op_->forget(arity(), pos, x));
        return OperadElement(op_, set_.without(a), std::move(out));
    }

    std::string str() const {
        if (coords_.empty()) return "0";
        GradedSpace sp = op_->space(arity());
        std::string s;
        bool first = true;
        for (const auto& [i, c] : coords_) {
            if (!first) s += " + ";
            first = false;
            s += c.str() + "*" + sp.label(i);
        }
        return s;
    }

private:
    void require_same(const OperadElement& o) const {
        if (op_.get() != o.op_.get() || set_ != o.set_)
            throw std::invalid_argument("element arithmetic: mismatched spaces");
    }

    Operad::Ptr op_;
    FiniteSet set_;
    Coords coords_;
};

/// Evaluate a binary generator tree in a target operad, substituting the
/// given elements for the generators. Children are composed left to right,
/// matching the preorder tensor-word convention of FreeEngine; vertex slots
/// are named by the minimal leaf of the corresponding subtree, so leaf slots
/// end up carrying the leaf labels and the result lives on leaves(t).
inline OperadElement evaluate_gen_tree(const Operad::Ptr& target, const Tree& t,
                                       const std::vector<Coords>& gen_image_coords) {
    // Build images on standard 2-slot sets once.
    std::vector<OperadElement> images;
    images.reserve(gen_image_coords.size());
    for (const auto& c : gen_image_coords)
        images.push_back(OperadElement(target, FiniteSet::standard(2), c));

    std::function<OperadElement(int)> ev = [&](int v) -> OperadElement {
        const auto& vert = t.vertex(v);
        if (vert.kids.size() != 2) throw std::invalid_argument("evaluate: not binary");
        int m0 = t.min_leaf_of(vert.kids[0]);
        int m1 = t.min_leaf_of(vert.kids[1]);
        OperadElement acc = images.at(vert.label).with_set(FiniteSet{m0, m1});
        for (int q = 0; q < 2; ++q) {
            const auto& c = vert.kids[q];
            int slot_name = q == 0 ? m0 : m1;
            if (c.is_leaf) continue;
            acc = acc.compose_at(slot_name, ev(c.value));
        }
        return acc;
    };
    return ev(0);
}

/// A map of operads determined by images of the source generators, with
/// relation preservation checked exactly on construction. Suspended sources
/// and targets are validated through their common de-suspension (the
/// coordinate matrices of a map and its shift agree arity by arity).
class OperadMorphism {
public:
    OperadMorphism(Operad::Ptr src, Operad::Ptr dst, std::vector<Coords> gen_images,
                   std::string name = "")
        : src_(std::move(src)), dst_(std::move(dst)), images_(std::move(gen_images)),
          name_(std::move(name)) {
        desuspend();
        check_degrees();
        check_relations();
    }

    const Operad::Ptr& source() const { return src_; }
    const Operad::Ptr& target() const { return dst_; }
    const std::string& name() const { return name_; }

    /// Matrix of the map at arity k (columns = source basis).
    SparseMatrix matrix(int k) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = matrix_cache_.find(k);
        if (it != matrix_cache_.end()) return it->second;
        const int src_dim = static_cast<int>(core_src_->space(k).dim());
        const int dst_dim = static_cast<int>(core_dst_->space(k).dim());
        std::vector<Coords> cols(src_dim);
        if (k == 1) {
            // Unit goes to unit.
            for (int x = 0; x < src_dim; ++x) cols[x] = {{x, Rational(1)}};
        } else {
            for (int x = 0; x < src_dim; ++x) {
                OperadElement img =
                    evaluate_gen_tree(core_dst_, core_src_->lift(k, x), images_);
                cols[x] = img.coords();
            }
        }
        SparseMatrix m = columns_to_matrix(dst_dim, cols);
        matrix_cache_.emplace(k, m);
        return m;
    }

    Coords apply(int k, const Coords& v) const { return apply_matrix(matrix(k), v); }

    OperadElement apply(const OperadElement& e) const {
        if (e.operad().get() != src_.get())
            throw std::invalid_argument("morphism: element not in source operad");
        return OperadElement(dst_, e.set(), apply(e.arity(), e.coords()));
    }

    /// g.compose_with(f) = g o f.
    OperadMorphism after(const OperadMorphism& f) const {
        if (f.dst_.get() != src_.get())
            throw std::invalid_argument("morphism composition: middle operad mismatch");
        std::vector<Coords> images;
        for (const auto& img : f.images_) images.push_back(apply(2, img));
        return OperadMorphism(f.src_, dst_, std::move(images),
                              name_ + " o " + f.name_);
    }

private:
    // Strip matching suspensions: a map s_n A -> B is validated and
    // tabulated as A -> s_{-n} B with identical coordinates.
    void desuspend() {
        core_src_ = src_;
        core_dst_ = dst_;
        while (core_src_->suspension_base()) {
            core_dst_ = opforge::suspend(core_dst_, -core_src_->suspension_shift());
            core_src_ = core_src_->suspension_base();
        }
    }

    void check_degrees() const {
        auto gens = core_src_->generator_list();
        if (gens.size() != images_.size())
            throw std::invalid_argument("morphism: one image per generator required");
        GradedSpace s2 = core_src_->space(2);
        GradedSpace d2 = core_dst_->space(2);
        for (size_t g = 0; g < gens.size(); ++g) {
            int want = s2.degree(gens[g].second);
            for (const auto& [idx, c] : images_[g])
                if (d2.degree(idx) != want)
                    throw StructuralError("morphism: image of " + gens[g].first +
                                          " is not degree-homogeneous of degree " +
                                          std::to_string(want));
        }
    }

    void check_relations() const {
        // Generator index in the engine == position in generator_list (the
        // builtins order them identically).
        const auto& rel = core_src_->relations();
        const auto& sp3 = core_src_->engine().space(3);
        for (const auto& row : rel.rows) {
            OperadElement acc = OperadElement::zero(core_dst_, FiniteSet::standard(3));
            for (const auto& [t, c] : row) {
                OperadElement term = evaluate_gen_tree(core_dst_, sp3.trees[t], images_);
                acc = acc + term * c;
            }
            if (!acc.is_zero())
                throw StructuralError("morphism " + name_ + ": a defining relation has nonzero image");
        }
    }

    Operad::Ptr src_, dst_;
    Operad::Ptr core_src_, core_dst_;
    std::vector<Coords> images_;
    std::string name_;
    mutable std::mutex mu_;
    mutable std::map<int, SparseMatrix> matrix_cache_;
};

/// The standard maps between the builtin operads.
///   lie -> s_{-n} pois(n)      bracket to bracket (forget the product)
///   s_{-n} pois(n) -> s_{-n} com   product to product, bracket to 0
///   s_n lie -> pois(n)         bracket to bracket
///   pois(n) -> com             product to product, bracket to 0
inline OperadMorphism builtin_morphism(const std::string& which, int n) {
    auto find_gen = [](const Operad::Ptr& o, const std::string& name) {
        for (const auto& [nm, idx] : o->generator_list())
            if (nm == name) return idx;
        throw std::invalid_argument("operad has no generator " + name);
    };
    if (which == "lie-to-spois") {
        Operad::Ptr src = BuiltinOperad::lie();
        Operad::Ptr pois = BuiltinOperad::pois(n);
        Operad::Ptr dst = suspend(pois, -n);
        Coords bracket = {{find_gen(pois, "bracket"), Rational(1)}};
        return OperadMorphism(src, dst, {bracket}, "lie->s_-" + std::to_string(n) + " pois");
    }
    if (which == "spois-to-scom") {
        Operad::Ptr pois = BuiltinOperad::pois(n);
        Operad::Ptr com = BuiltinOperad::com();
        Coords product = {{find_gen(com, "product"), Rational(1)}};
        return OperadMorphism(suspend(pois, -n), suspend(com, -n), {product, {}},
                              "s_-" + std::to_string(n) + " pois->s_-" + std::to_string(n) + " com");
    }
    if (which == "slie-to-pois") {
        Operad::Ptr pois = BuiltinOperad::pois(n);
        Coords bracket = {{find_gen(pois, "bracket"), Rational(1)}};
        return OperadMorphism(suspend(BuiltinOperad::lie(), n), pois, {bracket},
                              "s_" + std::to_string(n) + " lie->pois");
    }
    if (which == "pois-to-com") {
        Operad::Ptr pois = BuiltinOperad::pois(n);
        Operad::Ptr com = BuiltinOperad::com();
        Coords product = {{find_gen(com, "product"), Rational(1)}};
        return OperadMorphism(pois, com, {product, {}}, "pois->com");
    }
    throw std::invalid_argument("unknown builtin morphism " + which);
}

}  // namespace opforge
