#pragma once

#include <cassert>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "opforge/chain.hpp"
#include "opforge/sparse.hpp"
#include "opforge/tree.hpp"

namespace opforge {

/// A binary operation generating a free graded operad. `sym` is the sign
/// picked up when the two inputs are transposed (+1 symmetric, -1
/// antisymmetric); consistency of `sym` with the parity of `degree` is the
/// caller's responsibility and is audited by the dimension checks.
struct Generator {
    std::string name;
    int degree;
    int sym;
};

/// Sparse vector over the tree basis of one arity of a free operad,
/// keyed by interned tree index.
using FreeVec = std::map<int, Rational>;

inline void axpy(FreeVec& acc, const Rational& c, const FreeVec& v) {
    if (c.is_zero()) return;
    for (const auto& [i, x] : v) {
        auto it = acc.find(i);
        if (it == acc.end()) {
            acc.emplace(i, c * x);
        } else {
            it->second += c * x;
            if (it->second.is_zero()) acc.erase(it);
        }
    }
}

/// The free graded operad on a list of binary generators: interned tree
/// bases per arity, signed canonicalization, grafting, relabeling.
///
/// Sign model: a tree stands for the tensor product of its vertex labels in
/// preorder. Reordering vertices in the word costs the Koszul sign of the
/// permutation (degrees of the labels); transposing the children of a
/// vertex costs the generator's `sym`.
class FreeEngine {
public:
    explicit FreeEngine(std::vector<Generator> gens) : gens_(std::move(gens)) {}

    const std::vector<Generator>& generators() const { return gens_; }

    /// Interned basis of binary generator-labeled trees on {1..k}.
    struct Space {
        std::vector<Tree> trees;            // by interned index
        std::map<std::string, int> index;   // serialization -> index
    };

    const Space& space(int k) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = spaces_.find(k);
        if (it != spaces_.end()) return *it->second;
        auto sp = std::make_unique<Space>();
        auto shapes = enumerate_shapes(FiniteSet::standard(k), [](int a) { return a == 2; });
        for (const auto& shape : shapes) append_labelings(shape, *sp);
        auto [pos, ok] = spaces_.emplace(k, std::move(sp));
        return *pos->second;
    }

    int dim(int k) const { return static_cast<int>(space(k).trees.size()); }

    int index_of(int k, const Tree& t) const {
        const auto& sp = space(k);
        auto it = sp.index.find(t.serialize());
        if (it == sp.index.end()) throw std::logic_error("FreeEngine: tree not in basis");
        return it->second;
    }

    /// Canonicalize a builder whose structural preorder is the intended
    /// tensor-word order. Returns the interned index and the sign.
    std::pair<int, int> canon_index(const BuildNode& b) const {
        auto [tree, sign] = canon_signed(b);
        return {index_of(tree.leaves().size(), tree), sign};
    }

    std::pair<Tree, int> canon_signed(const BuildNode& b) const {
        std::vector<int> degrees, syms;
        collect(b, degrees, syms);
        Canonicalized c = TreeBuilder::canonicalize(b);
        int sign = koszul_sign(c.word_position, degrees);
        for (size_t v = 0; v < c.slot_perm.size(); ++v) {
            const auto& sp = c.slot_perm[v];
            if (sp.size() == 2 && sp[0] == 1) sign *= syms[v];
        }
        return {c.tree, sign};
    }

    /// Partial composition of basis trees in the splice convention:
    /// x on {1..i}, y on {1..j}; y's leaves land at positions a..a+j-1 of
    /// the result, x's leaves above a shift up. Single signed tree.
    std::pair<int, int> compose(int i, int a, const Tree& x, int j, const Tree& y) const {
        if (a < 1 || a > i) throw std::invalid_argument("FreeEngine::compose: bad slot");
        Tree xs = relabel_structural(x, [&](int l) { return l > a ? l + j - 1 : l; });
        Tree ys = relabel_structural(y, [&](int l) { return l + a - 1; });
        Canonicalized c = graft_tracked(xs, a, ys);
        std::vector<int> degrees, syms;
        degrees.reserve(x.vertex_count() + y.vertex_count());
        for (int v = 0; v < x.vertex_count(); ++v) {
            degrees.push_back(gens_.at(x.vertex(v).label).degree);
            syms.push_back(gens_.at(x.vertex(v).label).sym);
        }
        for (int v = 0; v < y.vertex_count(); ++v) {
            degrees.push_back(gens_.at(y.vertex(v).label).degree);
            syms.push_back(gens_.at(y.vertex(v).label).sym);
        }
        int sign = koszul_sign(c.word_position, degrees);
        for (size_t v = 0; v < c.slot_perm.size(); ++v) {
            const auto& sp = c.slot_perm[v];
            if (sp.size() == 2 && sp[0] == 1) sign *= syms[v];
        }
        return {index_of(i + j - 1, c.tree), sign};
    }

    /// Signed action of a leaf relabeling on a basis tree (single term).
    std::pair<int, int> relabel(int k, const Bijection& sigma, const Tree& t) const {
        BuildNode b = to_build_mapped(t, 0, sigma);
        return canon_index(b);
    }

private:
    static void append_labelings_rec(const Tree& shape, int v, std::vector<int>& labels,
                                     size_t ngens, Space& sp, const Tree& base) {
        if (v == shape.vertex_count()) {
            BuildNode b = to_build(base);
            std::vector<BuildNode*> stack = {&b};
            // Assign labels by preorder id (to_build keeps preorder ids).
            std::function<void(BuildNode&)> paint = [&](BuildNode& n) {
                n.label = labels[n.old_id];
                for (auto& k2 : n.kids)
                    if (!k2.is_leaf) paint(k2);
            };
            paint(b);
            auto canon = TreeBuilder::canonicalize(b);
            int idx = static_cast<int>(sp.trees.size());
            sp.trees.push_back(canon.tree);
            sp.index.emplace(canon.tree.serialize(), idx);
            return;
        }
        for (size_t g = 0; g < ngens; ++g) {
            labels[v] = static_cast<int>(g);
            append_labelings_rec(shape, v + 1, labels, ngens, sp, base);
        }
    }

    void append_labelings(const Tree& shape, Space& sp) const {
        std::vector<int> labels(shape.vertex_count(), 0);
        append_labelings_rec(shape, 0, labels, gens_.size(), sp, shape);
    }

    void collect(const BuildNode& n, std::vector<int>& degrees, std::vector<int>& syms) const {
        if (n.is_leaf) return;
        size_t id = static_cast<size_t>(n.old_id < 0 ? degrees.size() : n.old_id);
        if (degrees.size() <= id) {
            degrees.resize(id + 1, 0);
            syms.resize(id + 1, 1);
        }
        degrees[id] = gens_.at(n.label).degree;
        syms[id] = gens_.at(n.label).sym;
        for (const auto& k : n.kids) collect(k, degrees, syms);
    }

    template <typename F>
    static Tree relabel_structural(const Tree& t, F&& f) {
        // Order-preserving leaf relabelings keep the canonical form; no signs.
        std::function<BuildNode(int)> build = [&](int v) {
            BuildNode n;
            n.label = t.vertex(v).label;
            n.old_id = v;
            for (const auto& c : t.vertex(v).kids)
                n.kids.push_back(c.is_leaf ? BuildNode::leaf(f(c.value)) : build(c.value));
            return n;
        };
        return TreeBuilder::canonicalize(build(0)).tree;
    }

    static BuildNode to_build_mapped(const Tree& t, int v, const Bijection& sigma) {
        BuildNode n;
        n.label = t.vertex(v).label;
        n.old_id = v;
        for (const auto& c : t.vertex(v).kids)
            n.kids.push_back(c.is_leaf ? BuildNode::leaf(sigma(c.value))
                                       : to_build_mapped(t, c.value, sigma));
        return n;
    }

    std::vector<Generator> gens_;
    mutable std::mutex mu_;
    mutable std::map<int, std::unique_ptr<Space>> spaces_;
};

/// Presentation data: relation vectors over the arity-3 tree basis.
struct RelationSet {
    std::vector<FreeVec> rows;  // each a vector over engine.space(3)
};

/// Relabel a free vector by a bijection of {1..k}.
inline FreeVec relabel_vec(const FreeEngine& eng, int k, const Bijection& sigma, const FreeVec& v) {
    FreeVec out;
    const auto& sp = eng.space(k);
    for (const auto& [t, c] : v) {
        auto [idx, sign] = eng.relabel(k, sigma, sp.trees[t]);
        axpy(out, c * Rational(sign), {{idx, Rational(1)}});
    }
    return out;
}

/// Quotient of a free operad by an operadic ideal, at a single arity. The
/// ideal rows are supplied explicitly (see operad_ideal_rows). Columns of
/// the elimination are ordered so that the designated normal-basis lift
/// trees come last; after the rank audit, the non-pivot columns are exactly
/// the lift columns and reduction modulo the ideal reads off normal-form
/// coordinates directly.
class QuotientArity {
public:
    QuotientArity(const FreeEngine& eng, int k, const std::vector<FreeVec>& ideal_rows,
                  const std::vector<int>& lift_tree_indices)
        : eng_(eng), k_(k), lifts_(lift_tree_indices) {
        const int n = eng.dim(k);
        col_of_tree_.assign(n, -1);
        // Lift columns last, in lift order.
        std::vector<bool> is_lift(n, false);
        for (int t : lifts_) {
            if (t < 0 || t >= n || is_lift[t])
                throw std::logic_error("QuotientArity: bad lift tree");
            is_lift[t] = true;
        }
        int next = 0;
        for (int t = 0; t < n; ++t)
            if (!is_lift[t]) col_of_tree_[t] = next++;
        non_lift_cols_ = next;
        for (int t : lifts_) col_of_tree_[t] = next++;

        for (const auto& row : ideal_rows) insert_row(row);

        const int expected_rank = n - static_cast<int>(lifts_.size());
        if (ideal_.rank() != expected_rank)
            throw StructuralError("operad presentation: arity " + std::to_string(k) +
                                  " ideal rank " + std::to_string(ideal_.rank()) + ", expected " +
                                  std::to_string(expected_rank));
        for (const auto& [col, row] : ideal_.pivots)
            if (col >= non_lift_cols_)
                throw StructuralError("operad presentation: normal basis not independent at arity " +
                                      std::to_string(k));
    }

    /// Normal-form coordinates of a free vector.
    std::map<int, Rational> project(const FreeVec& v) const {
        std::vector<std::pair<int, Rational>> row;
        row.reserve(v.size());
        for (const auto& [t, c] : v) row.push_back({col_of_tree_[t], c});
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Rational s0(1);
        detail::IntRow r = detail::to_int_row(row, &s0);
        Rational s1(1);
        r = ideal_.reduce(std::move(r), &s1);
        Rational scale = s0 * s1;
        std::map<int, Rational> out;
        for (const auto& [col, val] : r.e) {
            if (col < non_lift_cols_)
                throw StructuralError("projection left a non-basis column at arity " +
                                      std::to_string(k_));
            out[col - non_lift_cols_] = Rational(val) / scale;
        }
        return out;
    }

    int ideal_rank() const { return ideal_.rank(); }

    /// The reduced ideal rows, converted back to tree coordinates. These
    /// span the ideal and seed the next arity's generation step.
    std::vector<FreeVec> rref_rows() const {
        std::vector<int> tree_of_col(col_of_tree_.size());
        for (size_t t = 0; t < col_of_tree_.size(); ++t) tree_of_col[col_of_tree_[t]] = static_cast<int>(t);
        std::vector<FreeVec> out;
        out.reserve(ideal_.pivots.size());
        for (const auto& [col, row] : ideal_.pivots) {
            FreeVec v;
            for (const auto& [c, val] : row.e) v[tree_of_col[c]] = Rational(val);
            out.push_back(std::move(v));
        }
        return out;
    }

private:
    void insert_row(const FreeVec& row) {
        if (row.empty()) return;
        std::vector<std::pair<int, Rational>> cols;
        cols.reserve(row.size());
        for (const auto& [t, c] : row) cols.push_back({col_of_tree_[t], c});
        std::sort(cols.begin(), cols.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        ideal_.insert(detail::to_int_row(cols));
    }

    const FreeEngine& eng_;
    int k_;
    std::vector<int> lifts_;
    std::vector<int> col_of_tree_;
    int non_lift_cols_ = 0;
    detail::EchelonQ ideal_;
};

/// One arity step of the ideal generated by arity-3 relations: every row of
/// the previous arity composed with a generator corolla below or above,
/// saturated by the block shuffles (the relabelings not already absorbed by
/// the span of the previous rows and the corolla symmetry).
inline std::vector<FreeVec> ideal_rows_step(const FreeEngine& eng, int m,
                                            const std::vector<FreeVec>& lower_rows) {
    std::vector<FreeVec> out;
    const auto& sp_prev = eng.space(m - 1);
    const int ngens = static_cast<int>(eng.generators().size());

    auto compose_row_below = [&](const FreeVec& g, int a, int gen) {
        FreeVec vec;
        Tree corolla =
            TreeBuilder::canonicalize(
                BuildNode::vertex(gen, {BuildNode::leaf(1), BuildNode::leaf(2)}))
                .tree;
        for (const auto& [t, c] : g) {
            auto [idx, sign] = eng.compose(m - 1, a, sp_prev.trees[t], 2, corolla);
            axpy(vec, c * Rational(sign), {{idx, Rational(1)}});
        }
        return vec;
    };
    auto compose_row_above = [&](const FreeVec& g, int a, int gen) {
        FreeVec vec;
        Tree corolla =
            TreeBuilder::canonicalize(
                BuildNode::vertex(gen, {BuildNode::leaf(1), BuildNode::leaf(2)}))
                .tree;
        for (const auto& [t, c] : g) {
            auto [idx, sign] = eng.compose(2, a, corolla, m - 1, sp_prev.trees[t]);
            axpy(vec, c * Rational(sign), {{idx, Rational(1)}});
        }
        return vec;
    };

    // Order-preserving-elsewhere relabeling sending the marked source
    // positions to the marked targets.
    auto shuffle = [&](const std::vector<int>& src_marked, const std::vector<int>& dst_marked) {
        std::map<int, int> mp;
        std::vector<int> src_rest, dst_rest;
        for (int x = 1; x <= m; ++x)
            if (std::find(src_marked.begin(), src_marked.end(), x) == src_marked.end())
                src_rest.push_back(x);
        for (int x = 1; x <= m; ++x)
            if (std::find(dst_marked.begin(), dst_marked.end(), x) == dst_marked.end())
                dst_rest.push_back(x);
        for (size_t i = 0; i < src_marked.size(); ++i) mp[src_marked[i]] = dst_marked[i];
        for (size_t i = 0; i < src_rest.size(); ++i) mp[src_rest[i]] = dst_rest[i];
        return Bijection(std::move(mp));
    };

    for (const auto& g : lower_rows) {
        for (int gen = 0; gen < ngens; ++gen) {
            // Below: corolla grafted into slot a; its leaves land at {a, a+1}.
            for (int a = 1; a <= m - 1; ++a) {
                FreeVec vec = compose_row_below(g, a, gen);
                if (vec.empty()) continue;
                for (int p = 1; p <= m; ++p)
                    for (int q = p + 1; q <= m; ++q) {
                        if (p == a && q == a + 1) {
                            out.push_back(vec);
                        } else {
                            out.push_back(relabel_vec(eng, m, shuffle({a, a + 1}, {p, q}), vec));
                        }
                    }
            }
            // Above: row grafted into a corolla; the free leaf sits at m (a=1)
            // or 1 (a=2).
            for (int a = 1; a <= 2; ++a) {
                FreeVec vec = compose_row_above(g, a, gen);
                if (vec.empty()) continue;
                const int t0 = a == 1 ? m : 1;
                for (int t = 1; t <= m; ++t) {
                    if (t == t0)
                        out.push_back(vec);
                    else
                        out.push_back(relabel_vec(eng, m, shuffle({t0}, {t}), vec));
                }
            }
        }
    }
    return out;
}

}  // namespace opforge
