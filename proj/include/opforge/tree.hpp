#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "opforge/fset.hpp"

namespace opforge {

/// Building form of a rooted tree. Leaves carry integer labels; internal
/// nodes carry an opaque integer label, an arity given by their child list,
/// and a caller-assigned stable id used to track vertices through
/// canonicalization (ids define the tensor-word order of the input).
struct BuildNode {
    bool is_leaf = false;
    int leaf_label = 0;
    int old_id = -1;
    int label = -1;
    std::vector<BuildNode> kids;

    static BuildNode leaf(int l) {
        BuildNode n;
        n.is_leaf = true;
        n.leaf_label = l;
        return n;
    }
    static BuildNode vertex(int label, std::vector<BuildNode> kids, int old_id = -1) {
        BuildNode n;
        n.label = label;
        n.old_id = old_id;
        n.kids = std::move(kids);
        return n;
    }
};

/// Canonical rooted tree: vertices stored in preorder (root = 0), children
/// of every vertex sorted by the minimal leaf label of their subtree.
/// Equality of abstract labeled trees coincides with equality of canonical
/// serializations.
class Tree {
public:
    struct Child {
        bool is_leaf;
        int value;  // leaf label, or vertex index
        friend bool operator==(const Child&, const Child&) = default;
    };
    struct Vertex {
        int label;
        std::vector<Child> kids;
        friend bool operator==(const Vertex&, const Vertex&) = default;
    };

    Tree() = default;

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    const Vertex& vertex(int i) const { return vertices_.at(i); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const FiniteSet& leaves() const { return leaves_; }

    int arity(int v) const { return static_cast<int>(vertices_.at(v).kids.size()); }

    /// Internal edges as (parent vertex, slot of the child vertex).
    std::vector<std::pair<int, int>> internal_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int v = 0; v < vertex_count(); ++v)
            for (size_t s = 0; s < vertices_[v].kids.size(); ++s)
                if (!vertices_[v].kids[s].is_leaf) out.push_back({v, static_cast<int>(s)});
        return out;
    }

    int min_leaf_of(const Child& c) const {
        if (c.is_leaf) return c.value;
        return min_leaf_[c.value];
    }

    std::string serialize() const {
        if (vertices_.empty()) return "()";
        return serialize_vertex(0);
    }

    std::string str(const std::function<std::string(int, int)>& label_name) const {
        if (vertices_.empty()) return "()";
        return pretty(0, label_name);
    }

    friend bool operator==(const Tree& a, const Tree& b) {
        return a.vertices_ == b.vertices_;
    }
    friend bool operator<(const Tree& a, const Tree& b) {
        return a.serialize() < b.serialize();
    }

private:
    friend struct TreeBuilder;

    std::string serialize_vertex(int v) const {
        std::string s = "(" + std::to_string(vertices_[v].label);
        for (const auto& c : vertices_[v].kids) {
            s += " ";
            s += c.is_leaf ? std::to_string(c.value) : serialize_vertex(c.value);
        }
        return s + ")";
    }

    std::string pretty(int v, const std::function<std::string(int, int)>& label_name) const {
        std::string s = label_name(arity(v), vertices_[v].label) + "(";
        bool first = true;
        for (const auto& c : vertices_[v].kids) {
            if (!first) s += ",";
            first = false;
            s += c.is_leaf ? std::to_string(c.value) : pretty(c.value, label_name);
        }
        return s + ")";
    }

    std::vector<Vertex> vertices_;
    std::vector<int> min_leaf_;  // per vertex
    FiniteSet leaves_;
};

/// Result of canonicalization. `word_position[id]` is the preorder position
/// in the canonical tree of the input vertex with old_id == id, and
/// `slot_perm[id][j]` is the canonical slot of that vertex's j-th input
/// child. Both are what a caller needs to compute reordering signs.
struct Canonicalized {
    Tree tree;
    std::vector<int> word_position;
    std::vector<std::vector<int>> slot_perm;
};

struct TreeBuilder {
    /// Canonicalize a building tree. Vertices without an old_id get the
    /// input preorder position. Throws on duplicate leaves.
    static Canonicalized canonicalize(const BuildNode& root) {
        BuildNode copy = root;
        int next_id = 0;
        assign_ids(copy, next_id);
        int id_count = count_ids(copy);

        Canonicalized out;
        out.word_position.assign(id_count, -1);
        out.slot_perm.assign(id_count, {});

        std::vector<int> leaf_labels;
        sort_children(copy, out.slot_perm, leaf_labels);

        std::sort(leaf_labels.begin(), leaf_labels.end());
        if (std::adjacent_find(leaf_labels.begin(), leaf_labels.end()) != leaf_labels.end())
            throw std::invalid_argument("Tree: duplicate leaf labels");

        emit(copy, out.tree, out.word_position);
        out.tree.leaves_ = FiniteSet(leaf_labels);
        return out;
    }

private:
    static void assign_ids(BuildNode& n, int& next) {
        if (n.is_leaf) return;
        if (n.old_id < 0) n.old_id = next;
        next = std::max(next, n.old_id + 1);
        for (auto& k : n.kids) assign_ids(k, next);
    }
    static int count_ids(const BuildNode& n) {
        if (n.is_leaf) return 0;
        int m = n.old_id + 1;
        for (const auto& k : n.kids) m = std::max(m, count_ids(k));
        return m;
    }

    // Sorts children by min leaf recursively; records the slot permutation.
    // Returns the minimum leaf of the subtree.
    static int sort_children(BuildNode& n, std::vector<std::vector<int>>& slot_perm,
                             std::vector<int>& leaf_labels) {
        if (n.is_leaf) {
            leaf_labels.push_back(n.leaf_label);
            return n.leaf_label;
        }
        if (n.kids.empty()) throw std::invalid_argument("Tree: childless internal vertex");
        std::vector<int> mins(n.kids.size());
        for (size_t i = 0; i < n.kids.size(); ++i)
            mins[i] = sort_children(n.kids[i], slot_perm, leaf_labels);

        std::vector<int> order(n.kids.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return mins[a] < mins[b]; });

        std::vector<BuildNode> sorted;
        sorted.reserve(n.kids.size());
        std::vector<int>& sp = slot_perm[n.old_id];
        sp.assign(n.kids.size(), -1);
        for (size_t pos = 0; pos < order.size(); ++pos) {
            sorted.push_back(std::move(n.kids[order[pos]]));
            sp[order[pos]] = static_cast<int>(pos);
        }
        n.kids = std::move(sorted);
        return *std::min_element(mins.begin(), mins.end());
    }

    static void emit(const BuildNode& n, Tree& t, std::vector<int>& word_position) {
        int idx = static_cast<int>(t.vertices_.size());
        t.vertices_.push_back({});
        t.min_leaf_.push_back(0);
        t.vertices_[idx].label = n.label;
        word_position[n.old_id] = idx;
        int min_leaf = INT32_MAX;
        for (const auto& k : n.kids) {
            if (k.is_leaf) {
                t.vertices_[idx].kids.push_back({true, k.leaf_label});
                min_leaf = std::min(min_leaf, k.leaf_label);
            } else {
                int child_idx = static_cast<int>(t.vertices_.size());
                t.vertices_[idx].kids.push_back({false, child_idx});
                emit(k, t, word_position);
                min_leaf = std::min(min_leaf, t.min_leaf_[child_idx]);
            }
        }
        t.min_leaf_[idx] = min_leaf;
    }
};

/// Rebuild a BuildNode from a canonical tree, preserving preorder ids.
inline BuildNode to_build(const Tree& t, int v = 0) {
    BuildNode n;
    n.label = t.vertex(v).label;
    n.old_id = v;
    for (const auto& c : t.vertex(v).kids) {
        if (c.is_leaf)
            n.kids.push_back(BuildNode::leaf(c.value));
        else
            n.kids.push_back(to_build(t, c.value));
    }
    return n;
}

/// Koszul sign of the permutation taking word position old_pos[i] -> new_pos[i]
/// for items of the given degrees: a factor (-1)^{d_i d_j} per inversion.
inline int koszul_sign(const std::vector<int>& new_pos, const std::vector<int>& degrees) {
    int sign = 1;
    const size_t n = new_pos.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (new_pos[i] > new_pos[j] && (degrees[i] % 2 != 0) && (degrees[j] % 2 != 0))
                sign = -sign;
    return sign;
}

/// Structural graft: replace leaf `a` of `host` by the root of `guest`.
/// Guest vertices receive old_ids after the host's (concatenated word
/// order); the returned Canonicalized exposes the resulting reordering.
inline Canonicalized graft_tracked(const Tree& host, int a, const Tree& guest) {
    if (!host.leaves().contains(a))
        throw std::invalid_argument("graft: leaf " + std::to_string(a) + " not in host");
    if (!host.leaves().without(a).disjoint_from(guest.leaves()))
        throw std::invalid_argument("graft: leaf sets collide");
    const int offset = host.vertex_count();
    std::function<BuildNode(const Tree&, int, int)> build = [&](const Tree& t, int v, int shift) {
        BuildNode n;
        n.label = t.vertex(v).label;
        n.old_id = v + shift;
        for (const auto& c : t.vertex(v).kids) {
            if (c.is_leaf) {
                if (shift == 0 && c.value == a)
                    n.kids.push_back(build(guest, 0, offset));
                else
                    n.kids.push_back(BuildNode::leaf(c.value));
            } else {
                n.kids.push_back(build(t, c.value, shift));
            }
        }
        return n;
    };
    return TreeBuilder::canonicalize(build(host, 0, 0));
}

/// Plain graft, discarding reordering data.
inline Tree graft(const Tree& host, int a, const Tree& guest) {
    return graft_tracked(host, a, guest).tree;
}

/// Enumerate shapes of reduced trees on the given leaf set: every internal
/// vertex has >= 2 children with arity accepted by `arity_ok`. Labels are
/// left as -1. With `module_root`, the root instead accepts any arity >= 1
/// accepted by `root_arity_ok`. Deterministic order.
namespace detail {

inline void partitions_rec(const std::vector<int>& rest, std::vector<std::vector<int>>& current,
                           std::vector<std::vector<std::vector<int>>>& out) {
    if (rest.empty()) {
        out.push_back(current);
        return;
    }
    int head = rest[0];
    std::vector<int> tail(rest.begin() + 1, rest.end());
    // Choose the block of `head` among subsets of tail.
    int m = static_cast<int>(tail.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> block = {head};
        std::vector<int> remain;
        for (int i = 0; i < m; ++i) {
            if (mask & (1 << i))
                block.push_back(tail[i]);
            else
                remain.push_back(tail[i]);
        }
        current.push_back(block);
        partitions_rec(remain, current, out);
        current.pop_back();
    }
}

/// All set partitions; blocks ordered by their minimum.
inline std::vector<std::vector<std::vector<int>>> set_partitions(const std::vector<int>& s) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<std::vector<int>> current;
    partitions_rec(s, current, out);
    for (auto& p : out)
        std::sort(p.begin(), p.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

inline std::vector<BuildNode> subtree_shapes(const std::vector<int>& labels,
                                             const std::function<bool(int)>& arity_ok) {
    std::vector<BuildNode> out;
    if (labels.size() == 1) {
        out.push_back(BuildNode::leaf(labels[0]));
        return out;
    }
    for (const auto& part : set_partitions(labels)) {
        if (part.size() < 2) continue;
        if (!arity_ok(static_cast<int>(part.size()))) continue;
        // Children options per block.
        std::vector<std::vector<BuildNode>> options;
        bool dead = false;
        for (const auto& block : part) {
            auto opts = subtree_shapes(block, arity_ok);
            if (opts.empty()) { dead = true; break; }
            options.push_back(std::move(opts));
        }
        if (dead) continue;
        std::vector<size_t> pick(options.size(), 0);
        while (true) {
            std::vector<BuildNode> kids;
            kids.reserve(options.size());
            for (size_t i = 0; i < options.size(); ++i) kids.push_back(options[i][pick[i]]);
            out.push_back(BuildNode::vertex(-1, std::move(kids)));
            size_t i = 0;
            while (i < options.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
            if (i == options.size()) break;
        }
    }
    return out;
}

}  // namespace detail

inline std::vector<Tree> enumerate_shapes(const FiniteSet& leaves,
                                          const std::function<bool(int)>& arity_ok,
                                          bool module_root = false,
                                          const std::function<bool(int)>& root_arity_ok = nullptr) {
    if (leaves.empty()) throw std::invalid_argument("enumerate_shapes: empty leaf set");
    std::vector<Tree> out;
    const auto& labels = leaves.labels();
    if (!module_root) {
        if (leaves.size() < 2) return out;
        for (auto& b : detail::subtree_shapes(labels, arity_ok))
            if (!b.is_leaf) out.push_back(TreeBuilder::canonicalize(b).tree);
    } else {
        auto ok = root_arity_ok ? root_arity_ok : [](int) { return true; };
        // Root arity b >= 1: partition into b blocks, each block a leaf or
        // an operad subtree.
        for (const auto& part : detail::set_partitions(labels)) {
            if (!ok(static_cast<int>(part.size()))) continue;
            std::vector<std::vector<BuildNode>> options;
            bool dead = false;
            for (const auto& block : part) {
                auto opts = detail::subtree_shapes(block, arity_ok);
                if (opts.empty()) { dead = true; break; }
                options.push_back(std::move(opts));
            }
            if (dead) continue;
            std::vector<size_t> pick(options.size(), 0);
            while (true) {
                std::vector<BuildNode> kids;
                for (size_t i = 0; i < options.size(); ++i) kids.push_back(options[i][pick[i]]);
                out.push_back(TreeBuilder::canonicalize(BuildNode::vertex(-1, std::move(kids))).tree);
                size_t i = 0;
                while (i < options.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
                if (i == options.size()) break;
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Nested JSON-ish serialization driven by a label printer; see also Tree::str.
inline std::string tree_json(const Tree& t, const std::function<std::string(int, int)>& label_name,
                             int v = 0) {
    std::string s = "{\"label\":\"" + label_name(t.arity(v), t.vertex(v).label) + "\",\"children\":[";
    bool first = true;
    for (const auto& c : t.vertex(v).kids) {
        if (!first) s += ",";
        first = false;
        if (c.is_leaf)
            s += "\"" + std::to_string(c.value) + "\"";
        else
            s += tree_json(t, label_name, c.value);
    }
    return s + "]}";
}

inline std::string tree_dot(const Tree& t, const std::function<std::string(int, int)>& label_name) {
    std::string s = "digraph optree {\n";
    for (int v = 0; v < t.vertex_count(); ++v)
        s += "  v" + std::to_string(v) + " [label=\"" + label_name(t.arity(v), t.vertex(v).label) +
             "\"];\n";
    for (int v = 0; v < t.vertex_count(); ++v) {
        for (const auto& c : t.vertex(v).kids) {
            if (c.is_leaf) {
                s += "  v" + std::to_string(v) + " -> leaf" + std::to_string(c.value) + ";\n";
            } else {
                s += "  v" + std::to_string(v) + " -> v" + std::to_string(c.value) + ";\n";
            }
        }
    }
    for (int l : t.leaves().labels())
        s += "  leaf" + std::to_string(l) + " [shape=none, label=\"" + std::to_string(l) + "\"];\n";
    return s + "}\n";
}

}  // namespace opforge
