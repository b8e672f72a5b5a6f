#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace opforge {

/// Finite set of integer atoms. Stored sorted; identity is independent of
/// the order elements were supplied in.
class FiniteSet {
public:
    FiniteSet() = default;
    FiniteSet(std::initializer_list<int> labels) : labels_(labels) { normalize(); }
    explicit FiniteSet(std::vector<int> labels) : labels_(std::move(labels)) { normalize(); }

    /// The standard set {1, ..., k}.
    static FiniteSet standard(int k) {
        std::vector<int> v(k);
        for (int i = 0; i < k; ++i) v[i] = i + 1;
        return FiniteSet(std::move(v));
    }

    int size() const { return static_cast<int>(labels_.size()); }
    bool empty() const { return labels_.empty(); }
    const std::vector<int>& labels() const { return labels_; }

    bool contains(int a) const {
        return std::binary_search(labels_.begin(), labels_.end(), a);
    }

    /// 0-based position of a in the sorted label list.
    int index_of(int a) const {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), a);
        if (it == labels_.end() || *it != a)
            throw std::invalid_argument("FiniteSet: element " + std::to_string(a) + " not in set");
        return static_cast<int>(it - labels_.begin());
    }

    FiniteSet without(int a) const {
        std::vector<int> v;
        v.reserve(labels_.size());
        bool found = false;
        for (int x : labels_) {
            if (x == a) { found = true; continue; }
            v.push_back(x);
        }
        if (!found) throw std::invalid_argument("FiniteSet: element not in set");
        return FiniteSet(std::move(v));
    }

    bool disjoint_from(const FiniteSet& o) const {
        for (int x : o.labels_)
            if (contains(x)) return false;
        return true;
    }

    friend bool operator==(const FiniteSet& a, const FiniteSet& b) { return a.labels_ == b.labels_; }
    friend bool operator!=(const FiniteSet& a, const FiniteSet& b) { return a.labels_ != b.labels_; }
    friend bool operator<(const FiniteSet& a, const FiniteSet& b) { return a.labels_ < b.labels_; }

    std::string str() const {
        std::string s = "{";
        for (size_t i = 0; i < labels_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(labels_[i]);
        }
        return s + "}";
    }

private:
    void normalize() {
        std::sort(labels_.begin(), labels_.end());
        if (std::adjacent_find(labels_.begin(), labels_.end()) != labels_.end())
            throw std::invalid_argument("FiniteSet: duplicate labels");
    }

    std::vector<int> labels_;
};

/// Bijection between finite label sets, stored as an explicit map.
class Bijection {
public:
    Bijection() = default;
    explicit Bijection(std::map<int, int> m) : map_(std::move(m)) {
        std::vector<int> image;
        image.reserve(map_.size());
        for (const auto& [k, v] : map_) image.push_back(v);
        std::sort(image.begin(), image.end());
        if (std::adjacent_find(image.begin(), image.end()) != image.end())
            throw std::invalid_argument("Bijection: not injective");
    }

    static Bijection identity(const FiniteSet& s) {
        std::map<int, int> m;
        for (int x : s.labels()) m[x] = x;
        return Bijection(std::move(m));
    }

    int operator()(int a) const {
        auto it = map_.find(a);
        if (it == map_.end())
            throw std::invalid_argument("Bijection: " + std::to_string(a) + " not in domain");
        return it->second;
    }

    FiniteSet domain() const {
        std::vector<int> v;
        v.reserve(map_.size());
        for (const auto& [k, x] : map_) v.push_back(k);
        return FiniteSet(std::move(v));
    }
    FiniteSet codomain() const {
        std::vector<int> v;
        v.reserve(map_.size());
        for (const auto& [k, x] : map_) v.push_back(x);
        return FiniteSet(std::move(v));
    }

    Bijection inverse() const {
        std::map<int, int> m;
        for (const auto& [k, v] : map_) m[v] = k;
        return Bijection(std::move(m));
    }

    /// this after other: x -> this(other(x)).
    Bijection after(const Bijection& other) const {
        std::map<int, int> m;
        for (const auto& [k, v] : other.map_) m[k] = (*this)(v);
        return Bijection(std::move(m));
    }

    /// Sign of the permutation induced between the sorted orders of the
    /// domain and codomain.
    int sorted_sign() const {
        FiniteSet dom = domain();
        std::vector<int> perm(dom.size());
        FiniteSet cod = codomain();
        for (int i = 0; i < dom.size(); ++i) perm[i] = cod.index_of((*this)(dom.labels()[i]));
        int sign = 1;
        for (size_t i = 0; i < perm.size(); ++i)
            for (size_t j = i + 1; j < perm.size(); ++j)
                if (perm[i] > perm[j]) sign = -sign;
        return sign;
    }

    const std::map<int, int>& entries() const { return map_; }

    friend bool operator==(const Bijection& a, const Bijection& b) { return a.map_ == b.map_; }

private:
    std::map<int, int> map_;
};

/// I u_a J := (I - {a}) disjoint-union J. If J collides with I - {a}, J is
/// relabeled (order-preservingly) to the smallest unused positive atoms; the
/// applied relabeling is returned alongside.
struct CompositeSet {
    FiniteSet set;
    Bijection j_relabel;  // domain = original J, codomain = labels used
};

inline CompositeSet infinitesimal_composite(const FiniteSet& I, int a, const FiniteSet& J) {
    if (!I.contains(a))
        throw std::invalid_argument("infinitesimal_composite: position " + std::to_string(a) +
                                    " not in " + I.str());
    FiniteSet base = I.without(a);
    std::map<int, int> relabel;
    std::vector<int> out = base.labels();
    if (base.disjoint_from(J)) {
        for (int x : J.labels()) {
            relabel[x] = x;
            out.push_back(x);
        }
    } else {
        int next = 1;
        for (int x : J.labels()) {
            while (std::find(out.begin(), out.end(), next) != out.end() ||
                   std::any_of(relabel.begin(), relabel.end(),
                               [&](const auto& kv) { return kv.second == next; }))
                ++next;
            relabel[x] = next;
            out.push_back(next);
        }
    }
    return CompositeSet{FiniteSet(std::move(out)), Bijection(std::move(relabel))};
}

}  // namespace opforge
