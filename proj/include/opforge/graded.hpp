#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "opforge/fset.hpp"
#include "opforge/poly.hpp"
#include "opforge/sparse.hpp"

namespace opforge {

/// Finite-dimensional graded vector space with a named basis.
class GradedSpace {
public:
    GradedSpace() = default;
    explicit GradedSpace(std::vector<std::pair<std::string, int>> basis) : basis_(std::move(basis)) {
        std::map<std::string, int> seen;
        for (size_t i = 0; i < basis_.size(); ++i) {
            if (!seen.emplace(basis_[i].first, static_cast<int>(i)).second)
                throw std::invalid_argument("GradedSpace: duplicate basis label " + basis_[i].first);
        }
        index_ = std::move(seen);
    }

    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<std::pair<std::string, int>>& basis() const { return basis_; }
    const std::string& label(int i) const { return basis_.at(i).first; }
    int degree(int i) const { return basis_.at(i).second; }

    int index_of(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end()) throw std::invalid_argument("GradedSpace: no basis label " + label);
        return it->second;
    }

    Poly poincare() const {
        Poly p;
        for (const auto& [label, deg] : basis_) p.add_term(deg, 1);
        return p;
    }

    DimTable dims() const {
        DimTable t;
        for (const auto& [label, deg] : basis_) ++t[deg];
        return t;
    }

private:
    std::vector<std::pair<std::string, int>> basis_;
    std::map<std::string, int> index_;
};

/// Symmetric sequence: an arity-indexed family of graded spaces together
/// with the (signed) action of bijections on each arity. The action is
/// exposed as an exact matrix; for tree bases it is a signed permutation,
/// for rewriting bases it is a general invertible matrix.
struct SymSeq {
    std::function<GradedSpace(int)> space;
    std::function<SparseMatrix(int, const Bijection&)> action;
};

/// Apply the signed action of sigma to a coordinate vector at the given arity.
inline std::vector<Rational> apply_bijection(const SymSeq& s, int arity, const Bijection& sigma,
                                             const std::vector<Rational>& v) {
    if (sigma.domain().size() != arity)
        throw std::invalid_argument("apply_bijection: arity mismatch");
    SparseMatrix m = s.action(arity, sigma);
    return m.mul_vec(v);
}

}  // namespace opforge
