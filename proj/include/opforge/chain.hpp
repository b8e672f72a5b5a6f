#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opforge/poly.hpp"
#include "opforge/sparse.hpp"

namespace opforge {

/// Raised when a value violates a structural invariant (d*d != 0,
/// mismatched differential shapes, a composition leaving the closure...).
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Graded dimension table: degree -> dimension, zeros omitted.
using DimTable = std::map<int, std::int64_t>;

inline Poly dim_table_poly(const DimTable& t) {
    Poly p;
    for (const auto& [deg, dim] : t) p.add_term(deg, dim);
    return p;
}

/// Chain complex of finite-dimensional spaces with named bases. The
/// differential in degree j maps degree j to degree j-1. d*d = 0 is
/// checked exactly on construction.
class ChainComplex {
public:
    ChainComplex(std::map<int, std::vector<std::string>> spaces,
                 std::map<int, SparseMatrix> differentials)
        : spaces_(std::move(spaces)), diffs_(std::move(differentials)) {
        validate();
    }

    const std::map<int, std::vector<std::string>>& spaces() const { return spaces_; }
    const std::map<int, SparseMatrix>& differentials() const { return diffs_; }

    int dim(int degree) const {
        auto it = spaces_.find(degree);
        return it == spaces_.end() ? 0 : static_cast<int>(it->second.size());
    }

    DimTable space_dims() const {
        DimTable t;
        for (const auto& [deg, basis] : spaces_)
            if (!basis.empty()) t[deg] = static_cast<std::int64_t>(basis.size());
        return t;
    }

    /// The differential out of `degree` (an explicit zero matrix when absent).
    SparseMatrix differential(int degree) const {
        auto it = diffs_.find(degree);
        if (it != diffs_.end()) return it->second;
        return SparseMatrix(dim(degree - 1), dim(degree));
    }

    /// dim H_j = dim ker d_j - rank d_{j+1}, degrees with value 0 omitted.
    DimTable homology_dims(const FieldSpec& field = FieldSpec::rationals()) const {
        std::map<int, int> ranks;
        for (const auto& [deg, d] : diffs_) ranks[deg] = rank(d, field);
        DimTable h;
        for (const auto& [deg, basis] : spaces_) {
            int rk_out = ranks.count(deg) ? ranks.at(deg) : 0;
            int rk_in = ranks.count(deg + 1) ? ranks.at(deg + 1) : 0;
            std::int64_t dim_h = static_cast<std::int64_t>(basis.size()) - rk_out - rk_in;
            if (dim_h < 0)
                throw StructuralError("negative homology dimension in degree " + std::to_string(deg));
            if (dim_h != 0) h[deg] = dim_h;
        }
        return h;
    }

    std::int64_t euler() const { return dim_table_poly(space_dims()).euler(); }

private:
    void validate() const {
        for (const auto& [deg, d] : diffs_) {
            if (d.cols() != dim(deg) || d.rows() != dim(deg - 1))
                throw StructuralError("differential shape mismatch in degree " + std::to_string(deg));
        }
        for (const auto& [deg, d] : diffs_) {
            auto below = diffs_.find(deg - 1);
            if (below == diffs_.end()) continue;
            if (!(below->second * d).is_zero())
                throw StructuralError("d o d != 0 out of degree " + std::to_string(deg));
        }
    }

    std::map<int, std::vector<std::string>> spaces_;
    std::map<int, SparseMatrix> diffs_;
};

}  // namespace opforge
