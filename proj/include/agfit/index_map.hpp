#pragma once

#include <agfit/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace agfit {

/// Sorted set of vertex indices.
using VertexSet = std::vector<std::size_t>;

/// Translates between vertex indices in V = {0, ..., p-1} and the compacted
/// indices of a submatrix addressed by a subset of V. Local index k always
/// corresponds to the k-th smallest member of the subset.
class IndexMap
{
public:
    IndexMap() = default;

    IndexMap(std::size_t universe, VertexSet members)
        : members_(std::move(members)),
          local_(universe, npos)
    {
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
        for (std::size_t k = 0; k < members_.size(); ++k) {
            if (members_[k] >= universe) {
                throw Error(ErrorCode::unknown_vertex, "index outside universe", members_[k]);
            }
            local_[members_[k]] = k;
        }
    }

    std::size_t size() const noexcept { return members_.size(); }
    std::size_t universe() const noexcept { return local_.size(); }
    bool empty() const noexcept { return members_.empty(); }

    bool contains(std::size_t global) const noexcept
    {
        return global < local_.size() && local_[global] != npos;
    }

    std::size_t to_global(std::size_t local) const { return members_.at(local); }

    std::size_t to_local(std::size_t global) const
    {
        if (!contains(global)) {
            throw Error(ErrorCode::unknown_vertex, "vertex not in index map", global);
        }
        return local_[global];
    }

    std::optional<std::size_t> find(std::size_t global) const noexcept
    {
        if (!contains(global)) return std::nullopt;
        return local_[global];
    }

    const VertexSet& members() const noexcept { return members_; }

    /// Same subset with one vertex removed.
    IndexMap without(std::size_t global) const
    {
        VertexSet rest;
        rest.reserve(members_.size());
        for (auto v : members_) {
            if (v != global) rest.push_back(v);
        }
        return IndexMap(universe(), std::move(rest));
    }

    /// Local indices (in this map) of the given global vertices, in order.
    std::vector<Eigen::Index> locals(const VertexSet& globals) const
    {
        std::vector<Eigen::Index> out;
        out.reserve(globals.size());
        for (auto g : globals) out.push_back(static_cast<Eigen::Index>(to_local(g)));
        return out;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

private:
    VertexSet members_;
    std::vector<std::size_t> local_;
};

inline std::vector<Eigen::Index> as_eigen_indices(const VertexSet& vs)
{
    return std::vector<Eigen::Index>(vs.begin(), vs.end());
}

/// Copies M[rows, cols] into a dense matrix.
template <class Derived>
Eigen::MatrixXd gather(const Eigen::MatrixBase<Derived>& m,
                       const std::vector<Eigen::Index>& rows,
                       const std::vector<Eigen::Index>& cols)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) = m(rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

} // namespace agfit
