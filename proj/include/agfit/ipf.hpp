#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>
#include <agfit/index_map.hpp>
#include <agfit/linalg.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace agfit {

/// Connected components over undirected edges, each sorted, ordered by smallest member.
inline std::vector<VertexSet> undirected_components(const AncestralGraph& g)
{
    std::vector<VertexSet> out;
    std::vector<char> seen(g.size(), 0);
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (seen[s]) continue;
        VertexSet comp;
        std::vector<std::size_t> stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            comp.push_back(v);
            for (auto u : g.neighbors(v)) {
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

/// Maximal cliques of the undirected edges (Bron-Kerbosch with pivoting).
inline std::vector<VertexSet> maximal_cliques(const AncestralGraph& g)
{
    std::vector<VertexSet> out;
    std::function<void(VertexSet, VertexSet, VertexSet)> expand = [&](VertexSet r, VertexSet p, VertexSet x) {
        if (p.empty() && x.empty()) {
            std::sort(r.begin(), r.end());
            out.push_back(std::move(r));
            return;
        }
        const auto candidates = set_union(p, x);
        std::size_t pivot = candidates.front();
        std::size_t best = 0;
        for (auto u : candidates) {
            const auto k = set_intersection(p, g.neighbors(u)).size();
            if (k >= best) {
                best = k;
                pivot = u;
            }
        }
        for (auto v : set_difference(p, g.neighbors(pivot))) {
            auto r2 = r;
            r2.push_back(v);
            expand(std::move(r2), set_intersection(p, g.neighbors(v)), set_intersection(x, g.neighbors(v)));
            p.erase(std::find(p.begin(), p.end(), v));
            x = set_union(x, VertexSet{v});
        }
    };
    expand({}, all_vertices(g.size()), {});
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

/// IPF on one connected component; k is the component's concentration,
/// updated in place. Returns the number of sweeps used.
inline std::size_t ipf_component(const std::vector<std::vector<Eigen::Index>>& cliques, const Eigen::MatrixXd& s,
                                 Eigen::MatrixXd& k, double tolerance, std::size_t max_sweeps)
{
    std::vector<Eigen::MatrixXd> target_inv;
    for (const auto& c : cliques) {
        target_inv.push_back(spd_inverse(gather(s, c, c), ErrorCode::not_positive_definite, "clique block of S"));
    }
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        const Eigen::MatrixXd sigma = spd_inverse(k, ErrorCode::not_positive_definite, "IPF concentration");
        double gap = 0.0;
        for (const auto& c : cliques) gap = std::max(gap, (gather(sigma, c, c) - gather(s, c, c)).cwiseAbs().maxCoeff());
        if (gap < tolerance) return sweep;

        for (std::size_t q = 0; q < cliques.size(); ++q) {
            const auto& c = cliques[q];
            const Eigen::MatrixXd current = spd_inverse(k, ErrorCode::not_positive_definite, "IPF concentration");
            const Eigen::MatrixXd fitted_inv = spd_inverse(gather(current, c, c), ErrorCode::not_positive_definite, "IPF marginal");
            const Eigen::MatrixXd delta = target_inv[q] - fitted_inv;
            for (std::size_t a = 0; a < c.size(); ++a) {
                for (std::size_t b = 0; b < c.size(); ++b) {
                    k(c[a], c[b]) += delta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
        }
    }
    throw Error(ErrorCode::max_iterations_exceeded, "IPF did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

} // namespace detail

/// Maximum likelihood concentration matrix for an undirected Gaussian model.
///
/// Cycles through the maximal cliques; each step replaces the clique block
/// of the concentration so the fitted clique marginal equals the empirical
/// one while the conditional of the rest given the clique stays fixed.
/// Stops when every fitted clique marginal is within `tolerance` of S.
/// Connected components are fitted independently and entries outside the
/// edge pattern stay exactly zero.
inline Eigen::MatrixXd fit_undirected_ipf(const AncestralGraph& g_un, const Eigen::MatrixXd& s_un, double tolerance = 1e-10,
                                          std::size_t max_sweeps = 10000)
{
    if (g_un.has_kind(EdgeKind::directed) || g_un.has_kind(EdgeKind::bidirected)) {
        throw Error(ErrorCode::invalid_argument, "IPF needs a purely undirected graph");
    }
    const auto p = static_cast<Eigen::Index>(g_un.size());
    if (s_un.rows() != p || s_un.cols() != p) throw Error(ErrorCode::dimension_mismatch, "S block does not match graph size");
    if (p == 0) return Eigen::MatrixXd(0, 0);
    spd_factor(s_un, ErrorCode::not_positive_definite, "undirected block of S");

    const auto cliques = maximal_cliques(g_un);
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(p, p);
    for (const auto& comp : undirected_components(g_un)) {
        const IndexMap map(g_un.size(), comp);
        std::vector<std::vector<Eigen::Index>> local_cliques;
        for (const auto& c : cliques) {
            if (map.contains(c.front())) local_cliques.push_back(map.locals(c));
        }
        const auto idx = as_eigen_indices(comp);
        const Eigen::MatrixXd s = gather(s_un, idx, idx);
        Eigen::MatrixXd k = s.diagonal().cwiseInverse().asDiagonal();
        detail::ipf_component(local_cliques, s, k, tolerance, max_sweeps);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = 0; b < idx.size(); ++b) {
                lambda(idx[a], idx[b]) = a == b || g_un.adjacent(comp[a], comp[b])
                                             ? 0.5 * (k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                                                      k(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)))
                                             : 0.0;
            }
        }
    }
    return lambda;
}

} // namespace agfit
