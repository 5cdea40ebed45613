#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace agfit {

/// Default bound on p for the exhaustive searches over conditioning sets.
inline constexpr std::size_t default_vertex_limit = 16;

struct SeparationQuery
{
    VertexSet a;
    VertexSet b;
    VertexSet c;
};

struct IndependenceStatement
{
    VertexSet a;
    VertexSet b;
    VertexSet c;
    bool holds = false;
};

namespace detail {

inline std::vector<char> membership(const AncestralGraph& g, const VertexSet& s)
{
    std::vector<char> mask(g.size(), 0);
    for (auto v : s) {
        if (v >= g.size()) throw Error(ErrorCode::unknown_vertex, "no vertex with index " + std::to_string(v), v);
        mask[v] = 1;
    }
    return mask;
}

/// Reachability over (vertex, mark at the vertex of the edge used to enter
/// it). A move out of v is admissible when v is a collider in ancestors(C),
/// or a noncollider outside C. Returns the mask of vertices reachable from
/// `sources` by an m-connecting walk.
inline std::vector<char> m_reachable(const AncestralGraph& g, const VertexSet& sources, const VertexSet& c)
{
    const auto p = g.size();
    const auto in_c = membership(g, c);
    const auto in_an_c = membership(g, g.ancestors(c));

    // visited[2*v + mark]
    std::vector<char> visited(2 * p, 0);
    std::vector<char> reached(p, 0);
    std::vector<std::pair<std::size_t, Mark>> queue;

    for (auto s : sources) {
        for (auto w : g.adjacent_vertices(s)) {
            const Mark m = g.mark_at(w, s);
            const auto key = 2 * w + static_cast<std::size_t>(m);
            if (!visited[key]) {
                visited[key] = 1;
                queue.emplace_back(w, m);
            }
        }
    }
    while (!queue.empty()) {
        const auto [v, in_mark] = queue.back();
        queue.pop_back();
        reached[v] = 1;
        for (auto u : g.adjacent_vertices(v)) {
            const bool collider = in_mark == Mark::arrow && g.mark_at(v, u) == Mark::arrow;
            const bool pass = collider ? in_an_c[v] != 0 : in_c[v] == 0;
            if (!pass) continue;
            const Mark m = g.mark_at(u, v);
            const auto key = 2 * u + static_cast<std::size_t>(m);
            if (!visited[key]) {
                visited[key] = 1;
                queue.emplace_back(u, m);
            }
        }
    }
    return reached;
}

inline void check_disjoint(const AncestralGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& c)
{
    const auto ma = membership(g, a);
    const auto mb = membership(g, b);
    const auto mc = membership(g, c);
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (ma[v] + mb[v] + mc[v] > 1) {
            throw Error(ErrorCode::overlapping_sets, "vertex " + std::to_string(v) + " appears in more than one set", v);
        }
    }
}

/// Advances `idx` (strictly increasing, values < n) to the next combination
/// in lexicographic order. Returns false after the last one.
inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n)
{
    const std::size_t k = idx.size();
    for (std::size_t r = k; r-- > 0;) {
        if (idx[r] < n - k + r) {
            ++idx[r];
            for (std::size_t s = r + 1; s < k; ++s) idx[s] = idx[s - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// True iff some path between i and j has all noncolliders outside C and
/// all colliders in an(C).
inline bool m_connecting_path_exists(const AncestralGraph& g, std::size_t i, std::size_t j, const VertexSet& c)
{
    if (i >= g.size()) throw Error(ErrorCode::unknown_vertex, "no vertex with index " + std::to_string(i), i);
    if (j >= g.size()) throw Error(ErrorCode::unknown_vertex, "no vertex with index " + std::to_string(j), j);
    if (i == j) throw Error(ErrorCode::overlapping_sets, "endpoints coincide", i);
    detail::check_disjoint(g, {i}, {j}, c);
    return detail::m_reachable(g, {i}, c)[j] != 0;
}

inline bool m_separated(const AncestralGraph& g, const SeparationQuery& q)
{
    if (q.a.empty() || q.b.empty()) throw Error(ErrorCode::empty_set, "separation query needs nonempty A and B");
    detail::check_disjoint(g, q.a, q.b, q.c);
    const auto reached = detail::m_reachable(g, normalized(q.a), normalized(q.c));
    for (auto v : q.b) {
        if (reached[v]) return false;
    }
    return true;
}

/// Smallest C (by size, then lexicographically) m-separating the
/// non-adjacent pair (i, j), or nullopt when none exists.
inline std::optional<VertexSet> find_separating_set(const AncestralGraph& g, std::size_t i, std::size_t j,
                                                    std::size_t vertex_limit = default_vertex_limit)
{
    if (g.size() > vertex_limit) {
        throw Error(ErrorCode::vertex_limit_exceeded,
                    "exhaustive separating-set search limited to " + std::to_string(vertex_limit) + " vertices");
    }
    if (g.adjacent(i, j)) return std::nullopt;
    VertexSet others;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (v != i && v != j) others.push_back(v);
    }
    const std::size_t n = others.size();
    for (std::size_t k = 0; k <= n; ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t r = 0; r < k; ++r) idx[r] = r;
        do {
            VertexSet c;
            c.reserve(k);
            for (auto r : idx) c.push_back(others[r]);
            if (!m_connecting_path_exists(g, i, j, c)) return c;
        } while (detail::next_combination(idx, n));
    }
    return std::nullopt;
}

/// One statement per non-adjacent pair i < j: the smallest separating set,
/// or holds = false when the pair cannot be separated.
inline std::vector<IndependenceStatement> implied_pairwise_independences(const AncestralGraph& g,
                                                                         std::size_t vertex_limit = default_vertex_limit)
{
    std::vector<IndependenceStatement> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            if (g.adjacent(i, j)) continue;
            auto c = find_separating_set(g, i, j, vertex_limit);
            out.push_back({{i}, {j}, c.value_or(VertexSet{}), c.has_value()});
        }
    }
    return out;
}

namespace detail {

/// Cheap certificates tried before the exhaustive search: the empty set and
/// an({i, j}) minus {i, j}.
inline bool separable_by_candidate(const AncestralGraph& g, std::size_t i, std::size_t j)
{
    if (!m_connecting_path_exists(g, i, j, {})) return true;
    auto c = set_difference(g.ancestors(VertexSet{std::min(i, j), std::max(i, j)}), VertexSet{std::min(i, j), std::max(i, j)});
    return !m_connecting_path_exists(g, i, j, c);
}

inline std::vector<std::pair<std::size_t, std::size_t>> inseparable_pairs(const AncestralGraph& g, std::size_t vertex_limit)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            if (g.adjacent(i, j) || separable_by_candidate(g, i, j)) continue;
            if (!find_separating_set(g, i, j, vertex_limit)) out.emplace_back(i, j);
        }
    }
    return out;
}

} // namespace detail

/// Every non-adjacent pair admits a separating set. Graphs above the vertex
/// limit are decided only when every pair is certified by a cheap candidate
/// set; otherwise VertexLimitExceeded is thrown.
inline bool is_maximal(const AncestralGraph& g, std::size_t vertex_limit = default_vertex_limit)
{
    return detail::inseparable_pairs(g, vertex_limit).empty();
}

/// Adds bidirected edges between inseparable pairs until the graph is maximal.
inline AncestralGraph maximal_completion(const AncestralGraph& g, std::size_t vertex_limit = default_vertex_limit)
{
    AncestralGraph current = g;
    for (;;) {
        const auto pairs = detail::inseparable_pairs(current, vertex_limit);
        if (pairs.empty()) return current;
        current = current.with_edge(bidirected(pairs.front().first, pairs.front().second));
    }
}

} // namespace agfit
