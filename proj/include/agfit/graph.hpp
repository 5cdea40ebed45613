#pragma once

#include <agfit/error.hpp>
#include <agfit/index_map.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace agfit {

enum class EdgeKind { undirected, directed, bidirected };

/// Endpoint mark of an edge at one of its vertices.
enum class Mark { tail, arrow };

/// For directed edges `from` is the tail and `to` the head. Undirected and
/// bidirected edges are stored with from < to.
struct Edge
{
    std::size_t from;
    std::size_t to;
    EdgeKind kind;

    friend bool operator==(const Edge&, const Edge&) = default;
};

inline Edge undirected(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b), EdgeKind::undirected}; }
inline Edge directed(std::size_t tail, std::size_t head) { return {tail, head, EdgeKind::directed}; }
inline Edge bidirected(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b), EdgeKind::bidirected}; }

struct Relations
{
    VertexSet ne;
    VertexSet sp;
    VertexSet pa;
};

inline VertexSet set_union(const VertexSet& a, const VertexSet& b)
{
    VertexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VertexSet set_difference(const VertexSet& a, const VertexSet& b)
{
    VertexSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VertexSet set_intersection(const VertexSet& a, const VertexSet& b)
{
    VertexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline VertexSet normalized(VertexSet s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline VertexSet all_vertices(std::size_t p)
{
    VertexSet out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = i;
    return out;
}

/// Mixed graph with undirected, directed and bidirected edges that satisfies
/// the ancestral conditions: no arrowhead at a vertex with a neighbour, and
/// no directed path from a vertex to one of its parents or spouses.
/// Instances are only produced by validate() and are immutable afterwards.
class AncestralGraph
{
public:
    AncestralGraph() = default;

    static AncestralGraph validate(std::vector<std::string> labels, std::vector<Edge> edges)
    {
        AncestralGraph g;
        const std::size_t p = labels.size();
        g.labels_ = std::move(labels);
        g.ne_.assign(p, {});
        g.sp_.assign(p, {});
        g.pa_.assign(p, {});
        g.ch_.assign(p, {});
        g.kind_ = Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p), -1);

        for (auto e : edges) {
            if (e.from >= p) throw Error(ErrorCode::unknown_vertex, "edge endpoint not declared", e.from);
            if (e.to >= p) throw Error(ErrorCode::unknown_vertex, "edge endpoint not declared", e.to);
            if (e.from == e.to) throw Error(ErrorCode::self_loop, "self-loop at vertex " + std::to_string(e.from), e.from);
            if (e.kind != EdgeKind::directed && e.from > e.to) std::swap(e.from, e.to);
            const auto a = static_cast<Eigen::Index>(e.from);
            const auto b = static_cast<Eigen::Index>(e.to);
            if (g.kind_(a, b) != -1) {
                throw Error(ErrorCode::multi_edge,
                            "more than one edge between " + std::to_string(e.from) + " and " + std::to_string(e.to),
                            e.from);
            }
            g.kind_(a, b) = g.kind_(b, a) = static_cast<int>(e.kind);
            switch (e.kind) {
                case EdgeKind::undirected:
                    g.ne_[e.from].push_back(e.to);
                    g.ne_[e.to].push_back(e.from);
                    break;
                case EdgeKind::bidirected:
                    g.sp_[e.from].push_back(e.to);
                    g.sp_[e.to].push_back(e.from);
                    break;
                case EdgeKind::directed:
                    g.pa_[e.to].push_back(e.from);
                    g.ch_[e.from].push_back(e.to);
                    break;
            }
            g.edges_.push_back(e);
        }
        for (std::size_t i = 0; i < p; ++i) {
            std::sort(g.ne_[i].begin(), g.ne_[i].end());
            std::sort(g.sp_[i].begin(), g.sp_[i].end());
            std::sort(g.pa_[i].begin(), g.pa_[i].end());
            std::sort(g.ch_[i].begin(), g.ch_[i].end());
        }
        std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& x, const Edge& y) {
            return std::pair(x.from, x.to) < std::pair(y.from, y.to);
        });

        for (std::size_t i = 0; i < p; ++i) {
            if (!g.ne_[i].empty() && !(g.pa_[i].empty() && g.sp_[i].empty())) {
                throw Error(ErrorCode::condition_one_violated,
                            "vertex " + g.labels_[i] + " has a neighbour and an arrowhead", i);
            }
        }

        g.an_.assign(p, {});
        for (std::size_t i = 0; i < p; ++i) g.an_[i] = g.ancestors_of_vertex(i);

        for (std::size_t i = 0; i < p; ++i) {
            const auto an = g.ancestors(set_union(g.pa_[i], g.sp_[i]));
            if (std::binary_search(an.begin(), an.end(), i)) {
                throw Error(ErrorCode::condition_two_violated,
                            "vertex " + g.labels_[i] + " is an ancestor of one of its parents or spouses", i);
            }
        }

        for (std::size_t i = 0; i < p; ++i) {
            if (g.pa_[i].empty() && g.sp_[i].empty()) g.un_.push_back(i);
        }
        g.rest_ = set_difference(all_vertices(p), g.un_);
        return g;
    }

    static AncestralGraph validate(std::size_t p, std::vector<Edge> edges)
    {
        std::vector<std::string> labels(p);
        for (std::size_t i = 0; i < p; ++i) labels[i] = std::to_string(i);
        return validate(std::move(labels), std::move(edges));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    const VertexSet& neighbors(std::size_t i) const { check(i); return ne_[i]; }
    const VertexSet& spouses(std::size_t i) const { check(i); return sp_[i]; }
    const VertexSet& parents(std::size_t i) const { check(i); return pa_[i]; }
    const VertexSet& children(std::size_t i) const { check(i); return ch_[i]; }

    Relations relations(std::size_t i) const
    {
        check(i);
        return {ne_[i], sp_[i], pa_[i]};
    }

    /// an(A): A together with every vertex having a directed path into A.
    VertexSet ancestors(const VertexSet& a) const
    {
        VertexSet out;
        for (auto v : a) {
            check(v);
            out = set_union(out, an_[v]);
        }
        return out;
    }

    const VertexSet& ancestors_of(std::size_t i) const { check(i); return an_[i]; }

    /// Vertices without parents or spouses; they carry only undirected edges.
    const VertexSet& undirected_part() const noexcept { return un_; }
    /// V minus the undirected part.
    const VertexSet& arrowhead_part() const noexcept { return rest_; }

    bool in_undirected_part(std::size_t i) const
    {
        return std::binary_search(un_.begin(), un_.end(), i);
    }

    bool adjacent(std::size_t i, std::size_t j) const { return edge_kind(i, j).has_value(); }

    std::optional<EdgeKind> edge_kind(std::size_t i, std::size_t j) const
    {
        check(i);
        check(j);
        const int k = kind_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (k < 0) return std::nullopt;
        return static_cast<EdgeKind>(k);
    }

    /// Mark at `at` of the edge between `at` and `other`; the pair must be adjacent.
    Mark mark_at(std::size_t at, std::size_t other) const
    {
        const auto k = edge_kind(at, other);
        if (!k) throw Error(ErrorCode::invalid_argument, "vertices are not adjacent", at);
        switch (*k) {
            case EdgeKind::undirected: return Mark::tail;
            case EdgeKind::bidirected: return Mark::arrow;
            case EdgeKind::directed:
                return std::binary_search(pa_[at].begin(), pa_[at].end(), other) ? Mark::arrow : Mark::tail;
        }
        return Mark::tail;
    }

    /// All vertices adjacent to i, sorted.
    VertexSet adjacent_vertices(std::size_t i) const
    {
        check(i);
        return set_union(set_union(ne_[i], sp_[i]), set_union(pa_[i], ch_[i]));
    }

    bool has_kind(EdgeKind kind) const
    {
        return std::any_of(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; });
    }

    bool is_dag() const { return !has_kind(EdgeKind::undirected) && !has_kind(EdgeKind::bidirected); }

    /// Induced subgraph on `keep`; vertex k of the result is the k-th smallest member of keep.
    AncestralGraph induced_subgraph(const VertexSet& keep) const
    {
        const IndexMap map(size(), keep);
        std::vector<std::string> labels;
        for (auto v : map.members()) labels.push_back(labels_[v]);
        std::vector<Edge> edges;
        for (const auto& e : edges_) {
            if (map.contains(e.from) && map.contains(e.to)) {
                edges.push_back({map.to_local(e.from), map.to_local(e.to), e.kind});
            }
        }
        return validate(std::move(labels), std::move(edges));
    }

    /// Same graph with one more edge; re-validated.
    AncestralGraph with_edge(Edge e) const
    {
        auto edges = edges_;
        edges.push_back(e);
        return validate(labels_, std::move(edges));
    }

    std::optional<std::size_t> find_label(const std::string& label) const
    {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - labels_.begin());
    }

private:
    void check(std::size_t i) const
    {
        if (i >= labels_.size()) throw Error(ErrorCode::unknown_vertex, "no vertex with index " + std::to_string(i), i);
    }

    VertexSet ancestors_of_vertex(std::size_t i) const
    {
        std::vector<char> seen(size(), 0);
        std::vector<std::size_t> stack{i};
        seen[i] = 1;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            for (auto u : pa_[v]) {
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
            }
        }
        VertexSet out;
        for (std::size_t v = 0; v < size(); ++v) {
            if (seen[v]) out.push_back(v);
        }
        return out;
    }

    std::vector<std::string> labels_;
    std::vector<Edge> edges_;
    std::vector<VertexSet> ne_, sp_, pa_, ch_, an_;
    VertexSet un_, rest_;
    Eigen::MatrixXi kind_;
};

struct Decomposition
{
    VertexSet un;          ///< vertices without parents or spouses
    VertexSet db;          ///< endpoints of directed or bidirected edges
    AncestralGraph g_un;   ///< induced on un (undirected edges only)
    AncestralGraph g_db;   ///< induced on db
};

inline Decomposition decompose(const AncestralGraph& g)
{
    Decomposition d;
    d.un = g.undirected_part();
    VertexSet db;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::undirected) {
            db.push_back(e.from);
            db.push_back(e.to);
        }
    }
    d.db = normalized(std::move(db));
    d.g_un = g.induced_subgraph(d.un);
    d.g_db = g.induced_subgraph(d.db);
    return d;
}

/// Builds a graph from the adjacency coding a_ij = a_ji = 1 for i - j,
/// a_ij = a_ji = 2 for i <-> j, and a_ij = 1, a_ji = 0 for i -> j.
inline AncestralGraph from_adjacency(const Eigen::MatrixXi& a, std::vector<std::string> labels = {})
{
    if (a.rows() != a.cols()) throw Error(ErrorCode::dimension_mismatch, "adjacency matrix is not square");
    const auto p = static_cast<std::size_t>(a.rows());
    if (labels.empty()) {
        for (std::size_t i = 0; i < p; ++i) labels.push_back(std::to_string(i));
    }
    if (labels.size() != p) throw Error(ErrorCode::dimension_mismatch, "label count differs from matrix size");

    std::vector<Edge> edges;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0) {
            throw Error(ErrorCode::invalid_coding, "nonzero diagonal entry at (" + std::to_string(i) + "," + std::to_string(i) + ")",
                        static_cast<std::size_t>(i));
        }
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
            const int x = a(i, j);
            const int y = a(j, i);
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            if (x == 0 && y == 0) continue;
            if (x == 1 && y == 1) edges.push_back(undirected(ui, uj));
            else if (x == 2 && y == 2) edges.push_back(bidirected(ui, uj));
            else if (x == 1 && y == 0) edges.push_back(directed(ui, uj));
            else if (x == 0 && y == 1) edges.push_back(directed(uj, ui));
            else {
                throw Error(ErrorCode::invalid_coding,
                            "entries a[" + std::to_string(i) + "][" + std::to_string(j) + "]=" + std::to_string(x) + " and a[" +
                                std::to_string(j) + "][" + std::to_string(i) + "]=" + std::to_string(y) + " are not a valid edge code",
                            ui);
            }
        }
    }
    return AncestralGraph::validate(std::move(labels), std::move(edges));
}

inline Eigen::MatrixXi to_adjacency(const AncestralGraph& g)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(p, p);
    for (const auto& e : g.edges()) {
        const auto i = static_cast<Eigen::Index>(e.from);
        const auto j = static_cast<Eigen::Index>(e.to);
        switch (e.kind) {
            case EdgeKind::undirected: a(i, j) = a(j, i) = 1; break;
            case EdgeKind::bidirected: a(i, j) = a(j, i) = 2; break;
            case EdgeKind::directed: a(i, j) = 1; break;
        }
    }
    return a;
}

} // namespace agfit
