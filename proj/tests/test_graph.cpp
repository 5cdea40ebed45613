#include <agfit/graph.hpp>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

#include <random>

using namespace agfit;
using agfit::testing::mixed5;

namespace {

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::invalid_argument;
}

std::optional<std::size_t> vertex_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.vertex();
    }
    return std::nullopt;
}

} // namespace

TEST(Validate, MixedFiveIsAncestral)
{
    const auto g = mixed5();
    EXPECT_EQ(g.size(), 5u);
    EXPECT_EQ(g.undirected_part(), (VertexSet{0, 1}));
    EXPECT_EQ(g.arrowhead_part(), (VertexSet{2, 3, 4}));
}

TEST(Validate, EdgelessGraph)
{
    const auto g = AncestralGraph::validate(3, {});
    EXPECT_EQ(g.undirected_part(), (VertexSet{0, 1, 2}));
    EXPECT_TRUE(g.edges().empty());
}

TEST(Validate, NeighbourAndSpouseViolatesConditionOne)
{
    auto make = [] { AncestralGraph::validate(3, {undirected(0, 1), bidirected(1, 2)}); };
    EXPECT_EQ(code_of(make), ErrorCode::condition_one_violated);
    EXPECT_EQ(vertex_of(make), 1u);
}

TEST(Validate, NeighbourAndParentViolatesConditionOne)
{
    auto make = [] { AncestralGraph::validate(3, {undirected(0, 1), directed(2, 1)}); };
    EXPECT_EQ(code_of(make), ErrorCode::condition_one_violated);
    EXPECT_EQ(vertex_of(make), 1u);
}

TEST(Validate, DirectedCycleViolatesConditionTwo)
{
    EXPECT_EQ(code_of([] { AncestralGraph::validate(3, {directed(0, 1), directed(1, 2), directed(2, 0)}); }),
              ErrorCode::condition_two_violated);
}

TEST(Validate, SpouseThatIsAnAncestorViolatesConditionTwo)
{
    // 0 -> 1 -> 2 together with 0 <-> 2
    auto make = [] { AncestralGraph::validate(3, {directed(0, 1), directed(1, 2), bidirected(0, 2)}); };
    EXPECT_EQ(code_of(make), ErrorCode::condition_two_violated);
    EXPECT_EQ(vertex_of(make), 0u);
}

TEST(Validate, StructuralErrors)
{
    EXPECT_EQ(code_of([] { AncestralGraph::validate(2, {directed(1, 1)}); }), ErrorCode::self_loop);
    EXPECT_EQ(code_of([] { AncestralGraph::validate(2, {directed(0, 1), bidirected(0, 1)}); }), ErrorCode::multi_edge);
    EXPECT_EQ(code_of([] { AncestralGraph::validate(2, {undirected(0, 1), undirected(1, 0)}); }), ErrorCode::multi_edge);
    EXPECT_EQ(code_of([] { AncestralGraph::validate(2, {directed(0, 5)}); }), ErrorCode::unknown_vertex);
}

TEST(Relations, MixedFive)
{
    const auto g = mixed5();
    const auto r2 = g.relations(2);
    EXPECT_TRUE(r2.ne.empty());
    EXPECT_EQ(r2.sp, (VertexSet{3}));
    EXPECT_EQ(r2.pa, (VertexSet{1}));
    const auto r0 = g.relations(0);
    EXPECT_EQ(r0.ne, (VertexSet{1}));
    EXPECT_TRUE(r0.sp.empty());
    EXPECT_TRUE(r0.pa.empty());
    EXPECT_EQ(code_of([&] { g.relations(9); }), ErrorCode::unknown_vertex);
}

TEST(Relations, IsolatedVertex)
{
    const auto g = AncestralGraph::validate(3, {directed(0, 1)});
    const auto r = g.relations(2);
    EXPECT_TRUE(r.ne.empty() && r.sp.empty() && r.pa.empty());
}

TEST(Relations, ConsistentWithEdgeList)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = agfit::testing::random_mixed_graph(6, rng);
        if (!g) continue;
        for (const auto& e : g->edges()) {
            auto has = [](const VertexSet& s, std::size_t v) { return std::binary_search(s.begin(), s.end(), v); };
            switch (e.kind) {
                case EdgeKind::undirected: EXPECT_TRUE(has(g->neighbors(e.from), e.to) && has(g->neighbors(e.to), e.from)); break;
                case EdgeKind::bidirected: EXPECT_TRUE(has(g->spouses(e.from), e.to) && has(g->spouses(e.to), e.from)); break;
                case EdgeKind::directed: EXPECT_TRUE(has(g->parents(e.to), e.from)); break;
            }
        }
        std::size_t degree = 0;
        for (std::size_t i = 0; i < g->size(); ++i)
            degree += g->neighbors(i).size() + g->spouses(i).size() + g->parents(i).size() + g->children(i).size();
        EXPECT_EQ(degree, 2 * g->edges().size());
    }
}

TEST(Ancestors, MixedFive)
{
    const auto g = mixed5();
    // 0 - 1 is undirected, so 0 is not an ancestor of 4
    EXPECT_EQ(g.ancestors({4}), (VertexSet{1, 2, 4}));
    EXPECT_EQ(g.ancestors({}), VertexSet{});
    EXPECT_EQ(g.ancestors(all_vertices(5)), all_vertices(5));
    EXPECT_EQ(g.ancestors({3}), (VertexSet{3}));
}

TEST(Ancestors, MonotoneAndIdempotent)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = agfit::testing::random_mixed_graph(6, rng, 0.6);
        if (!g) continue;
        for (const auto& b : agfit::testing::subsets(all_vertices(6))) {
            const auto an_b = g->ancestors(b);
            EXPECT_EQ(g->ancestors(an_b), an_b);
            EXPECT_TRUE(std::includes(an_b.begin(), an_b.end(), b.begin(), b.end()));
            if (b.empty()) continue;
            VertexSet a(b.begin(), b.end() - 1);
            const auto an_a = g->ancestors(a);
            EXPECT_TRUE(std::includes(an_b.begin(), an_b.end(), an_a.begin(), an_a.end()));
        }
    }
}

TEST(Decompose, MixedFive)
{
    const auto d = decompose(mixed5());
    EXPECT_EQ(d.un, (VertexSet{0, 1}));
    EXPECT_EQ(d.db, (VertexSet{1, 2, 3, 4}));
    ASSERT_EQ(d.g_un.size(), 2u);
    EXPECT_EQ(d.g_un.edges().size(), 1u);
    EXPECT_EQ(d.g_un.edge_kind(0, 1), EdgeKind::undirected);
    // induced on 1,2,3,4: 1 -> 2, 2 -> 4, 2 <-> 3, 3 <-> 4
    ASSERT_EQ(d.g_db.size(), 4u);
    EXPECT_EQ(d.g_db.labels(), (std::vector<std::string>{"1", "2", "3", "4"}));
    EXPECT_EQ(d.g_db.edges().size(), 4u);
    EXPECT_EQ(d.g_db.edge_kind(0, 1), EdgeKind::directed);
    EXPECT_EQ(d.g_db.edge_kind(1, 2), EdgeKind::bidirected);
}

TEST(Decompose, PureGraphs)
{
    const auto und = decompose(AncestralGraph::validate(3, {undirected(0, 1), undirected(1, 2)}));
    EXPECT_TRUE(und.db.empty());
    EXPECT_EQ(und.un, all_vertices(3));
    const auto bi = decompose(AncestralGraph::validate(3, {bidirected(0, 1), bidirected(1, 2), bidirected(0, 2)}));
    EXPECT_TRUE(bi.un.empty());
    EXPECT_EQ(bi.db, all_vertices(3));
}

TEST(Decompose, CoverageAndEdgesLeavingTheUndirectedPart)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = agfit::testing::random_mixed_graph(6, rng);
        if (!g) continue;
        const auto d = decompose(*g);
        const auto both = set_union(d.un, d.db);
        // isolated vertices have no parents or spouses, so un together with db covers V
        EXPECT_EQ(both, all_vertices(6));
        for (auto i : d.un) EXPECT_TRUE(g->parents(i).empty() && g->spouses(i).empty());
        for (const auto& e : g->edges()) {
            const bool a = g->in_undirected_part(e.from);
            const bool b = g->in_undirected_part(e.to);
            if (a && b) EXPECT_EQ(e.kind, EdgeKind::undirected);
            if (a != b) {
                EXPECT_EQ(e.kind, EdgeKind::directed);
                EXPECT_TRUE(g->in_undirected_part(e.from));
            }
        }
    }
}

TEST(Adjacency, MothMatrix)
{
    Eigen::MatrixXi mag(5, 5);
    mag << 0, 2, 2, 0, 0,
           2, 0, 1, 0, 0,
           2, 0, 0, 0, 0,
           0, 0, 0, 0, 1,
           0, 1, 0, 1, 0;
    const auto g = from_adjacency(mag, {"max", "cloud", "moth", "wind", "rain"});
    auto at = [&](const char* s) { return *g.find_label(s); };
    EXPECT_EQ(g.edges().size(), 5u);
    EXPECT_EQ(g.edge_kind(at("rain"), at("wind")), EdgeKind::undirected);
    EXPECT_EQ(g.parents(at("cloud")), (VertexSet{at("rain")}));
    EXPECT_EQ(g.parents(at("moth")), (VertexSet{at("cloud")}));
    EXPECT_EQ(g.edge_kind(at("max"), at("cloud")), EdgeKind::bidirected);
    EXPECT_EQ(g.edge_kind(at("max"), at("moth")), EdgeKind::bidirected);
    EXPECT_EQ(to_adjacency(g), mag);
}

TEST(Adjacency, ZeroMatrixAndInvalidCodes)
{
    EXPECT_TRUE(from_adjacency(Eigen::MatrixXi::Zero(4, 4)).edges().empty());
    Eigen::MatrixXi bad = Eigen::MatrixXi::Zero(2, 2);
    bad(0, 1) = 2;
    bad(1, 0) = 1;
    EXPECT_EQ(code_of([&] { from_adjacency(bad); }), ErrorCode::invalid_coding);
    bad(1, 0) = 0;
    EXPECT_EQ(code_of([&] { from_adjacency(bad); }), ErrorCode::invalid_coding);
    bad(0, 1) = 3;
    EXPECT_EQ(code_of([&] { from_adjacency(bad); }), ErrorCode::invalid_coding);
}

TEST(Adjacency, RoundTrip)
{
    std::mt19937_64 rng(3);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const auto g = agfit::testing::random_mixed_graph(6, rng);
        if (!g) continue;
        ++checked;
        const auto a = to_adjacency(*g);
        const auto h = from_adjacency(a);
        EXPECT_EQ(to_adjacency(h), a);
        ASSERT_EQ(h.edges().size(), g->edges().size());
        for (std::size_t k = 0; k < h.edges().size(); ++k) {
            EXPECT_EQ(h.edges()[k].from, g->edges()[k].from);
            EXPECT_EQ(h.edges()[k].to, g->edges()[k].to);
            EXPECT_EQ(h.edges()[k].kind, g->edges()[k].kind);
        }
    }
    EXPECT_GT(checked, 50);
}

TEST(Validate, DagsAndUndirectedGraphsAreAncestral)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        EXPECT_NO_THROW(agfit::testing::random_dag(7, rng, 0.6));
        std::vector<Edge> edges;
        for (std::size_t a = 0; a < 7; ++a)
            for (std::size_t b = a + 1; b < 7; ++b)
                if (u(rng) < 0.5) edges.push_back(undirected(a, b));
        EXPECT_NO_THROW(AncestralGraph::validate(7, edges));
    }
}
