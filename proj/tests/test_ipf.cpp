#include <agfit/ipf.hpp>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

#include <random>

using namespace agfit;
using agfit::testing::max_abs_diff;

namespace {

AncestralGraph undirected_graph(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& pairs)
{
    std::vector<Edge> edges;
    for (auto [a, b] : pairs) edges.push_back(undirected(a, b));
    return AncestralGraph::validate(p, edges);
}

// Zero-padded inverse of the (rows, rows) block.
Eigen::MatrixXd padded_inverse(const Eigen::MatrixXd& s, const std::vector<Eigen::Index>& rows)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    const Eigen::MatrixXd inv = gather(s, rows, rows).inverse();
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < rows.size(); ++b)
            out(rows[a], rows[b]) = inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    return out;
}

} // namespace

TEST(Cliques, SmallGraphs)
{
    const auto path = undirected_graph(4, {{0, 1}, {1, 2}, {2, 3}});
    EXPECT_EQ(maximal_cliques(path), (std::vector<VertexSet>{{0, 1}, {1, 2}, {2, 3}}));
    const auto tri = undirected_graph(4, {{0, 1}, {1, 2}, {0, 2}});
    EXPECT_EQ(maximal_cliques(tri), (std::vector<VertexSet>{{0, 1, 2}, {3}}));
    EXPECT_EQ(undirected_components(tri), (std::vector<VertexSet>{{0, 1, 2}, {3}}));
}

TEST(Ipf, CompleteGraphInvertsS)
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd s = agfit::testing::random_spd(4, rng);
    const auto g = undirected_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    EXPECT_LT(max_abs_diff(fit_undirected_ipf(g, s), s.inverse()), 1e-9);
}

TEST(Ipf, EdgelessGraphIsDiagonal)
{
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd s = agfit::testing::random_spd(4, rng);
    const Eigen::MatrixXd k = fit_undirected_ipf(AncestralGraph::validate(4, {}), s);
    EXPECT_LT(max_abs_diff(k, Eigen::MatrixXd(s.diagonal().cwiseInverse().asDiagonal())), 1e-14);
}

TEST(Ipf, SingleEdgeWindRain)
{
    // wind and rain from the moth example: one edge, so Lambda is the inverse of the 2x2 block
    Eigen::MatrixXd s(2, 2);
    s << 1.00, 0.05, 0.05, 1.00;
    const Eigen::MatrixXd k = fit_undirected_ipf(undirected_graph(2, {{0, 1}}), s);
    EXPECT_LT(max_abs_diff(k, s.inverse()), 1e-12);
}

TEST(Ipf, DecomposableClosedForm)
{
    // chordal graph with cliques {0,1,2}, {1,2,3}, {3,4}; separators {1,2}, {3}
    const auto g = undirected_graph(5, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {3, 4}});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd s = agfit::testing::random_spd(5, rng);
        const Eigen::MatrixXd expected = padded_inverse(s, {0, 1, 2}) + padded_inverse(s, {1, 2, 3}) + padded_inverse(s, {3, 4}) -
                                         padded_inverse(s, {1, 2}) - padded_inverse(s, {3});
        EXPECT_LT(max_abs_diff(fit_undirected_ipf(g, s), expected), 1e-8);
    }
}

TEST(Ipf, ChordlessCycleMatchesMarginsAndPattern)
{
    const auto g = undirected_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd s = agfit::testing::random_spd(4, rng);
        const Eigen::MatrixXd k = fit_undirected_ipf(g, s);
        const Eigen::MatrixXd sigma = k.inverse();
        EXPECT_EQ(k(0, 2), 0.0);
        EXPECT_EQ(k(1, 3), 0.0);
        for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {0, 1}, {1, 2}, {2, 3}, {0, 3}})
            EXPECT_NEAR(sigma(a, b), s(a, b), 1e-9);
    }
}

TEST(Ipf, RejectsNonUndirectedGraphs)
{
    EXPECT_THROW(fit_undirected_ipf(AncestralGraph::validate(2, {directed(0, 1)}), Eigen::MatrixXd::Identity(2, 2)), Error);
    EXPECT_THROW(fit_undirected_ipf(AncestralGraph::validate(2, {}), Eigen::MatrixXd::Identity(3, 3)), Error);
}
