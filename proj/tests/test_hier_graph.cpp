#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "graph_oracle.hpp"
#include "pointedge/errors.hpp"
#include "pointedge/hier_graph.hpp"

using namespace pointedge;
using pointedge::testing::knn_edges;
using pointedge::testing::oracle_layer;

namespace {

Positions random_points(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Positions p(n);
    for (auto& v : p) v = {u(rng), u(rng), u(rng)};
    return p;
}

std::vector<std::pair<std::size_t, std::size_t>> edge_pairs(const GraphLayer& g) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const Edge& e : g.edges) out.emplace_back(e.src, e.dst);
    return out;
}

// Nested layers: a random order of the block, coarse layers are prefixes.
std::vector<PointLayer> nested_layers(const Positions& block, const std::vector<std::size_t>& sizes,
                                      std::mt19937_64& rng) {
    std::vector<std::size_t> order(block.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<PointLayer> layers;
    for (std::size_t n : sizes) {
        PointLayer l;
        l.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t i : l.indices) l.positions.push_back(block[i]);
        layers.push_back(std::move(l));
    }
    return layers;
}

PointLayer as_layer(const Positions& p, std::vector<std::size_t> indices) { return PointLayer{std::move(indices), p}; }

}  // namespace

TEST(InitGraph, SixteenPointsFourNeighbors) {
    std::mt19937_64 rng(1);
    const GraphLayer g = init_graph(random_points(16, rng), 4);
    EXPECT_EQ(g.edge_count(), 64u);
    for (std::size_t p = 0; p < 16; ++p) {
        EXPECT_EQ(g.out_edges(p).size(), 4u);
        EXPECT_TRUE(g.find_edge(p, p).has_value());
    }
    EXPECT_TRUE(check_layer(g, 4).empty());
}

TEST(InitGraph, SinglePointHasSelfEdge) {
    const GraphLayer g = init_graph({{1, 2, 3}}, 1);
    ASSERT_EQ(g.edge_count(), 1u);
    EXPECT_EQ(g.edges[0], (Edge{0, 0}));
}

TEST(InitGraph, MatchesBruteForceKnnWithSelf) {
    std::mt19937_64 rng(2);
    const Positions p = random_points(5, rng);
    EXPECT_EQ(edge_pairs(init_graph(p, 3)), knn_edges(p, 3));
    EXPECT_THROW(init_graph(p, 6), ValidationError);
}

TEST(InitGraph, CoincidentDuplicatesKeepSelfEdges) {
    const Positions p{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
    const GraphLayer g = init_graph(p, 2);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(g.find_edge(i, i).has_value()) << i;
    EXPECT_TRUE(check_layer(g, 2).empty());
}

TEST(NeighborEdgeSet, NinePairsForThreeNeighbors) {
    std::mt19937_64 rng(3);
    const Positions coarse = random_points(6, rng), fine = random_points(10, rng);
    const NeighborTable cross = knn(fine, coarse, 3);
    const auto set = neighbor_edge_set(2, 7, cross);
    EXPECT_EQ(set.size(), 9u);
    std::set<std::pair<std::size_t, std::size_t>> oracle;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) oracle.emplace(cross.index(2, a), cross.index(7, b));
    EXPECT_EQ(std::set(set.begin(), set.end()), oracle);
}

TEST(NeighborEdgeSet, PresentEndpointsWithSingleNeighborGiveTheEdgeItself) {
    const Positions coarse{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const Positions fine{{0, 1, 0}, {0.4, 0, 0}, {1, 0, 0}, {0, 0, 0}};
    const std::vector<std::optional<std::size_t>> local{2, std::nullopt, 1, 0};
    const NeighborTable cross = cross_neighbors(fine, coarse, 1, local);
    const auto set = neighbor_edge_set(0, 2, cross);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set[0], (std::pair<std::size_t, std::size_t>{2, 1}));
}

TEST(UpsampleWeights, SingletonIsOne) {
    const MatchedEdge m[] = {{0.3, 0.7}};
    EXPECT_EQ(edge_upsample_weights(m), std::vector<double>{1.0});
}

TEST(UpsampleWeights, DistancePairsGiveEightyTwenty) {
    const MatchedEdge m[] = {{1, 1}, {1, 2}};
    const auto w = edge_upsample_weights(m);
    const double eps = 1e-8;
    const double r1 = 1.0 / ((1 + eps) * (1 + eps)), r2 = 1.0 / ((1 + eps) * (4 + eps));
    EXPECT_NEAR(w[0], r1 / (r1 + r2), 1e-15);
    EXPECT_NEAR(w[0], 0.8, 1e-6);
    EXPECT_NEAR(w[1], 0.2, 1e-6);
}

TEST(UpsampleWeights, CoincidentEdgeDominates) {
    const MatchedEdge m[] = {{0.5, 0.2}, {0, 0}, {1.0, 3.0}};
    EXPECT_GE(edge_upsample_weights(m)[1], 1 - 1e-6);
    EXPECT_THROW(edge_upsample_weights(std::span<const MatchedEdge>{}), InternalError);
}

TEST(LayerGraph, FullyConnectedCoarseLayerKeepsAllCandidates) {
    std::mt19937_64 rng(4);
    const Positions block = random_points(12, rng);
    auto layers = nested_layers(block, {4, 12}, rng);
    const GraphLayer g0 = init_graph(layers[0].positions, 4, layers[0].indices);  // complete graph
    const NeighborTable cross = cross_neighbors(layers[1].positions, layers[0].positions, 3,
                                                locate_in_previous(layers[1], layers[0]));
    const LayerBuild b = build_layer_graph(layers[1], 5, g0, cross, 1);
    EXPECT_EQ(b.layer.edge_count(), 12u * 5u);
}

// Clusters A and B at x ~ 0 and x ~ 10 never linked at layer 0; X and Y sit
// between them, nearest to A and B respectively.
class TwoClusters : public ::testing::Test {
protected:
    Positions coarse{{0, 0, 0}, {0.1, 0, 0}, {10, 0, 0}, {10.1, 0, 0}};
    Positions fine{{0, 0, 0}, {0.1, 0, 0}, {10, 0, 0}, {10.1, 0, 0}, {4.9, 0, 0}, {5.1, 0, 0}};
    GraphLayer g0 = init_graph(coarse, 2);
    PointLayer layer1 = as_layer(fine, {0, 1, 2, 3, 4, 5});
    PointLayer layer0 = as_layer(coarse, {0, 1, 2, 3});
    NeighborTable cross = cross_neighbors(fine, coarse, 1, locate_in_previous(layer1, layer0));
};

TEST_F(TwoClusters, CrossClusterCandidateIsDiscarded) {
    ASSERT_EQ(g0.edge_count(), 8u);
    const LayerBuild b = build_layer_graph(layer1, 2, g0, cross, 1);
    EXPECT_FALSE(b.layer.find_edge(4, 5).has_value());
    EXPECT_FALSE(b.layer.find_edge(5, 4).has_value());
    // Exhaustive check: (x', y') with x' in N(X), y' in N(Y) is never a layer-0 edge.
    for (const auto& [a, c] : neighbor_edge_set(4, 5, cross)) EXPECT_FALSE(g0.find_edge(a, c).has_value());
}

TEST_F(TwoClusters, IsolatedPointKeepsOnlyItsSelfEdge) {
    const LayerBuild b = build_layer_graph(layer1, 2, g0, cross, 1);
    ASSERT_EQ(b.layer.out_edges(4).size(), 1u);
    EXPECT_EQ(b.layer.out_edges(4)[0], (Edge{4, 4}));
    ASSERT_EQ(b.layer.out_edges(5).size(), 1u);
    EXPECT_TRUE(check_interp(b.interp, b.layer, g0, cross).empty());
}

TEST_F(TwoClusters, RemovingSupportRemovesEdge) {
    const LayerBuild b = build_layer_graph(layer1, 2, g0, cross, 1);
    ASSERT_TRUE(b.layer.find_edge(0, 1).has_value());
    // Layer 0 without the (0,1) edge: the layer-1 edge loses its only support.
    std::vector<std::vector<std::size_t>> adj(4);
    for (const Edge& e : g0.edges) {
        if (!(e.src == 0 && e.dst == 1)) adj[e.src].push_back(e.dst);
    }
    const GraphLayer weakened = GraphLayer::from_adjacency(0, {0, 1, 2, 3}, adj);
    const LayerBuild c = build_layer_graph(layer1, 2, weakened, cross, 1);
    EXPECT_FALSE(c.layer.find_edge(0, 1).has_value());
    EXPECT_TRUE(c.layer.find_edge(1, 0).has_value());
}

TEST(LayerGraph, MatchesExhaustiveOracle) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        std::mt19937_64 rng(seed);
        const Positions block = random_points(40, rng);
        auto layers = nested_layers(block, {6, 15, 40}, rng);
        const std::vector<std::size_t> ks{3, 5, 7};
        const HierGraph g = build_hierarchy(layers, ks, 3);
        auto coarse_edges = knn_edges(layers[0].positions, 3);
        ASSERT_EQ(edge_pairs(g.layers[0]), coarse_edges);
        for (std::size_t l = 1; l < layers.size(); ++l) {
            const auto o = oracle_layer(layers[l].positions, layers[l].indices, ks[l], layers[l - 1].positions,
                                        layers[l - 1].indices, coarse_edges, 3);
            ASSERT_EQ(edge_pairs(g.layers[l]), o.edges) << "seed " << seed << " layer " << l;
            const EdgeInterpMap& m = g.interp(l);
            for (std::size_t e = 0; e < o.edges.size(); ++e) {
                ASSERT_EQ(m.offsets[e + 1] - m.offsets[e], o.matches[e].size());
                for (std::size_t t = 0; t < o.matches[e].size(); ++t) {
                    EXPECT_EQ(m.prev_edges[m.offsets[e] + t], o.matches[e][t].first);
                    EXPECT_NEAR(m.weights[m.offsets[e] + t], o.matches[e][t].second, 1e-12);
                }
            }
            coarse_edges = o.edges;
        }
    }
}

TEST(Hierarchy, FullScaleLayerSizes) {
    std::mt19937_64 rng(5);
    const Positions block = random_points(4096, rng);
    std::vector<std::size_t> order(4096);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto fps = farthest_point_sample(block, 1024, 0);
    std::vector<PointLayer> layers;
    for (std::size_t n : {16u, 64u, 256u, 1024u}) {
        PointLayer l;
        l.indices.assign(fps.begin(), fps.begin() + n);
        for (std::size_t i : l.indices) l.positions.push_back(block[i]);
        layers.push_back(std::move(l));
    }
    layers.push_back(PointLayer{order, block});
    const std::vector<std::size_t> ks{4, 6, 10, 14, 16};
    const HierGraph g = build_hierarchy(layers, ks, 3);
    ASSERT_EQ(g.layers.size(), 5u);
    EXPECT_EQ(g.layers[0].edge_count(), 64u);
    EXPECT_EQ(g.interp_maps.size(), 4u);
    EXPECT_EQ(g.knn_cross.size(), 4u);
    EXPECT_TRUE(check_hierarchy(g, ks).empty());
}

TEST(Hierarchy, TwoLayerMapsReferenceOnlyCoarseEdges) {
    std::mt19937_64 rng(6);
    const Positions block = random_points(8, rng);
    auto layers = nested_layers(block, {4, 8}, rng);
    const std::vector<std::size_t> ks{2, 3};
    const HierGraph g = build_hierarchy(layers, ks, 3);
    for (std::size_t pe : g.interp(1).prev_edges) EXPECT_LT(pe, g.layers[0].edge_count());
    EXPECT_TRUE(check_hierarchy(g, ks).empty());
}

TEST(Hierarchy, RandomInstancesSatisfyInvariants) {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n2 = std::uniform_int_distribution<std::size_t>(12, 120)(rng);
        const std::size_t n1 = std::uniform_int_distribution<std::size_t>(5, n2 - 1)(rng);
        const std::size_t n0 = std::uniform_int_distribution<std::size_t>(3, n1 - 1)(rng);
        auto layers = nested_layers(random_points(n2, rng), {n0, n1, n2}, rng);
        const std::vector<std::size_t> ks{std::min<std::size_t>(3, n0), 5, 8};
        const HierGraph g = build_hierarchy(layers, ks, std::min<std::size_t>(3, n0));
        const auto bad = check_hierarchy(g, ks);
        EXPECT_TRUE(bad.empty()) << "seed " << seed << ": " << (bad.empty() ? "" : bad.front());
    }
}

TEST(Hierarchy, IndependentModeIsPlainKnn) {
    std::mt19937_64 rng(7);
    auto layers = nested_layers(random_points(50, rng), {8, 20, 50}, rng);
    const std::vector<std::size_t> ks{4, 6, 10};
    const HierGraph g = build_hierarchy(layers, ks, 3, GraphMode::independent);
    EXPECT_TRUE(g.interp_maps.empty());
    for (std::size_t l = 0; l < 3; ++l) {
        EXPECT_EQ(edge_pairs(g.layers[l]), knn_edges(layers[l].positions, ks[l]));
        EXPECT_EQ(g.layers[l].edge_count(), layers[l].positions.size() * ks[l]);
    }
    EXPECT_TRUE(check_hierarchy(g, ks).empty());
}

TEST(Hierarchy, DeterministicDump) {
    auto build = [] {
        std::mt19937_64 rng(8);
        auto layers = nested_layers(random_points(30, rng), {5, 12, 30}, rng);
        const std::vector<std::size_t> ks{3, 4, 6};
        return dump_graph(build_hierarchy(layers, ks, 3));
    };
    EXPECT_EQ(build(), build());
}

TEST(Hierarchy, DumpFormat) {
    std::mt19937_64 rng(9);
    auto layers = nested_layers(random_points(10, rng), {3, 10}, rng);
    const std::vector<std::size_t> ks{2, 3};
    const HierGraph g = build_hierarchy(layers, ks, 2);
    std::istringstream in(dump_graph(g));
    std::string line;
    std::size_t edge_lines = 0, interp_lines = 0;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::vector<std::string> tok;
        for (std::string t; f >> t;) tok.push_back(t);
        if (tok.size() == 3) {
            ++edge_lines;
        } else {
            ASSERT_EQ(tok.size(), 4u) << line;
            ++interp_lines;
            const auto dot = tok[3].find('.');
            ASSERT_NE(dot, std::string::npos);
            EXPECT_EQ(tok[3].size() - dot - 1, 9u);
        }
    }
    EXPECT_EQ(edge_lines, g.layers[0].edge_count() + g.layers[1].edge_count());
    EXPECT_EQ(interp_lines, g.interp(1).prev_edges.size());
}

TEST(Hierarchy, RejectsBadInputs) {
    std::mt19937_64 rng(10);
    auto layers = nested_layers(random_points(10, rng), {3, 10}, rng);
    const std::vector<std::size_t> ks{2, 3}, short_ks{2};
    EXPECT_THROW(build_hierarchy(layers, short_ks, 2), ValidationError);
    EXPECT_THROW(build_hierarchy(layers, ks, 4), ValidationError);
    const std::vector<std::size_t> big{2, 11};
    EXPECT_THROW(build_hierarchy(layers, big, 2), ValidationError);
}
