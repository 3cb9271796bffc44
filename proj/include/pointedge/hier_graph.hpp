#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pointedge/geom.hpp"

namespace pointedge {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One resolution level of the hierarchical graph. Edges are grouped by
/// source point and sorted by destination inside each group; the out-edges of
/// point p are edges[out_offsets[p] .. out_offsets[p+1]).
struct GraphLayer {
    int layer_index = 0;
    std::vector<std::size_t> point_indices;  // layer-local -> full-resolution row
    std::vector<Edge> edges;
    std::vector<std::size_t> out_offsets;

    std::size_t point_count() const noexcept { return out_offsets.empty() ? 0 : out_offsets.size() - 1; }
    std::size_t edge_count() const noexcept { return edges.size(); }
    std::span<const Edge> out_edges(std::size_t p) const {
        return {edges.data() + out_offsets[p], out_offsets[p + 1] - out_offsets[p]};
    }
    std::optional<std::size_t> find_edge(std::size_t src, std::size_t dst) const;
    std::vector<std::size_t> destinations() const;

    /// Builds a layer from per-point destination lists (sorted and deduplicated here).
    static GraphLayer from_adjacency(int layer_index, std::vector<std::size_t> point_indices,
                                     std::vector<std::vector<std::size_t>> adjacency);
};

/// Per layer-L edge: the matched layer-(L-1) edges and their normalized weights,
/// entries [offsets[e], offsets[e+1]).
struct EdgeInterpMap {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> prev_edges;
    std::vector<double> weights;

    std::size_t edge_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

enum class GraphMode { hierarchical, independent };

/// Points of one layer: rows in the full-resolution block plus positions.
struct PointLayer {
    std::vector<std::size_t> indices;
    Positions positions;
};

struct HierGraph {
    GraphMode mode = GraphMode::hierarchical;
    std::vector<GraphLayer> layers;  // layer 0 coarsest
    /// interp_maps[L - 1] maps layer-L edges onto layer-(L-1) edges (hierarchical mode only).
    std::vector<EdgeInterpMap> interp_maps;
    /// knn_cross[L - 1]: k_interp nearest layer-(L-1) points of every layer-L point.
    std::vector<NeighborTable> knn_cross;

    const EdgeInterpMap& interp(std::size_t layer) const { return interp_maps.at(layer - 1); }
    const NeighborTable& cross(std::size_t layer) const { return knn_cross.at(layer - 1); }
};

/// kNN inside one point set with the query point forced into its own list
/// (placed first, displacing the farthest neighbor) when coincident duplicates
/// would otherwise push it out.
NeighborTable knn_with_self(const Positions& points, std::size_t k);

/// Nearest layer-(L-1) points of each layer-L point. `prev_local[i]`, when set,
/// is point i's own index in layer L-1; it is then guaranteed to appear in the
/// list at distance 0.
NeighborTable cross_neighbors(const Positions& layer, const Positions& prev, std::size_t k,
                              std::span<const std::optional<std::size_t>> prev_local);

/// Layer-local position of every layer-L point inside layer L-1, if present.
std::vector<std::optional<std::size_t>> locate_in_previous(const PointLayer& layer, const PointLayer& prev);

/// E_0: each point linked to its k0 nearest points, itself included.
GraphLayer init_graph(const Positions& points0, std::size_t k0, std::vector<std::size_t> point_indices = {});

/// Cartesian product of the two endpoints' coarse-layer neighbor lists, i-major.
std::vector<std::pair<std::size_t, std::size_t>> neighbor_edge_set(std::size_t src, std::size_t dst,
                                                                   const NeighborTable& cross);

/// Endpoint offsets of one matched coarse edge: d_src = |p_i - p_i'|, d_dst = |p_j - p_j'|.
struct MatchedEdge {
    double d_src = 0.0;
    double d_dst = 0.0;
};

inline constexpr double interp_epsilon = 1e-8;
inline constexpr double interp_power = 2.0;

/// w = 1 / ((d_src^t + eps)(d_dst^t + eps)), normalized to sum to one.
std::vector<double> edge_upsample_weights(std::span<const MatchedEdge> matched);

struct LayerBuild {
    GraphLayer layer;
    EdgeInterpMap interp;
};

/// Candidate kL-NN edges of layer L, kept only when their neighboring-edge set
/// meets E_{L-1}. A point left with nothing keeps its self-edge.
LayerBuild build_layer_graph(const PointLayer& points, std::size_t k, const GraphLayer& prev,
                             const NeighborTable& cross, int layer_index);

HierGraph build_hierarchy(std::span<const PointLayer> layers, std::span<const std::size_t> k_list,
                          std::size_t k_interp, GraphMode mode = GraphMode::hierarchical);

/// Invariant audit. Returns one message per violation; empty means healthy.
std::vector<std::string> check_layer(const GraphLayer& layer, std::size_t max_out_degree = 0);
std::vector<std::string> check_interp(const EdgeInterpMap& interp, const GraphLayer& layer, const GraphLayer& prev,
                                      const NeighborTable& cross);
std::vector<std::string> check_hierarchy(const HierGraph& graph, std::span<const std::size_t> k_list = {});

/// Text dump: `L src dst` per edge, then `L edge prev_edge weight` per interpolation entry.
std::string dump_graph(const HierGraph& graph);

}  // namespace pointedge
