#include "pointedge/hier_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "pointedge/errors.hpp"

namespace pointedge {

std::optional<std::size_t> GraphLayer::find_edge(std::size_t src, std::size_t dst) const {
    if (src >= point_count()) return std::nullopt;
    const auto begin = edges.begin() + static_cast<std::ptrdiff_t>(out_offsets[src]);
    const auto end = edges.begin() + static_cast<std::ptrdiff_t>(out_offsets[src + 1]);
    const auto it = std::lower_bound(begin, end, dst, [](const Edge& e, std::size_t d) { return e.dst < d; });
    if (it == end || it->dst != dst) return std::nullopt;
    return static_cast<std::size_t>(it - edges.begin());
}

std::vector<std::size_t> GraphLayer::destinations() const {
    std::vector<std::size_t> out(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) out[e] = edges[e].dst;
    return out;
}

GraphLayer GraphLayer::from_adjacency(int layer_index, std::vector<std::size_t> point_indices,
                                      std::vector<std::vector<std::size_t>> adjacency) {
    GraphLayer g;
    g.layer_index = layer_index;
    g.point_indices = std::move(point_indices);
    g.out_offsets.reserve(adjacency.size() + 1);
    g.out_offsets.push_back(0);
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        auto& dsts = adjacency[i];
        std::sort(dsts.begin(), dsts.end());
        dsts.erase(std::unique(dsts.begin(), dsts.end()), dsts.end());
        for (std::size_t d : dsts) g.edges.push_back({i, d});
        g.out_offsets.push_back(g.edges.size());
    }
    return g;
}

NeighborTable knn_with_self(const Positions& points, std::size_t k) {
    std::vector<std::optional<std::size_t>> self(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) self[i] = i;
    return cross_neighbors(points, points, k, self);
}

NeighborTable cross_neighbors(const Positions& layer, const Positions& prev, std::size_t k,
                              std::span<const std::optional<std::size_t>> prev_local) {
    NeighborTable table = knn(layer, prev, k);
    if (prev_local.empty()) return table;
    if (prev_local.size() != layer.size()) throw ValidationError("cross_neighbors: prev_local size mismatch");
    for (std::size_t q = 0; q < layer.size(); ++q) {
        if (!prev_local[q]) continue;
        const std::size_t self = *prev_local[q];
        auto* idx = table.indices.data() + q * k;
        auto* dist = table.distances.data() + q * k;
        if (std::find(idx, idx + k, self) != idx + k) continue;
        // Coincident duplicates with lower indices crowded the point out of its own list.
        for (std::size_t j = k - 1; j > 0; --j) {
            idx[j] = idx[j - 1];
            dist[j] = dist[j - 1];
        }
        idx[0] = self;
        dist[0] = 0.0;
    }
    return table;
}

std::vector<std::optional<std::size_t>> locate_in_previous(const PointLayer& layer, const PointLayer& prev) {
    std::unordered_map<std::size_t, std::size_t> where;
    where.reserve(prev.indices.size());
    for (std::size_t i = 0; i < prev.indices.size(); ++i) where.emplace(prev.indices[i], i);
    std::vector<std::optional<std::size_t>> out(layer.indices.size());
    for (std::size_t i = 0; i < layer.indices.size(); ++i) {
        if (auto it = where.find(layer.indices[i]); it != where.end()) out[i] = it->second;
    }
    return out;
}

GraphLayer init_graph(const Positions& points0, std::size_t k0, std::vector<std::size_t> point_indices) {
    if (points0.empty()) throw ValidationError("init_graph: no points");
    if (k0 == 0 || k0 > points0.size()) {
        throw ValidationError("init_graph: k0 = " + std::to_string(k0) + " must lie in [1, " +
                              std::to_string(points0.size()) + "]");
    }
    if (point_indices.empty()) {
        point_indices.resize(points0.size());
        std::iota(point_indices.begin(), point_indices.end(), std::size_t{0});
    }
    const NeighborTable nn = knn_with_self(points0, k0);
    std::vector<std::vector<std::size_t>> adjacency(points0.size());
    for (std::size_t i = 0; i < points0.size(); ++i) {
        adjacency[i].assign(nn.indices.begin() + static_cast<std::ptrdiff_t>(i * k0),
                            nn.indices.begin() + static_cast<std::ptrdiff_t>((i + 1) * k0));
    }
    return GraphLayer::from_adjacency(0, std::move(point_indices), std::move(adjacency));
}

std::vector<std::pair<std::size_t, std::size_t>> neighbor_edge_set(std::size_t src, std::size_t dst,
                                                                   const NeighborTable& cross) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(cross.k * cross.k);
    for (std::size_t a = 0; a < cross.k; ++a) {
        for (std::size_t b = 0; b < cross.k; ++b) out.emplace_back(cross.index(src, a), cross.index(dst, b));
    }
    return out;
}

std::vector<double> edge_upsample_weights(std::span<const MatchedEdge> matched) {
    if (matched.empty()) throw InternalError("edge_upsample_weights: empty match set");
    std::vector<double> w;
    w.reserve(matched.size());
    double sum = 0.0;
    for (const auto& m : matched) {
        const double raw = 1.0 / ((std::pow(m.d_src, interp_power) + interp_epsilon) *
                                  (std::pow(m.d_dst, interp_power) + interp_epsilon));
        w.push_back(raw);
        sum += raw;
    }
    for (double& v : w) v /= sum;
    return w;
}

LayerBuild build_layer_graph(const PointLayer& points, std::size_t k, const GraphLayer& prev,
                             const NeighborTable& cross, int layer_index) {
    const std::size_t n = points.positions.size();
    if (k == 0 || k > n) {
        throw ValidationError("build_layer_graph: k = " + std::to_string(k) + " must lie in [1, " +
                              std::to_string(n) + "]");
    }
    if (cross.query_count != n) throw ValidationError("build_layer_graph: cross-layer table size mismatch");

    const NeighborTable candidates = knn_with_self(points.positions, k);

    struct Match {
        std::size_t prev_edge;
        MatchedEdge offsets;
    };
    std::vector<std::vector<std::size_t>> adjacency(n);
    // Matches keyed by (src, dst) so they can be laid out after sorting.
    std::vector<std::vector<std::pair<std::size_t, std::vector<Match>>>> matches(n);

    auto collect = [&](std::size_t i, std::size_t j) {
        std::vector<Match> found;
        for (std::size_t a = 0; a < cross.k; ++a) {
            for (std::size_t b = 0; b < cross.k; ++b) {
                if (auto e = prev.find_edge(cross.index(i, a), cross.index(j, b))) {
                    found.push_back({*e, {cross.dist(i, a), cross.dist(j, b)}});
                }
            }
        }
        std::sort(found.begin(), found.end(), [](const Match& x, const Match& y) { return x.prev_edge < y.prev_edge; });
        return found;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t j = candidates.index(i, c);
            auto found = collect(i, j);
            if (found.empty()) continue;
            adjacency[i].push_back(j);
            matches[i].emplace_back(j, std::move(found));
        }
        if (adjacency[i].empty()) {
            adjacency[i].push_back(i);
            auto found = collect(i, i);
            if (found.empty()) throw InternalError("build_layer_graph: self-edge has no coarse support");
            matches[i].emplace_back(i, std::move(found));
        }
    }

    LayerBuild out;
    out.layer = GraphLayer::from_adjacency(layer_index, points.indices, std::move(adjacency));
    out.interp.offsets.reserve(out.layer.edge_count() + 1);
    out.interp.offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& mi = matches[i];
        std::sort(mi.begin(), mi.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (const auto& [dst, found] : mi) {
            std::vector<MatchedEdge> offsets;
            for (const auto& m : found) {
                out.interp.prev_edges.push_back(m.prev_edge);
                offsets.push_back(m.offsets);
            }
            const auto w = edge_upsample_weights(offsets);
            out.interp.weights.insert(out.interp.weights.end(), w.begin(), w.end());
            out.interp.offsets.push_back(out.interp.prev_edges.size());
        }
    }
    return out;
}

HierGraph build_hierarchy(std::span<const PointLayer> layers, std::span<const std::size_t> k_list,
                          std::size_t k_interp, GraphMode mode) {
    if (layers.empty()) throw ValidationError("build_hierarchy: no layers");
    if (k_list.size() != layers.size()) {
        throw ValidationError("build_hierarchy: " + std::to_string(k_list.size()) + " k values for " +
                              std::to_string(layers.size()) + " layers");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].indices.size() != layers[l].positions.size()) {
            throw ValidationError("build_hierarchy: layer " + std::to_string(l) + " index/position count mismatch");
        }
        if (l > 0 && layers[l].positions.size() <= layers[l - 1].positions.size()) {
            throw ValidationError("build_hierarchy: layer point counts must strictly increase");
        }
    }

    HierGraph graph;
    graph.mode = mode;
    graph.layers.push_back(init_graph(layers[0].positions, k_list[0], layers[0].indices));
    for (std::size_t l = 1; l < layers.size(); ++l) {
        if (k_interp == 0 || k_interp > layers[l - 1].positions.size()) {
            throw ValidationError("build_hierarchy: k_interp = " + std::to_string(k_interp) +
                                  " exceeds layer " + std::to_string(l - 1) + " size");
        }
        const auto prev_local = locate_in_previous(layers[l], layers[l - 1]);
        graph.knn_cross.push_back(cross_neighbors(layers[l].positions, layers[l - 1].positions, k_interp, prev_local));
        if (mode == GraphMode::hierarchical) {
            auto built = build_layer_graph(layers[l], k_list[l], graph.layers.back(), graph.knn_cross.back(),
                                           static_cast<int>(l));
            graph.layers.push_back(std::move(built.layer));
            graph.interp_maps.push_back(std::move(built.interp));
        } else {
            GraphLayer g = init_graph(layers[l].positions, k_list[l], layers[l].indices);
            g.layer_index = static_cast<int>(l);
            graph.layers.push_back(std::move(g));
        }
    }
    return graph;
}

std::vector<std::string> check_layer(const GraphLayer& layer, std::size_t max_out_degree) {
    std::vector<std::string> bad;
    const std::string tag = "layer " + std::to_string(layer.layer_index) + ": ";
    const std::size_t n = layer.point_count();
    if (layer.point_indices.size() != n) bad.push_back(tag + "point_indices size differs from point count");
    if (layer.out_offsets.empty() || layer.out_offsets.front() != 0 || layer.out_offsets.back() != layer.edges.size()) {
        bad.push_back(tag + "out_offsets do not span the edge list");
        return bad;
    }
    for (std::size_t p = 0; p < n; ++p) {
        const auto out = layer.out_edges(p);
        if (out.empty()) bad.push_back(tag + "point " + std::to_string(p) + " has no out-edges");
        if (max_out_degree && out.size() > max_out_degree) {
            bad.push_back(tag + "point " + std::to_string(p) + " out-degree " + std::to_string(out.size()) +
                          " exceeds " + std::to_string(max_out_degree));
        }
        for (std::size_t t = 0; t < out.size(); ++t) {
            if (out[t].src != p) bad.push_back(tag + "edge grouped under wrong source");
            if (out[t].dst >= n) bad.push_back(tag + "edge endpoint out of range");
            if (t > 0 && out[t].dst <= out[t - 1].dst) bad.push_back(tag + "duplicate or unsorted destinations");
        }
    }
    return bad;
}

std::vector<std::string> check_interp(const EdgeInterpMap& interp, const GraphLayer& layer, const GraphLayer& prev,
                                      const NeighborTable& cross) {
    std::vector<std::string> bad;
    const std::string tag = "interp layer " + std::to_string(layer.layer_index) + ": ";
    if (interp.edge_count() != layer.edge_count()) {
        bad.push_back(tag + "map covers " + std::to_string(interp.edge_count()) + " edges, layer has " +
                      std::to_string(layer.edge_count()));
        return bad;
    }
    if (interp.prev_edges.size() != interp.weights.size() || interp.offsets.back() != interp.weights.size()) {
        bad.push_back(tag + "ragged entry arrays");
        return bad;
    }
    for (std::size_t e = 0; e < layer.edge_count(); ++e) {
        const std::size_t b = interp.offsets[e], end = interp.offsets[e + 1];
        if (b == end) {
            bad.push_back(tag + "edge " + std::to_string(e) + " has no coarse support");
            continue;
        }
        double sum = 0.0;
        for (std::size_t t = b; t < end; ++t) {
            sum += interp.weights[t];
            const std::size_t pe = interp.prev_edges[t];
            if (pe >= prev.edge_count()) {
                bad.push_back(tag + "edge " + std::to_string(e) + " references missing coarse edge");
                continue;
            }
            if (t > b && pe <= interp.prev_edges[t - 1]) bad.push_back(tag + "matched edges not ascending");
            const Edge& pedge = prev.edges[pe];
            const Edge& edge = layer.edges[e];
            bool src_ok = false, dst_ok = false;
            for (std::size_t a = 0; a < cross.k; ++a) {
                src_ok = src_ok || cross.index(edge.src, a) == pedge.src;
                dst_ok = dst_ok || cross.index(edge.dst, a) == pedge.dst;
            }
            if (!src_ok || !dst_ok) bad.push_back(tag + "edge " + std::to_string(e) + " matched outside E_ne");
        }
        if (std::abs(sum - 1.0) > 1e-9) bad.push_back(tag + "edge " + std::to_string(e) + " weights sum to " +
                                                      std::to_string(sum));
    }
    return bad;
}

std::vector<std::string> check_hierarchy(const HierGraph& graph, std::span<const std::size_t> k_list) {
    std::vector<std::string> bad;
    for (std::size_t l = 0; l < graph.layers.size(); ++l) {
        auto more = check_layer(graph.layers[l], k_list.empty() ? 0 : k_list[l]);
        bad.insert(bad.end(), more.begin(), more.end());
        if (l == 0) continue;
        const auto& fine = graph.layers[l];
        const auto& coarse = graph.layers[l - 1];
        if (fine.point_count() <= coarse.point_count()) bad.push_back("layer point counts do not strictly increase");
        std::vector<std::size_t> a = coarse.point_indices, b = fine.point_indices;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) {
            bad.push_back("layer " + std::to_string(l - 1) + " points are not a subset of layer " + std::to_string(l));
        }
        if (graph.mode == GraphMode::hierarchical) {
            if (graph.interp_maps.size() < l) {
                bad.push_back("missing interpolation map for layer " + std::to_string(l));
                continue;
            }
            auto m = check_interp(graph.interp(l), fine, coarse, graph.cross(l));
            bad.insert(bad.end(), m.begin(), m.end());
        }
    }
    return bad;
}

std::string dump_graph(const HierGraph& graph) {
    std::string out;
    char buf[96];
    for (std::size_t l = 0; l < graph.layers.size(); ++l) {
        for (const Edge& e : graph.layers[l].edges) {
            std::snprintf(buf, sizeof buf, "%zu %zu %zu\n", l, e.src, e.dst);
            out += buf;
        }
        if (l == 0 || graph.mode != GraphMode::hierarchical) continue;
        const auto& m = graph.interp(l);
        for (std::size_t e = 0; e < m.edge_count(); ++e) {
            for (std::size_t t = m.offsets[e]; t < m.offsets[e + 1]; ++t) {
                std::snprintf(buf, sizeof buf, "%zu %zu %zu %.9f\n", l, e, m.prev_edges[t], m.weights[t]);
                out += buf;
            }
        }
    }
    return out;
}

}  // namespace pointedge
