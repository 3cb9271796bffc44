#include "pointedge/point_branch.hpp"

#include "pointedge/errors.hpp"

namespace pointedge {

namespace {

ad::Groups out_edge_groups(const GraphLayer& graph) { return ad::Groups{graph.out_offsets, {}}; }

ad::Groups neighbor_groups(const GraphLayer& graph) { return ad::Groups{graph.out_offsets, graph.destinations()}; }

void require_aligned(const char* op, ad::Var point_feats, ad::Var edge_feats, const GraphLayer& graph) {
    if (point_feats.rows() != graph.point_count() || edge_feats.rows() != graph.edge_count()) {
        throw ValidationError(std::string(op) + ": features " + point_feats.value().shape_string() + " / " +
                              edge_feats.value().shape_string() + " not aligned with graph of " +
                              std::to_string(graph.point_count()) + " points and " +
                              std::to_string(graph.edge_count()) + " edges");
    }
    for (std::size_t p = 0; p < graph.point_count(); ++p) {
        if (graph.out_offsets[p + 1] == graph.out_offsets[p]) {
            throw InternalError(std::string(op) + ": point " + std::to_string(p) + " has no out-edges");
        }
    }
}

}  // namespace

ad::Var set_abstraction(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, const Positions& points,
                        ad::Var feats, const Positions& centers, const NeighborTable& groups) {
    if (feats.rows() != points.size()) throw ValidationError("set_abstraction: feature/point count mismatch");
    if (groups.query_count != centers.size()) throw ValidationError("set_abstraction: group table size mismatch");
    const std::size_t k = groups.k;
    Tensor offsets = Tensor::zeros(centers.size() * k, 3);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t j = 0; j < k; ++j) {
            const auto& p = points.at(groups.index(c, j));
            for (int a = 0; a < 3; ++a) offsets.at(c * k + j, a) = p[a] - centers[c][a];
        }
    }
    ad::Var rel = params.tape().constant(std::move(offsets));
    ad::Var grouped = ad::concat_cols({rel, ad::gather_rows(feats, groups.indices)});
    ad::Var per_point = mlp_apply(spec, params, prefix, grouped);
    return ad::scatter_max_groups(per_point, ad::Groups::contiguous(centers.size(), k));
}

SetAbstractionResult set_abstraction(ParamBinding& params, const std::string& prefix, const MlpSpec& spec,
                                     const Positions& points, ad::Var feats, std::size_t m, std::size_t k) {
    if (m > points.size()) {
        throw ValidationError("set_abstraction: m = " + std::to_string(m) + " exceeds " +
                              std::to_string(points.size()) + " points");
    }
    SetAbstractionResult out;
    out.centers = farthest_point_sample(points, m, 0);
    Positions centers;
    centers.reserve(m);
    for (std::size_t c : out.centers) centers.push_back(points[c]);
    const NeighborTable groups = knn(centers, points, k);
    out.features = set_abstraction(params, prefix, spec, points, feats, centers, groups);
    return out;
}

std::vector<double> interpolation_weights(const NeighborTable& cross) {
    std::vector<double> w(cross.indices.size());
    for (std::size_t q = 0; q < cross.query_count; ++q) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cross.k; ++j) {
            const double d = cross.dist(q, j);
            sum += (w[q * cross.k + j] = 1.0 / (d * d + interp_epsilon));
        }
        for (std::size_t j = 0; j < cross.k; ++j) w[q * cross.k + j] /= sum;
    }
    return w;
}

ad::Var interpolate_points(ad::Var coarse_feats, const NeighborTable& cross) {
    ad::Groups groups{ad::Groups::contiguous(cross.query_count, cross.k).offsets, cross.indices};
    return ad::group_weighted_sum(coarse_feats, groups, interpolation_weights(cross));
}

ad::Var feature_propagate(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var coarse_feats,
                          const NeighborTable& cross, std::optional<ad::Var> skip) {
    ad::Var x = interpolate_points(coarse_feats, cross);
    if (skip) {
        if (skip->rows() != cross.query_count) throw ValidationError("feature_propagate: skip row count mismatch");
        x = ad::concat_cols({x, *skip});
    }
    return mlp_apply(spec, params, prefix, x);
}

ad::Var feature_propagate(ParamBinding& params, const std::string& prefix, const MlpSpec& spec,
                          const Positions& coarse_points, ad::Var coarse_feats, const Positions& fine_points,
                          std::optional<ad::Var> skip, std::size_t k_interp) {
    if (k_interp > coarse_points.size()) throw ValidationError("feature_propagate: k_interp exceeds coarse count");
    return feature_propagate(params, prefix, spec, coarse_feats, knn(fine_points, coarse_points, k_interp), skip);
}

ad::Var point_module(ad::Var point_feats, ad::Var edge_feats, const GraphLayer& graph) {
    require_aligned("point_module", point_feats, edge_feats, graph);
    return ad::concat_cols({point_feats, ad::scatter_max_groups(edge_feats, out_edge_groups(graph))});
}

ad::Var ada_aggregate(ParamBinding& params, const std::string& prefix, const MlpSpec& weight_spec, ad::Var point_feats,
                      ad::Var edge_feats, const GraphLayer& graph, bool use_softmax) {
    require_aligned("ada_aggregate", point_feats, edge_feats, graph);
    if (weight_spec.out_width() != 1) throw ValidationError("ada_aggregate: weight MLP must output one column");
    ad::Var w = mlp_apply(weight_spec, params, prefix, edge_feats);
    if (use_softmax) w = ad::group_softmax(w, out_edge_groups(graph));
    return ad::group_weighted_sum(point_feats, neighbor_groups(graph), w);
}

ad::Var point_head(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var feats) {
    return mlp_apply(spec, params, prefix, feats);
}

ad::Var refine_with_edges(ad::Var scores, ad::Var edge_preds, const GraphLayer& graph) {
    if (scores.rows() != graph.point_count() || edge_preds.rows() != graph.edge_count() || edge_preds.cols() != 1) {
        throw ValidationError("refine_with_edges: scores " + scores.value().shape_string() + " / predictions " +
                              edge_preds.value().shape_string() + " not aligned with graph");
    }
    return ad::group_weighted_sum(scores, neighbor_groups(graph), ad::group_normalize(edge_preds, out_edge_groups(graph)));
}

}  // namespace pointedge
