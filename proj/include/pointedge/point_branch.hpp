#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pointedge/geom.hpp"
#include "pointedge/hier_graph.hpp"
#include "pointedge/mlp.hpp"
#include "pointedge/params.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

/// Set abstraction over precomputed groups: for each center, rows
/// [p_neighbor - p_center, F_neighbor] go through the MLP and are max-pooled.
/// `groups` holds the k nearest `points` of every center.
ad::Var set_abstraction(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, const Positions& points,
                        ad::Var feats, const Positions& centers, const NeighborTable& groups);

struct SetAbstractionResult {
    std::vector<std::size_t> centers;  // rows of `points`
    ad::Var features;
};

/// FPS to `m` centers (seeded at index 0), kNN groups of size `k`, then as above.
SetAbstractionResult set_abstraction(ParamBinding& params, const std::string& prefix, const MlpSpec& spec,
                                     const Positions& points, ad::Var feats, std::size_t m, std::size_t k);

/// Normalized one-sided inverse-square weights 1 / (d^2 + eps) for each row of `cross`.
std::vector<double> interpolation_weights(const NeighborTable& cross);

/// Interpolates coarse features onto the query points of `cross`.
ad::Var interpolate_points(ad::Var coarse_feats, const NeighborTable& cross);

/// MLP([interpolate(coarse), skip]); the skip input is optional.
ad::Var feature_propagate(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var coarse_feats,
                          const NeighborTable& cross, std::optional<ad::Var> skip);

ad::Var feature_propagate(ParamBinding& params, const std::string& prefix, const MlpSpec& spec,
                          const Positions& coarse_points, ad::Var coarse_feats, const Positions& fine_points,
                          std::optional<ad::Var> skip, std::size_t k_interp);

/// [F_i, max over out-edges of H]; width C + K.
ad::Var point_module(ad::Var point_feats, ad::Var edge_feats, const GraphLayer& graph);

/// sum over out-edges (i, j) of a_ij * F_j, where a_ij comes from an MLP on H_ij
/// (optionally softmax-normalized over each point's out-edges).
ad::Var ada_aggregate(ParamBinding& params, const std::string& prefix, const MlpSpec& weight_spec, ad::Var point_feats,
                      ad::Var edge_feats, const GraphLayer& graph, bool use_softmax);

ad::Var point_head(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var feats);

/// refined_i = sum_j pred_ij * score_j / sum_j pred_ij over the out-edges of i.
ad::Var refine_with_edges(ad::Var scores, ad::Var edge_preds, const GraphLayer& graph);

}  // namespace pointedge
