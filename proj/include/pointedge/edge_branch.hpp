#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pointedge/geom.hpp"
#include "pointedge/hier_graph.hpp"
#include "pointedge/mlp.hpp"
#include "pointedge/params.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

/// How an edge (p_i -> p_j) combines its endpoint features F_i, F_j.
/// All variants lead with the displacement p_j - p_i.
enum class EdgeFunction {
    concatenation,  // [d, F_j, F_i]
    subtraction,    // [d, F_j - F_i]
    summation,      // [d, F_j + F_i]
    hadamard,       // [d, F_j * F_i]
    concat_sub,     // [d, F_j, F_j - F_i]
};

EdgeFunction parse_edge_function(std::string_view name);
std::string_view edge_function_name(EdgeFunction f);
std::size_t edge_function_width(EdgeFunction f, std::size_t point_channels);

/// Edge input rows for every edge in `edges`, in order.
ad::Var edge_function(ad::Var point_feats, const Positions& positions, std::span<const Edge> edges,
                      EdgeFunction variant);

/// f_ext2 runs on the edge-function output; f_ext1 on [f_ext2 output, upsampled coarse edge features].
struct EdgeEncoderSpec {
    MlpSpec ext2;
    MlpSpec ext1;
};

/// H = f_ext1([f_ext2(f_edge(F_i, F_j)), H_up]); without `upsampled` the concat is a no-op.
ad::Var edge_encoder(ParamBinding& params, const std::string& prefix, const EdgeEncoderSpec& spec,
                     ad::Var point_feats, const Positions& positions, const GraphLayer& graph, EdgeFunction variant,
                     std::optional<ad::Var> upsampled);

/// Row e of the result is sum_t w_t * prev[prev_edge_t] over edge e's matches.
ad::Var edge_upsample(ad::Var prev_edge_feats, const EdgeInterpMap& interp);

/// Per-edge semantic-consistency probability (|E| x 1): MLP to one logit, then sigmoid.
ad::Var edge_head(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var edge_feats);

}  // namespace pointedge
