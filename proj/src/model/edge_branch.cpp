#include "pointedge/edge_branch.hpp"

#include <vector>

#include "pointedge/errors.hpp"

namespace pointedge {

EdgeFunction parse_edge_function(std::string_view name) {
    if (name == "concatenation") return EdgeFunction::concatenation;
    if (name == "subtraction") return EdgeFunction::subtraction;
    if (name == "summation") return EdgeFunction::summation;
    if (name == "hadamard") return EdgeFunction::hadamard;
    if (name == "concat_sub") return EdgeFunction::concat_sub;
    throw ValidationError("unknown edge function '" + std::string(name) + "'");
}

std::string_view edge_function_name(EdgeFunction f) {
    switch (f) {
        case EdgeFunction::concatenation: return "concatenation";
        case EdgeFunction::subtraction: return "subtraction";
        case EdgeFunction::summation: return "summation";
        case EdgeFunction::hadamard: return "hadamard";
        case EdgeFunction::concat_sub: return "concat_sub";
    }
    return "?";
}

std::size_t edge_function_width(EdgeFunction f, std::size_t point_channels) {
    const bool doubled = f == EdgeFunction::concatenation || f == EdgeFunction::concat_sub;
    return 3 + (doubled ? 2 : 1) * point_channels;
}

ad::Var edge_function(ad::Var point_feats, const Positions& positions, std::span<const Edge> edges,
                      EdgeFunction variant) {
    const std::size_t n = point_feats.rows();
    if (positions.size() != n) {
        throw ValidationError("edge_function: " + std::to_string(positions.size()) + " positions for " +
                              std::to_string(n) + " feature rows");
    }
    std::vector<std::size_t> src(edges.size()), dst(edges.size());
    Tensor disp = Tensor::zeros(edges.size(), 3);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].src >= n || edges[e].dst >= n) throw ValidationError("edge_function: edge endpoint out of range");
        src[e] = edges[e].src;
        dst[e] = edges[e].dst;
        for (int a = 0; a < 3; ++a) disp.at(e, a) = positions[dst[e]][a] - positions[src[e]][a];
    }
    ad::Tape& tape = *point_feats.tape();
    ad::Var d = tape.constant(std::move(disp));
    ad::Var fi = ad::gather_rows(point_feats, src);
    ad::Var fj = ad::gather_rows(point_feats, dst);
    switch (variant) {
        case EdgeFunction::concatenation: return ad::concat_cols({d, fj, fi});
        case EdgeFunction::subtraction: return ad::concat_cols({d, ad::sub(fj, fi)});
        case EdgeFunction::summation: return ad::concat_cols({d, ad::add(fj, fi)});
        case EdgeFunction::hadamard: return ad::concat_cols({d, ad::mul(fj, fi)});
        case EdgeFunction::concat_sub: return ad::concat_cols({d, fj, ad::sub(fj, fi)});
    }
    throw ValidationError("edge_function: unknown variant");
}

ad::Var edge_encoder(ParamBinding& params, const std::string& prefix, const EdgeEncoderSpec& spec,
                     ad::Var point_feats, const Positions& positions, const GraphLayer& graph, EdgeFunction variant,
                     std::optional<ad::Var> upsampled) {
    if (graph.point_count() != point_feats.rows()) {
        throw ValidationError("edge_encoder: graph has " + std::to_string(graph.point_count()) + " points, features " +
                              point_feats.value().shape_string());
    }
    ad::Var local = mlp_apply(spec.ext2, params, prefix + "/ext2", edge_function(point_feats, positions, graph.edges, variant));
    if (upsampled) {
        if (upsampled->rows() != graph.edge_count()) {
            throw ValidationError("edge_encoder: upsampled features " + upsampled->value().shape_string() +
                                  " do not match " + std::to_string(graph.edge_count()) + " edges");
        }
        local = ad::concat_cols({local, *upsampled});
    }
    return mlp_apply(spec.ext1, params, prefix + "/ext1", local);
}

ad::Var edge_upsample(ad::Var prev_edge_feats, const EdgeInterpMap& interp) {
    ad::Groups groups{interp.offsets, interp.prev_edges};
    return ad::group_weighted_sum(prev_edge_feats, groups, interp.weights);
}

ad::Var edge_head(ParamBinding& params, const std::string& prefix, const MlpSpec& spec, ad::Var edge_feats) {
    if (spec.out_width() != 1) throw ValidationError("edge_head: MLP must end in a single logit");
    MlpSpec logits = spec;
    logits.final_activation = Activation::none;
    return ad::sigmoid(mlp_apply(logits, params, prefix, edge_feats));
}

}  // namespace pointedge
