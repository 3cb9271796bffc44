#include "pointedge/network.hpp"

#include <algorithm>
#include <numeric>

#include "pointedge/errors.hpp"
#include "pointedge/point_branch.hpp"

namespace pointedge {

MessagePassing parse_message_passing(std::string_view name) {
    if (name == "maxpool_concat") return MessagePassing::maxpool_concat;
    if (name == "ada_aggre_softmax") return MessagePassing::ada_aggre_softmax;
    if (name == "ada_aggre_no_softmax") return MessagePassing::ada_aggre_no_softmax;
    throw ValidationError("unknown message passing mode '" + std::string(name) + "'");
}

std::string_view message_passing_name(MessagePassing m) {
    switch (m) {
        case MessagePassing::maxpool_concat: return "maxpool_concat";
        case MessagePassing::ada_aggre_softmax: return "ada_aggre_softmax";
        case MessagePassing::ada_aggre_no_softmax: return "ada_aggre_no_softmax";
    }
    return "?";
}

GraphMode parse_graph_mode(std::string_view name) {
    if (name == "hierarchical") return GraphMode::hierarchical;
    if (name == "independent") return GraphMode::independent;
    throw ValidationError("unknown graph mode '" + std::string(name) + "'");
}

std::string_view graph_mode_name(GraphMode m) { return m == GraphMode::hierarchical ? "hierarchical" : "independent"; }

std::size_t NetworkConfig::edge_width(std::size_t layer) const {
    return edge_channels.empty() ? point_channels.at(layer) : edge_channels.at(layer);
}

std::size_t NetworkConfig::group(std::size_t layer) const {
    if (!group_size.empty()) return group_size.at(layer);
    return std::min<std::size_t>(16, layer_points.at(layer + 1));
}

void NetworkConfig::validate() const {
    const std::size_t n = layers();
    if (n < 2) throw ValidationError("network: need at least two layers");
    auto require_len = [n](const std::vector<std::size_t>& v, std::size_t want, const char* what) {
        if (v.size() != want) {
            throw ValidationError(std::string("network: ") + what + " has " + std::to_string(v.size()) +
                                  " entries, expected " + std::to_string(want));
        }
        (void)n;
    };
    require_len(k, n, "k");
    require_len(point_channels, n, "point_channels");
    if (!edge_channels.empty()) require_len(edge_channels, n, "edge_channels");
    if (!group_size.empty()) require_len(group_size, n - 1, "group_size");
    for (std::size_t l = 0; l < n; ++l) {
        if (layer_points[l] == 0) throw ValidationError("network: empty layer");
        if (l > 0 && layer_points[l] <= layer_points[l - 1]) {
            throw ValidationError("network: layer point counts must strictly increase");
        }
        if (k[l] == 0 || k[l] > layer_points[l]) {
            throw ValidationError("network: k[" + std::to_string(l) + "] = " + std::to_string(k[l]) +
                                  " must lie in [1, " + std::to_string(layer_points[l]) + "]");
        }
        if (point_channels[l] == 0 || edge_width(l) == 0) throw ValidationError("network: zero channel width");
        if (l + 1 < n && (group(l) == 0 || group(l) > layer_points[l + 1])) {
            throw ValidationError("network: encoder group size for layer " + std::to_string(l) + " out of range");
        }
    }
    if (k_interp == 0 || k_interp > layer_points[0]) {
        throw ValidationError("network: k_interp must lie in [1, " + std::to_string(layer_points[0]) + "]");
    }
    if (num_classes < 1 || input_channels < 1 || head_hidden < 1) {
        throw ValidationError("network: num_classes, input_channels and head_hidden must be positive");
    }
}

NetworkSpecs network_specs(const NetworkConfig& c) {
    c.validate();
    const std::size_t n = c.layers();
    const std::size_t top = c.finest();
    NetworkSpecs s;
    s.encoder.resize(top);
    for (std::size_t l = 0; l < top; ++l) {
        const std::size_t in = l + 1 == top ? c.input_channels : c.point_channels[l + 1];
        s.encoder[l] = MlpSpec{{3 + in, c.point_channels[l], c.point_channels[l]}, Activation::relu};
    }
    s.propagate.resize(n);
    for (std::size_t l = 1; l < n; ++l) {
        const std::size_t skip = l == top ? c.input_channels : c.point_channels[l];
        s.propagate[l] = MlpSpec{{c.point_channels[l - 1] + skip, c.point_channels[l]}, Activation::relu};
    }
    const bool ada = c.message_passing != MessagePassing::maxpool_concat;
    for (std::size_t l = 0; l < n; ++l) {
        const std::size_t kw = c.edge_width(l);
        const std::size_t up = (l > 0 && c.graph_mode == GraphMode::hierarchical) ? c.edge_width(l - 1) : 0;
        s.edge.push_back(EdgeEncoderSpec{
            MlpSpec{{edge_function_width(c.edge_function, c.point_channels[l]), kw, kw}, Activation::relu},
            MlpSpec{{kw + up, kw, kw}, Activation::relu}});
        const std::size_t point_in = ada ? c.point_channels[l] : c.point_channels[l] + kw;
        s.point.push_back(MlpSpec{{point_in, c.point_channels[l]}, Activation::relu});
        if (ada) s.ada_weight.push_back(MlpSpec{{kw, kw, 1}, Activation::none});
    }
    s.point_head = MlpSpec{{c.point_channels[top], c.head_hidden, c.num_classes}, Activation::none};
    s.edge_head = MlpSpec{{c.edge_width(top), c.head_hidden, 1}, Activation::none};
    return s;
}

namespace {

std::string layer_prefix(const char* kind, std::size_t l) { return std::string(kind) + std::to_string(l); }

}  // namespace

ParamStore init_params(const NetworkConfig& config, std::uint64_t seed) {
    const NetworkSpecs s = network_specs(config);
    Rng rng(seed);
    ParamStore params;
    for (std::size_t l = 0; l < s.encoder.size(); ++l) init_mlp(params, layer_prefix("enc", l), s.encoder[l], rng);
    for (std::size_t l = 0; l < config.layers(); ++l) {
        if (l > 0) init_mlp(params, layer_prefix("fp", l), s.propagate[l], rng);
        init_mlp(params, layer_prefix("edge", l) + "/ext2", s.edge[l].ext2, rng);
        init_mlp(params, layer_prefix("edge", l) + "/ext1", s.edge[l].ext1, rng);
        init_mlp(params, layer_prefix("point", l), s.point[l], rng);
        if (!s.ada_weight.empty()) init_mlp(params, layer_prefix("ada", l), s.ada_weight[l], rng);
    }
    init_mlp(params, "head/point", s.point_head, rng);
    init_mlp(params, "head/edge", s.edge_head, rng);
    return params;
}

BlockPlan plan_block(const NetworkConfig& config, const Positions& block_positions) {
    config.validate();
    if (block_positions.size() != config.block_points()) {
        throw ValidationError("forward: block has " + std::to_string(block_positions.size()) +
                              " points, config expects " + std::to_string(config.block_points()));
    }
    const std::size_t n = config.layers();
    const std::size_t top = config.finest();

    // One FPS pass; coarser layers are prefixes, so V_{L-1} is contained in V_L.
    const auto order = farthest_point_sample(block_positions, config.layer_points[top - 1], 0);
    BlockPlan plan;
    plan.layers.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        auto& layer = plan.layers[l];
        if (l == top) {
            layer.indices.resize(block_positions.size());
            std::iota(layer.indices.begin(), layer.indices.end(), std::size_t{0});
        } else {
            layer.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.layer_points[l]));
        }
        layer.positions.reserve(layer.indices.size());
        for (std::size_t i : layer.indices) layer.positions.push_back(block_positions[i]);
    }
    plan.graph = build_hierarchy(plan.layers, config.k, config.k_interp, config.graph_mode);
    for (std::size_t l = 0; l < top; ++l) {
        plan.encoder_groups.push_back(knn(plan.layers[l].positions, plan.layers[l + 1].positions, config.group(l)));
    }
    return plan;
}

ForwardOutput forward(const NetworkConfig& config, const BlockPlan& plan, const Tensor& input_features,
                      ParamBinding& params) {
    const NetworkSpecs s = network_specs(config);
    const std::size_t n = config.layers();
    const std::size_t top = config.finest();
    if (input_features.rank() != 2 || input_features.rows() != config.block_points() ||
        input_features.cols() != config.input_channels) {
        throw ValidationError("forward: input features " + input_features.shape_string() + " do not match config (" +
                              std::to_string(config.block_points()) + " x " + std::to_string(config.input_channels) +
                              ")");
    }
    ad::Tape& tape = params.tape();

    ForwardOutput out;
    out.encoder_feats.resize(n);
    out.encoder_feats[top] = tape.constant(input_features);
    for (std::size_t l = top; l-- > 0;) {
        out.encoder_feats[l] = set_abstraction(params, layer_prefix("enc", l), s.encoder[l], plan.layers[l + 1].positions,
                                               out.encoder_feats[l + 1], plan.layers[l].positions, plan.encoder_groups[l]);
    }

    out.decoder_feats.resize(n);
    out.edge_feats.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const GraphLayer& graph = plan.graph.layers[l];
        ad::Var feats = l == 0 ? out.encoder_feats[0]
                               : feature_propagate(params, layer_prefix("fp", l), s.propagate[l], out.decoder_feats[l - 1],
                                                   plan.graph.cross(l), out.encoder_feats[l]);
        std::optional<ad::Var> upsampled;
        if (l > 0 && config.graph_mode == GraphMode::hierarchical) {
            upsampled = edge_upsample(out.edge_feats[l - 1], plan.graph.interp(l));
        }
        ad::Var edges = edge_encoder(params, layer_prefix("edge", l), s.edge[l], feats, plan.layers[l].positions, graph,
                                     config.edge_function, upsampled);
        ad::Var fused = config.message_passing == MessagePassing::maxpool_concat
                            ? point_module(feats, edges, graph)
                            : ada_aggregate(params, layer_prefix("ada", l), s.ada_weight[l], feats, edges, graph,
                                            config.message_passing == MessagePassing::ada_aggre_softmax);
        out.decoder_feats[l] = mlp_apply(s.point[l], params, layer_prefix("point", l), fused);
        out.edge_feats[l] = edges;
    }

    out.scores = point_head(params, "head/point", s.point_head, out.decoder_feats[top]);
    out.edge_probs = edge_head(params, "head/edge", s.edge_head, out.edge_feats[top]);
    out.refined = refine_with_edges(out.scores, out.edge_probs, plan.graph.layers[top]);
    return out;
}

}  // namespace pointedge
