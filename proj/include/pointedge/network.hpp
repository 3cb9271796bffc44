#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pointedge/edge_branch.hpp"
#include "pointedge/geom.hpp"
#include "pointedge/hier_graph.hpp"
#include "pointedge/mlp.hpp"
#include "pointedge/params.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

enum class MessagePassing { maxpool_concat, ada_aggre_softmax, ada_aggre_no_softmax };

MessagePassing parse_message_passing(std::string_view name);
std::string_view message_passing_name(MessagePassing m);
GraphMode parse_graph_mode(std::string_view name);
std::string_view graph_mode_name(GraphMode m);

/// Layer-indexed network description; index 0 is the coarsest layer, the last
/// index is the full-resolution block.
struct NetworkConfig {
    std::vector<std::size_t> layer_points{16, 64, 256, 1024, 4096};
    std::vector<std::size_t> k{4, 6, 10, 14, 16};
    std::size_t k_interp = 3;
    std::vector<std::size_t> point_channels{256, 256, 128, 128, 64};
    std::vector<std::size_t> edge_channels;  // empty: same as point_channels
    /// Set-abstraction group size for the encoder stage producing layer L (one per layer except the last).
    std::vector<std::size_t> group_size;     // empty: 16 per stage, capped at the finer layer size
    std::size_t head_hidden = 64;
    std::size_t input_channels = 6;
    std::size_t num_classes = 20;
    MessagePassing message_passing = MessagePassing::maxpool_concat;
    GraphMode graph_mode = GraphMode::hierarchical;
    EdgeFunction edge_function = EdgeFunction::concatenation;

    std::size_t layers() const noexcept { return layer_points.size(); }
    std::size_t finest() const noexcept { return layer_points.size() - 1; }
    std::size_t block_points() const { return layer_points.back(); }
    std::size_t edge_width(std::size_t layer) const;
    std::size_t group(std::size_t layer) const;

    void validate() const;
};

/// Every MLP of the network, derived from the config.
struct NetworkSpecs {
    std::vector<MlpSpec> encoder;       // encoder[L] builds layer L from layer L+1 (L < finest)
    std::vector<MlpSpec> propagate;     // propagate[L] for L >= 1 (entry 0 unused)
    std::vector<EdgeEncoderSpec> edge;  // one per layer
    std::vector<MlpSpec> point;         // post-message-passing MLP per layer
    std::vector<MlpSpec> ada_weight;    // AdaAggre weight MLP per layer (AdaAggre modes only)
    MlpSpec point_head;
    MlpSpec edge_head;
};

NetworkSpecs network_specs(const NetworkConfig& config);

/// Seeded parameter initialization (Glorot weights, biases uniform in +-1/sqrt(fan_in)).
ParamStore init_params(const NetworkConfig& config, std::uint64_t seed);

/// Parameter-independent structure of one block: nested FPS layers, the
/// hierarchical graph, and encoder grouping tables.
struct BlockPlan {
    std::vector<PointLayer> layers;
    HierGraph graph;
    std::vector<NeighborTable> encoder_groups;  // encoder_groups[L] for L < finest
};

BlockPlan plan_block(const NetworkConfig& config, const Positions& block_positions);

struct ForwardOutput {
    ad::Var scores;      // N x num_classes, before refinement
    ad::Var refined;     // N x num_classes
    ad::Var edge_probs;  // |E_finest| x 1
    std::vector<ad::Var> encoder_feats;
    std::vector<ad::Var> decoder_feats;
    std::vector<ad::Var> edge_feats;
};

ForwardOutput forward(const NetworkConfig& config, const BlockPlan& plan, const Tensor& input_features,
                      ParamBinding& params);

}  // namespace pointedge
