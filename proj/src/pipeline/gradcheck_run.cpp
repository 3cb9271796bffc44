#include "pointedge/errors.hpp"
#include "pointedge/network.hpp"
#include "pointedge/pipeline.hpp"
#include "seeds.hpp"

namespace pointedge {

GradCheckResult gradcheck_config(const TrainConfig& config, const Dataset& data, GradCheckOptions options) {
    config.validate();
    if (data.train.empty()) throw ValidationError("gradcheck: training split is empty");
    const BlockSample sample =
        sample_block_indices(data.train.front(), config.data.block_size, config.data.block_padding,
                             config.network.block_points(),
                             detail::derive_seed(config.train.seed, detail::Stream::gradcheck, 0));
    const PointCloud block = extract_block(data.train.front(), sample);
    const BlockPlan plan = plan_block(config.network, block.positions);
    const EdgeTargets targets = edge_targets(plan.graph.layers.back(), block.labels, config.include_self_edges);
    const double alpha = config.loss.alpha ? *config.loss.alpha : auto_alpha(targets.positives(), targets.negatives());

    const LossBuilder loss = [&](ParamBinding& bound) {
        const ForwardOutput out = forward(config.network, plan, block.features, bound);
        ad::Var preds = config.include_self_edges ? out.edge_probs : ad::gather_rows(out.edge_probs, targets.rows);
        return total_loss(point_loss(out.refined, block.labels), edge_loss(preds, targets.labels, alpha), config.loss);
    };
    return gradient_check(loss, init_params(config.network, config.train.seed), options);
}

}  // namespace pointedge
