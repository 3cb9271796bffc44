#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "pointedge/checkpoint.hpp"
#include "pointedge/errors.hpp"
#include "pointedge/network.hpp"
#include "pointedge/optim.hpp"
#include "pointedge/pipeline.hpp"
#include "seeds.hpp"

namespace pointedge {

namespace fs = std::filesystem;

DivergenceError::DivergenceError(int epoch, std::size_t step, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                         ": " + what),
      epoch_(epoch),
      step_(step) {}

namespace {

struct PreparedBlock {
    PointCloud cloud;
    BlockPlan plan;
    EdgeTargets targets;
};

PreparedBlock prepare(const TrainConfig& config, const PointCloud& scene, std::uint64_t seed) {
    const BlockSample sample = sample_block_indices(scene, config.data.block_size, config.data.block_padding,
                                                    config.network.block_points(), seed);
    PreparedBlock b;
    b.cloud = extract_block(scene, sample);
    b.plan = plan_block(config.network, b.cloud.positions);
    b.targets = edge_targets(b.plan.graph.layers.back(), b.cloud.labels, config.include_self_edges);
    return b;
}

bool all_finite(const ParamStore& grads) {
    for (const auto& [name, t] : grads) {
        for (double v : t.values()) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data, const TrainOptions& options) {
    config.validate();
    if (data.train.empty()) throw ValidationError("train: training split is empty");
    const auto started = std::chrono::steady_clock::now();
    const TrainSettings& ts = config.train;

    TrainResult result;
    result.params = init_params(config.network, ts.seed);
    result.record.config_snapshot = to_ini(config);
    Sgd sgd(SgdOptions{ts.momentum, ts.weight_decay});
    const fs::path ckpt_dir = ts.out_dir / "checkpoints";
    if (options.write_checkpoints) fs::create_directories(ckpt_dir);

    std::size_t global_step = 0;
    for (int epoch = 0; epoch < ts.epochs; ++epoch) {
        const double lr = step_learning_rate(ts.base_lr, ts.lr_decay, ts.lr_decay_every, epoch);
        Rng rng(detail::derive_seed(ts.seed, detail::Stream::epoch, static_cast<std::uint64_t>(epoch)));
        std::vector<std::pair<std::size_t, std::uint64_t>> draws;
        for (std::size_t s = 0; s < data.train.size(); ++s) {
            for (std::size_t b = 0; b < config.data.blocks_per_scene; ++b) draws.emplace_back(s, rng());
        }
        std::shuffle(draws.begin(), draws.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        for (std::size_t start = 0; start < draws.size(); start += ts.batch_size, ++global_step) {
            const std::size_t stop = std::min(draws.size(), start + ts.batch_size);
            std::vector<PreparedBlock> batch;
            std::size_t pos = 0, neg = 0;
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(prepare(config, data.train[draws[i].first], draws[i].second));
                pos += batch.back().targets.positives();
                neg += batch.back().targets.negatives();
            }
            const double alpha = config.loss.alpha ? *config.loss.alpha : auto_alpha(pos, neg);

            ad::Tape tape;
            ParamBinding bound(tape, result.params);
            ad::Var sum;
            double point_sum = 0.0, edge_sum = 0.0;
            for (const auto& b : batch) {
                const ForwardOutput out = forward(config.network, b.plan, b.cloud.features, bound);
                ad::Var lp = point_loss(out.refined, b.cloud.labels);
                ad::Var preds = config.include_self_edges ? out.edge_probs : ad::gather_rows(out.edge_probs, b.targets.rows);
                ad::Var le = edge_loss(preds, b.targets.labels, alpha);
                ad::Var total = total_loss(lp, le, config.loss);
                point_sum += lp.value().item();
                edge_sum += le.value().item();
                sum = sum.valid() ? ad::add(sum, total) : total;
            }
            const double inv = 1.0 / static_cast<double>(batch.size());
            ad::Var loss = ad::scale(sum, inv);
            const double value = loss.value().item();
            if (!std::isfinite(value)) throw DivergenceError(epoch, global_step, "loss is " + std::to_string(value));
            tape.backward(loss);
            const ParamStore grads = bound.gradients();
            if (!all_finite(grads)) throw DivergenceError(epoch, global_step, "non-finite gradient");
            sgd.step(result.params, grads, lr);

            rec.point_loss += point_sum;
            rec.edge_loss += edge_sum;
            rec.total_loss += value * static_cast<double>(batch.size());
        }
        const double n = static_cast<double>(draws.size());
        rec.point_loss /= n;
        rec.edge_loss /= n;
        rec.total_loss /= n;
        result.record.epochs.push_back(rec);
        if (options.log) {
            *options.log << "epoch " << epoch << " lr " << lr << " point " << rec.point_loss << " edge " << rec.edge_loss
                         << " total " << rec.total_loss << "\n";
        }
        if (options.write_checkpoints && ts.checkpoint_every > 0 && (epoch + 1) % ts.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch + 1);
            save_checkpoint(ckpt_dir / name, result.params);
            result.record.checkpoints.push_back(ckpt_dir / name);
        }
    }
    if (options.write_checkpoints) {
        save_checkpoint(ckpt_dir / "final.ckpt", result.params);
        result.record.checkpoints.push_back(ckpt_dir / "final.ckpt");
    }
    result.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace pointedge
