#include <algorithm>

#include "pointedge/errors.hpp"
#include "pointedge/network.hpp"
#include "pointedge/pipeline.hpp"
#include "seeds.hpp"

namespace pointedge {

namespace {

// Splits a tile into network-sized point sets. The tile order is shuffled; the
// last set is topped up with random repeats from the same tile.
std::vector<std::vector<std::size_t>> chunk_tile(std::vector<std::size_t> rows, std::size_t n, Rng& rng) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<std::vector<std::size_t>> chunks;
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t start = 0; start < rows.size(); start += n) {
        std::vector<std::size_t> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                       rows.begin() + static_cast<std::ptrdiff_t>(std::min(rows.size(), start + n)));
        while (chunk.size() < n) chunk.push_back(rows[pick(rng)]);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

}  // namespace

EvalReport evaluate(const TrainConfig& config, const ParamStore& params, const std::vector<PointCloud>& scenes,
                    std::string split_name) {
    config.validate();
    if (scenes.empty()) throw ValidationError("evaluate: split '" + split_name + "' is empty");
    const NetworkConfig& net = config.network;
    const std::size_t classes = net.num_classes;
    const std::size_t n = net.block_points();

    EvalReport report;
    report.split = std::move(split_name);
    report.confusion = EvalAccumulator(static_cast<int>(classes));
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        const PointCloud& scene = scenes[s];
        Tensor votes = Tensor::zeros(scene.size(), classes);
        std::vector<std::size_t> hits(scene.size(), 0);
        Rng rng(detail::derive_seed(config.train.seed, detail::Stream::eval, s));
        for (const BlockSample& tile :
             tile_cloud(scene, config.data.block_size, config.data.stride(), config.data.block_padding)) {
            for (auto& chunk : chunk_tile(tile.indices, n, rng)) {
                const BlockSample sample{std::move(chunk), tile.center_x, tile.center_y};
                const PointCloud block = extract_block(scene, sample);
                const BlockPlan plan = plan_block(net, block.positions);
                ad::Tape tape;
                ParamBinding bound(tape, params);
                const ForwardOutput out = forward(net, plan, block.features, bound);
                const Tensor& probs = ad::softmax_rows(out.refined).value();
                for (std::size_t r = 0; r < n; ++r) {
                    const std::size_t row = sample.indices[r];
                    ++hits[row];
                    for (std::size_t c = 0; c < classes; ++c) votes.at(row, c) += probs.at(r, c);
                }
                if (block.has_labels()) {
                    const EdgeTargets t = edge_targets(plan.graph.layers.back(), block.labels, config.include_self_edges);
                    const Tensor& p = out.edge_probs.value();
                    for (std::size_t e = 0; e < t.rows.size(); ++e) {
                        const bool predicted = p.at(t.rows[e], 0) >= 0.5;
                        report.edge_correct += predicted == (t.labels[e] == 1) ? 1 : 0;
                    }
                    report.edge_total += t.rows.size();
                }
            }
        }
        std::vector<int> pred(scene.size());
        for (std::size_t i = 0; i < scene.size(); ++i) {
            if (hits[i] == 0) throw InternalError("evaluate: point " + std::to_string(i) + " of scene " +
                                                  std::to_string(s) + " was never covered");
            std::size_t best = 0;
            for (std::size_t c = 1; c < classes; ++c) {
                if (votes.at(i, c) > votes.at(i, best)) best = c;
            }
            pred[i] = static_cast<int>(best);
        }
        if (scene.has_labels()) report.confusion.add(scene.labels, pred);
        report.predictions.push_back(std::move(pred));
    }
    if (report.confusion.total() > 0) report.metrics = compute_metrics(report.confusion);
    return report;
}

}  // namespace pointedge
