#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pointedge/config.hpp"
#include "pointedge/geom.hpp"
#include "pointedge/gradcheck.hpp"
#include "pointedge/losses.hpp"
#include "pointedge/params.hpp"

namespace pointedge {

struct Dataset {
    std::vector<PointCloud> train;
    std::vector<PointCloud> test;

    /// "train" or "test".
    const std::vector<PointCloud>& split(std::string_view name) const;
};

/// Synth scenes are drawn from the scene spec with per-scene seeds derived
/// from scene_seed; the test split uses a disjoint seed stream.
Dataset load_dataset(const TrainConfig& config);

/// Raised when a loss or gradient turns non-finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int epoch, std::size_t step, const std::string& what);
    int epoch() const noexcept { return epoch_; }
    std::size_t step() const noexcept { return step_; }

private:
    int epoch_;
    std::size_t step_;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double point_loss = 0.0;
    double edge_loss = 0.0;
    double total_loss = 0.0;
};

struct EvalReport {
    std::string split;
    EvalAccumulator confusion{1};
    Metrics metrics;
    std::size_t edge_correct = 0;
    std::size_t edge_total = 0;
    /// predictions[s][i]: final class of point i of scene s.
    std::vector<std::vector<int>> predictions;

    double edge_accuracy() const { return edge_total ? static_cast<double>(edge_correct) / edge_total : 0.0; }
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    std::vector<EvalReport> evals;
    double wall_seconds = 0.0;
    std::string config_snapshot;
    std::vector<std::filesystem::path> checkpoints;
};

struct TrainOptions {
    bool write_checkpoints = true;
    std::ostream* log = nullptr;
};

struct TrainResult {
    RunRecord record;
    ParamStore params;
};

TrainResult train(const TrainConfig& config, const Dataset& data, const TrainOptions& options = {});

/// Tiles every scene of the split, runs the network on each tile and keeps,
/// per point, the class with the highest summed softmax score.
EvalReport evaluate(const TrainConfig& config, const ParamStore& params, const std::vector<PointCloud>& scenes,
                    std::string split_name);

enum class AblationAxis { edge_function, message_passing, graph_mode };

AblationAxis parse_ablation_axis(std::string_view name);
std::string_view ablation_axis_name(AblationAxis axis);

struct AblationRow {
    std::string variant;
    Metrics metrics;
    double edge_accuracy = 0.0;
    double final_loss = 0.0;
};

struct AblationReport {
    AblationAxis axis = AblationAxis::edge_function;
    std::string split;
    std::vector<AblationRow> rows;
};

/// Variant configs for one axis, in table order.
std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& base, AblationAxis axis);

/// Trains and evaluates every variant with the same seed and data.
AblationReport ablate(const TrainConfig& base, const Dataset& data, AblationAxis axis, std::ostream* log = nullptr);

std::string format_ablation(const AblationReport& report);

/// Central-difference check of the full training loss (point + edge terms) on
/// one block drawn from the first training scene, at freshly initialized parameters.
GradCheckResult gradcheck_config(const TrainConfig& config, const Dataset& data, GradCheckOptions options = {});

/// Writes losses.csv, metrics.txt, config.ini and losses.svg into out_dir.
void export_report(const RunRecord& record, const std::filesystem::path& out_dir);

std::string losses_csv(const RunRecord& record);
std::string losses_svg(const RunRecord& record);

}  // namespace pointedge
