#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pointedge/hier_graph.hpp"
#include "pointedge/tape.hpp"

namespace pointedge {

/// Loss mixing weights. An empty alpha means "auto": the per-batch ratio of
/// positive to negative edges.
struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::optional<double> alpha;

    void validate() const;
};

/// 1 where both endpoints share a class (self-edges included), else 0.
std::vector<std::uint8_t> edge_labels(const GraphLayer& graph, std::span<const int> labels);

/// Labels of every edge, optionally with self-edges dropped. Returns the kept
/// edge rows alongside.
struct EdgeTargets {
    std::vector<std::size_t> rows;
    std::vector<std::uint8_t> labels;

    std::size_t positives() const;
    std::size_t negatives() const { return labels.size() - positives(); }
};

EdgeTargets edge_targets(const GraphLayer& graph, std::span<const int> labels, bool include_self_edges);

/// #positive / max(1, #negative).
double auto_alpha(std::size_t positives, std::size_t negatives);

inline constexpr double prob_clamp = 1e-12;

/// Mean cross entropy of row-wise softmax against integer labels.
ad::Var point_loss(ad::Var scores, std::span<const int> labels);

/// -(1/|E|) sum [ l log p + alpha (1 - l) log(1 - p) ] with p clamped to [1e-12, 1 - 1e-12].
ad::Var edge_loss(ad::Var preds, std::span<const std::uint8_t> labels, double alpha);

ad::Var total_loss(ad::Var point, ad::Var edge, const LossWeights& weights);

/// Confusion matrix, rows = ground truth, columns = prediction.
class EvalAccumulator {
public:
    explicit EvalAccumulator(int num_classes);

    void add(int truth, int predicted);
    void add(std::span<const int> truth, std::span<const int> predicted);
    void merge(const EvalAccumulator& other);

    int num_classes() const noexcept { return classes_; }
    std::uint64_t at(int truth, int predicted) const;
    std::uint64_t total() const noexcept { return total_; }

private:
    int classes_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct Metrics {
    double overall_accuracy = 0.0;
    double mean_accuracy = 0.0;
    double mean_iou = 0.0;
    std::vector<std::optional<double>> class_accuracy;  // empty when the class is absent from ground truth
    std::vector<std::optional<double>> class_iou;
};

Metrics compute_metrics(const EvalAccumulator& acc);

/// Per-class table plus OA / mAcc / mIoU, four decimals.
std::string format_metrics(const Metrics& m);

}  // namespace pointedge
