#include "pointedge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pointedge/errors.hpp"

namespace pointedge {

void LossWeights::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ValidationError("loss weights must be non-negative");
    if (alpha && !(*alpha > 0.0)) throw ValidationError("fixed alpha must be positive");
}

std::vector<std::uint8_t> edge_labels(const GraphLayer& graph, std::span<const int> labels) {
    if (labels.size() != graph.point_count()) {
        throw ValidationError("edge_labels: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(graph.point_count()) + " points");
    }
    std::vector<std::uint8_t> out(graph.edge_count());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        out[e] = labels[graph.edges[e].src] == labels[graph.edges[e].dst] ? 1 : 0;
    }
    return out;
}

std::size_t EdgeTargets::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

EdgeTargets edge_targets(const GraphLayer& graph, std::span<const int> labels, bool include_self_edges) {
    const auto all = edge_labels(graph, labels);
    EdgeTargets t;
    for (std::size_t e = 0; e < all.size(); ++e) {
        if (!include_self_edges && graph.edges[e].src == graph.edges[e].dst) continue;
        t.rows.push_back(e);
        t.labels.push_back(all[e]);
    }
    return t;
}

double auto_alpha(std::size_t positives, std::size_t negatives) {
    return static_cast<double>(positives) / static_cast<double>(std::max<std::size_t>(1, negatives));
}

ad::Var point_loss(ad::Var scores, std::span<const int> labels) {
    if (labels.size() != scores.rows()) {
        throw ValidationError("point_loss: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(scores.rows()) + " score rows");
    }
    std::vector<std::size_t> cols(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= scores.cols()) {
            throw ValidationError("point_loss: label " + std::to_string(labels[i]) + " out of range");
        }
        cols[i] = static_cast<std::size_t>(labels[i]);
    }
    return ad::scale(ad::mean_all(ad::pick_per_row(ad::log_softmax_rows(scores), cols)), -1.0);
}

ad::Var edge_loss(ad::Var preds, std::span<const std::uint8_t> labels, double alpha) {
    if (preds.cols() != 1 || preds.rows() != labels.size()) {
        throw ValidationError("edge_loss: predictions " + preds.value().shape_string() + " vs " +
                              std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw ValidationError("edge_loss: no edges");
    ad::Tape& tape = *preds.tape();
    const std::size_t n = labels.size();
    Tensor pos = Tensor::zeros(n, 1);
    Tensor neg = Tensor::zeros(n, 1);
    for (std::size_t e = 0; e < n; ++e) {
        pos.at(e, 0) = labels[e] ? 1.0 : 0.0;
        neg.at(e, 0) = labels[e] ? 0.0 : alpha;
    }
    ad::Var p = ad::clamp(preds, prob_clamp, 1.0 - prob_clamp);
    ad::Var one_minus = ad::sub(tape.constant(Tensor({n, 1}, 1.0)), p);
    ad::Var terms = ad::add(ad::mul(tape.constant(std::move(pos)), ad::log(p)),
                            ad::mul(tape.constant(std::move(neg)), ad::log(one_minus)));
    return ad::scale(ad::mean_all(terms), -1.0);
}

ad::Var total_loss(ad::Var point, ad::Var edge, const LossWeights& weights) {
    return ad::add(ad::scale(point, weights.lambda1), ad::scale(edge, weights.lambda2));
}

EvalAccumulator::EvalAccumulator(int num_classes) : classes_(num_classes) {
    if (num_classes < 1) throw ValidationError("EvalAccumulator: need at least one class");
    counts_.assign(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0);
}

void EvalAccumulator::add(int truth, int predicted) {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
        throw ValidationError("EvalAccumulator: class out of range");
    }
    ++counts_[static_cast<std::size_t>(truth * classes_ + predicted)];
    ++total_;
}

void EvalAccumulator::add(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw ValidationError("EvalAccumulator: length mismatch");
    for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], predicted[i]);
}

void EvalAccumulator::merge(const EvalAccumulator& other) {
    if (other.classes_ != classes_) throw ValidationError("EvalAccumulator: class count mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

std::uint64_t EvalAccumulator::at(int truth, int predicted) const {
    return counts_.at(static_cast<std::size_t>(truth * classes_ + predicted));
}

Metrics compute_metrics(const EvalAccumulator& acc) {
    if (acc.total() == 0) throw ValidationError("metrics: empty accumulator");
    const int c = acc.num_classes();
    Metrics m;
    m.class_accuracy.resize(static_cast<std::size_t>(c));
    m.class_iou.resize(static_cast<std::size_t>(c));
    std::uint64_t trace = 0;
    double acc_sum = 0.0, iou_sum = 0.0;
    int present = 0;
    for (int k = 0; k < c; ++k) {
        std::uint64_t row = 0, col = 0;
        for (int j = 0; j < c; ++j) {
            row += acc.at(k, j);
            col += acc.at(j, k);
        }
        const std::uint64_t diag = acc.at(k, k);
        trace += diag;
        if (row == 0) continue;
        const double a = static_cast<double>(diag) / static_cast<double>(row);
        const double iou = static_cast<double>(diag) / static_cast<double>(row + col - diag);
        m.class_accuracy[static_cast<std::size_t>(k)] = a;
        m.class_iou[static_cast<std::size_t>(k)] = iou;
        acc_sum += a;
        iou_sum += iou;
        ++present;
    }
    m.overall_accuracy = static_cast<double>(trace) / static_cast<double>(acc.total());
    m.mean_accuracy = acc_sum / present;
    m.mean_iou = iou_sum / present;
    return m;
}

std::string format_metrics(const Metrics& m) {
    std::string out = "class  accuracy  iou\n";
    char buf[96];
    for (std::size_t k = 0; k < m.class_iou.size(); ++k) {
        if (m.class_iou[k]) {
            std::snprintf(buf, sizeof buf, "%-5zu  %.4f    %.4f\n", k, *m.class_accuracy[k], *m.class_iou[k]);
        } else {
            std::snprintf(buf, sizeof buf, "%-5zu  -         -\n", k);
        }
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "OA %.4f\nmAcc %.4f\nmIoU %.4f\n", m.overall_accuracy, m.mean_accuracy, m.mean_iou);
    out += buf;
    return out;
}

}  // namespace pointedge
