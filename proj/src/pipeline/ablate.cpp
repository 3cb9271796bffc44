#include <cstdio>
#include <ostream>

#include "pointedge/errors.hpp"
#include "pointedge/pipeline.hpp"

namespace pointedge {

AblationAxis parse_ablation_axis(std::string_view name) {
    if (name == "edge_function") return AblationAxis::edge_function;
    if (name == "message_passing") return AblationAxis::message_passing;
    if (name == "graph_mode") return AblationAxis::graph_mode;
    throw ValidationError("unknown ablation axis '" + std::string(name) +
                          "' (expected edge_function, message_passing or graph_mode)");
}

std::string_view ablation_axis_name(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::edge_function: return "edge_function";
        case AblationAxis::message_passing: return "message_passing";
        case AblationAxis::graph_mode: return "graph_mode";
    }
    return "?";
}

std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& base, AblationAxis axis) {
    std::vector<std::pair<std::string, TrainConfig>> out;
    auto add = [&](std::string_view name, auto&& apply) {
        TrainConfig c = base;
        apply(c);
        c.train.out_dir = base.train.out_dir / ("ablate_" + std::string(ablation_axis_name(axis))) / std::string(name);
        out.emplace_back(std::string(name), std::move(c));
    };
    switch (axis) {
        case AblationAxis::edge_function:
            for (EdgeFunction f : {EdgeFunction::subtraction, EdgeFunction::summation, EdgeFunction::hadamard,
                                   EdgeFunction::concat_sub, EdgeFunction::concatenation}) {
                add(edge_function_name(f), [f](TrainConfig& c) { c.network.edge_function = f; });
            }
            break;
        case AblationAxis::message_passing:
            for (MessagePassing m : {MessagePassing::ada_aggre_softmax, MessagePassing::ada_aggre_no_softmax,
                                     MessagePassing::maxpool_concat}) {
                add(message_passing_name(m), [m](TrainConfig& c) { c.network.message_passing = m; });
            }
            break;
        case AblationAxis::graph_mode:
            for (GraphMode g : {GraphMode::hierarchical, GraphMode::independent}) {
                add(graph_mode_name(g), [g](TrainConfig& c) { c.network.graph_mode = g; });
            }
            break;
    }
    return out;
}

AblationReport ablate(const TrainConfig& base, const Dataset& data, AblationAxis axis, std::ostream* log) {
    AblationReport report;
    report.axis = axis;
    report.split = data.test.empty() ? "train" : "test";
    for (const auto& [name, config] : ablation_variants(base, axis)) {
        if (log) *log << "ablate " << ablation_axis_name(axis) << ": training " << name << "\n";
        TrainResult run = train(config, data, TrainOptions{false, nullptr});
        const EvalReport eval = evaluate(config, run.params, data.split(report.split), report.split);
        report.rows.push_back(AblationRow{name, eval.metrics, eval.edge_accuracy(),
                                          run.record.epochs.back().total_loss});
    }
    return report;
}

std::string format_ablation(const AblationReport& report) {
    std::string out = "axis " + std::string(ablation_axis_name(report.axis)) + ", split " + report.split + "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %8s %8s %8s %9s %10s\n", "variant", "OA", "mAcc", "mIoU", "edge_acc",
                  "final_loss");
    out += buf;
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%-22s %8.4f %8.4f %8.4f %9.4f %10.4f\n", r.variant.c_str(),
                      r.metrics.overall_accuracy, r.metrics.mean_accuracy, r.metrics.mean_iou, r.edge_accuracy,
                      r.final_loss);
        out += buf;
    }
    return out;
}

}  // namespace pointedge
