#include <CLI11.hpp>
#include <exception>
#include <fstream>
#include <iostream>

#include "pointedge/checkpoint.hpp"
#include "pointedge/config.hpp"
#include "pointedge/errors.hpp"
#include "pointedge/network.hpp"
#include "pointedge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pointedge;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

int run_train(const fs::path& config_path) {
    const TrainConfig config = load_train_config(config_path);
    const Dataset data = load_dataset(config);
    TrainResult run = train(config, data, TrainOptions{true, &std::cout});
    run.record.evals.push_back(evaluate(config, run.params, data.train, "train"));
    if (!data.test.empty()) run.record.evals.push_back(evaluate(config, run.params, data.test, "test"));
    export_report(run.record, config.train.out_dir);
    for (const auto& e : run.record.evals) {
        std::cout << "[" << e.split << "]\n" << format_metrics(e.metrics);
        std::cout << "edge_accuracy " << e.edge_accuracy() << "\n";
    }
    std::cout << "report written to " << config.train.out_dir.string() << "\n";
    return 0;
}

int run_eval(const fs::path& config_path, const fs::path& checkpoint, const std::string& split) {
    const TrainConfig config = load_train_config(config_path);
    const ParamStore params = load_checkpoint(checkpoint);
    require_compatible(init_params(config.network, config.train.seed), params);
    const Dataset data = load_dataset(config);
    const EvalReport report = evaluate(config, params, data.split(split), split);
    std::string text = format_metrics(report.metrics);
    if (report.edge_total > 0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "edge_accuracy %.4f\n", report.edge_accuracy());
        text += buf;
    }
    std::cout << text;
    write_text(config.train.out_dir / ("eval_" + split + ".txt"), text);
    return 0;
}

int run_ablate(const fs::path& config_path, const std::string& axis_name) {
    const TrainConfig config = load_train_config(config_path);
    const AblationAxis axis = parse_ablation_axis(axis_name);
    const Dataset data = load_dataset(config);
    const AblationReport report = ablate(config, data, axis, &std::cout);
    const std::string table = format_ablation(report);
    std::cout << table;
    write_text(config.train.out_dir / ("ablation_" + axis_name + ".txt"), table);
    return 0;
}

int run_gradcheck(const fs::path& config_path, double tolerance) {
    const TrainConfig config = load_train_config(config_path);
    const GradCheckResult r = gradcheck_config(config, load_dataset(config));
    std::cout << "coordinates " << r.coordinates << "\n"
              << "max_rel_error " << r.max_rel_error << "\n"
              << "worst " << r.worst_param << "[" << r.worst_index << "] analytic " << r.worst_analytic
              << " numeric " << r.worst_numeric << "\n";
    return r.max_rel_error < tolerance ? 0 : 1;
}

int run_synth(const fs::path& spec_path, const fs::path& out, std::uint64_t seed) {
    const PointCloud cloud = synth_scene(load_scene_spec(spec_path), seed);
    save_point_cloud(out, cloud);
    std::cout << "wrote " << cloud.size() << " points to " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point cloud segmentation with a hierarchical edge branch"};
    app.require_subcommand(1);

    fs::path config, checkpoint, spec, out;
    std::string split = "test", axis;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;

    auto* train_cmd = app.add_subcommand("train", "train a model and write a report");
    train_cmd->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    eval_cmd->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));

    auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate every variant along one axis");
    ablate_cmd->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    ablate_cmd->add_option("--axis", axis, "edge_function, message_passing or graph_mode")
        ->required()
        ->check(CLI::IsMember({"edge_function", "message_passing", "graph_mode"}));

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full loss");
    grad_cmd->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    grad_cmd->add_option("--tolerance", tolerance, "maximum accepted relative error");

    auto* synth_cmd = app.add_subcommand("synth", "sample a synthetic scene into a point file");
    synth_cmd->add_option("--spec", spec, "scene spec")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--out", out, "output point file")->required();
    synth_cmd->add_option("--seed", seed, "sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // --help exits 0, usage errors 2
    }
    try {
        if (*train_cmd) return run_train(config);
        if (*eval_cmd) return run_eval(config, checkpoint, split);
        if (*ablate_cmd) return run_ablate(config, axis);
        if (*grad_cmd) return run_gradcheck(config, tolerance);
        if (*synth_cmd) return run_synth(spec, out, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
