#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pointedge/checkpoint.hpp"
#include "pointedge/config.hpp"
#include "pointedge/errors.hpp"
#include "pointedge/pipeline.hpp"

using namespace pointedge;
namespace fs = std::filesystem;

namespace {

const fs::path configs = fs::path(POINTEDGE_SOURCE_DIR) / "configs";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pointedge_test_" + name);
    fs::remove_all(p);
    return p;
}

TrainConfig tiny(const std::string& extra_train = "") {
    TrainConfig c = parse_train_config(R"(
[network]
layer_points = 8 16 32
k = 3 4 6
k_interp = 3
point_channels = 6 6 5
head_hidden = 6
[train]
epochs = 2
batch_size = 2
lr_decay_every = 1
seed = 4
)" + extra_train + R"(
[data]
source = synth
schema = scannet-6d
num_classes = 4
scene_spec = toy_scene.ini
train_scenes = 2
test_scenes = 1
scene_seed = 9
block_size = 0.8
)",
                                       configs);
    c.train.out_dir = scratch("tiny");
    return c;
}

}  // namespace

TEST(Config, ToyConfigValues) {
    const TrainConfig c = load_train_config(configs / "toy.ini");
    EXPECT_EQ(c.network.layer_points, (std::vector<std::size_t>{16, 64, 512}));
    EXPECT_EQ(c.network.input_channels, 6u);
    EXPECT_EQ(c.network.num_classes, 4u);
    EXPECT_FALSE(c.loss.alpha.has_value());
    EXPECT_EQ(c.data.scene_spec, configs / "toy_scene.ini");
    EXPECT_EQ(c.train.out_dir, configs / "../runs/toy");
}

TEST(Config, FullScaleConfigsEncodeTrainingSchedule) {
    for (const char* name : {"s3dis.ini", "scannet.ini"}) {
        const TrainConfig c = load_train_config(configs / name);
        EXPECT_EQ(c.network.layer_points, (std::vector<std::size_t>{16, 64, 256, 1024, 4096})) << name;
        EXPECT_EQ(c.network.k, (std::vector<std::size_t>{4, 6, 10, 14, 16}));
        EXPECT_EQ(c.network.k_interp, 3u);
        EXPECT_EQ(c.train.batch_size, 16u);
        EXPECT_EQ(c.train.base_lr, 0.05);
        EXPECT_EQ(c.train.momentum, 0.9);
        EXPECT_EQ(c.train.weight_decay, 1e-4);
        EXPECT_EQ(c.train.lr_decay, 0.1);
        EXPECT_EQ(c.data.block_size, 0.8);
        EXPECT_EQ(c.data.block_padding, 0.1);
    }
    const TrainConfig s = load_train_config(configs / "s3dis.ini");
    EXPECT_EQ(s.train.epochs, 100);
    EXPECT_EQ(s.train.lr_decay_every, 25);
    EXPECT_EQ(s.network.input_channels, 9u);
    EXPECT_EQ(s.network.num_classes, 13u);
    const TrainConfig n = load_train_config(configs / "scannet.ini");
    EXPECT_EQ(n.train.epochs, 120);
    EXPECT_EQ(n.train.lr_decay_every, 30);
    EXPECT_EQ(n.network.num_classes, 20u);
}

TEST(Config, CanonicalRenderingRoundTrips) {
    for (const char* name : {"toy.ini", "s3dis.ini", "gradcheck.ini"}) {
        const TrainConfig c = load_train_config(configs / name);
        const std::string ini = to_ini(c);
        EXPECT_EQ(to_ini(parse_train_config(ini)), ini) << name;
    }
    TrainConfig c = tiny();
    c.loss.alpha = 0.3;
    c.network.message_passing = MessagePassing::ada_aggre_no_softmax;
    const TrainConfig back = parse_train_config(to_ini(c));
    EXPECT_EQ(back.loss.alpha, 0.3);
    EXPECT_EQ(back.network.message_passing, MessagePassing::ada_aggre_no_softmax);
}

TEST(Config, UnknownKeysAndSectionsAreErrors) {
    try {
        parse_train_config("[train]\nepochs = 3\nepoch = 4\n");
        FAIL() << "unknown key accepted";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
    EXPECT_THROW(parse_train_config("[trainer]\nepochs = 3\n"), ValidationError);
    EXPECT_THROW(parse_train_config("[train]\nepochs = three\n"), ValidationError);
    EXPECT_THROW(parse_train_config("[network]\nmessage_passing = mean\n"), ValidationError);
    try {
        parse_train_config("[train]\nepochs = 3\nthis line has no equals sign\n");
        FAIL() << "malformed line accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Config, SchemaMustMatchInputWidth) {
    TrainConfig c = tiny();
    c.network.input_channels = 9;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(SceneSpec, ParsesPrimitivesInOrder) {
    const SceneSpec s = load_scene_spec(configs / "toy_scene.ini");
    ASSERT_EQ(s.primitives.size(), 4u);
    EXPECT_EQ(s.num_classes, 4);
    std::size_t total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(s.primitives[i].label, static_cast<int>(i));
        total += s.primitives[i].points;
    }
    EXPECT_EQ(total, 512u);
    EXPECT_THROW(parse_scene_spec("[scene]\nnum_classes = 2\n[primitive.a]\nkind = sphere\n"), ValidationError);
}

TEST(Dataset, SynthSplitsAreDisjointAndDeterministic) {
    const TrainConfig c = tiny();
    const Dataset a = load_dataset(c), b = load_dataset(c);
    ASSERT_EQ(a.train.size(), 2u);
    ASSERT_EQ(a.test.size(), 1u);
    EXPECT_EQ(a.train[0].positions, b.train[0].positions);
    EXPECT_NE(a.train[0].positions, a.train[1].positions);
    EXPECT_NE(a.train[0].positions, a.test[0].positions);
    EXPECT_THROW(a.split("val"), ValidationError);
}

TEST(Evaluate, EveryPointReceivesAPrediction) {
    const TrainConfig c = tiny();
    const Dataset d = load_dataset(c);
    const EvalReport r = evaluate(c, init_params(c.network, 1), d.train, "train");
    ASSERT_EQ(r.predictions.size(), d.train.size());
    std::size_t total = 0;
    for (std::size_t s = 0; s < d.train.size(); ++s) {
        ASSERT_EQ(r.predictions[s].size(), d.train[s].size());
        for (int p : r.predictions[s]) {
            EXPECT_GE(p, 0);
            EXPECT_LT(p, 4);
        }
        total += d.train[s].size();
    }
    EXPECT_EQ(r.confusion.total(), total);
    EXPECT_GT(r.edge_total, 0u);
    EXPECT_LE(r.edge_correct, r.edge_total);
}

TEST(Training, SeededRunsAreBitwiseIdentical) {
    const TrainConfig c = tiny();
    const Dataset d = load_dataset(c);
    TrainOptions quiet;
    quiet.write_checkpoints = false;
    const TrainResult a = train(c, d, quiet), b = train(c, d, quiet);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(losses_csv(a.record), losses_csv(b.record));
    EXPECT_NE(a.params, init_params(c.network, c.train.seed));
}

TEST(Training, RecordsScheduleAndFiniteLosses) {
    const TrainConfig c = tiny();
    TrainOptions quiet;
    quiet.write_checkpoints = false;
    const TrainResult r = train(c, load_dataset(c), quiet);
    ASSERT_EQ(r.record.epochs.size(), 2u);
    EXPECT_EQ(r.record.epochs[0].lr, 0.05);
    EXPECT_DOUBLE_EQ(r.record.epochs[1].lr, 0.05 * 0.1);
    for (const auto& e : r.record.epochs) {
        EXPECT_TRUE(std::isfinite(e.total_loss));
        EXPECT_NEAR(e.total_loss, e.point_loss + e.edge_loss, 1e-9);
    }
}

TEST(Training, WritesCheckpointsThatLoadBack) {
    const TrainConfig c = tiny("checkpoint_every = 1");
    const TrainResult r = train(c, load_dataset(c));
    ASSERT_EQ(r.record.checkpoints.size(), 3u);
    for (const auto& p : r.record.checkpoints) EXPECT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(load_checkpoint(c.train.out_dir / "checkpoints" / "final.ckpt"), r.params);
}

TEST(Training, DivergenceMessageNamesEpochAndStep) {
    const DivergenceError e(3, 7, "non-finite loss");
    EXPECT_EQ(std::string(e.what()), "training diverged at epoch 3, step 7: non-finite loss");
    EXPECT_EQ(e.epoch(), 3);
    EXPECT_EQ(e.step(), 7u);
}

TEST(Report, ExportIsCompleteAndIdempotent) {
    RunRecord r;
    for (int e = 0; e < 5; ++e) r.epochs.push_back(EpochRecord{e, 0.05, 1.0 / (e + 1), 0.5 / (e + 1), 1.5 / (e + 1)});
    r.config_snapshot = to_ini(tiny());
    EvalReport ev;
    ev.split = "train";
    ev.confusion = EvalAccumulator(2);
    ev.confusion.add(0, 0);
    ev.confusion.add(1, 1);
    ev.metrics = compute_metrics(ev.confusion);
    r.evals.push_back(ev);
    const fs::path dir = scratch("report");
    export_report(r, dir);
    const std::string csv = read_file(dir / "losses.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,lr,point_loss,edge_loss,total_loss");
    const std::string svg = read_file(dir / "losses.svg");
    export_report(r, dir);
    EXPECT_EQ(read_file(dir / "losses.csv"), csv);
    EXPECT_EQ(read_file(dir / "losses.svg"), svg);
    EXPECT_EQ(read_file(dir / "config.ini"), r.config_snapshot);
    EXPECT_NE(read_file(dir / "metrics.txt").find("mIoU 1.0000"), std::string::npos);

    boost::property_tree::ptree tree;
    std::istringstream in(svg);
    ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
    EXPECT_TRUE(tree.get_child_optional("svg").has_value());
}

TEST(Ablation, VariantCountsPerAxis) {
    const TrainConfig c = tiny();
    EXPECT_EQ(ablation_variants(c, AblationAxis::edge_function).size(), 5u);
    EXPECT_EQ(ablation_variants(c, AblationAxis::message_passing).size(), 3u);
    EXPECT_EQ(ablation_variants(c, AblationAxis::graph_mode).size(), 2u);
    const auto modes = ablation_variants(c, AblationAxis::graph_mode);
    EXPECT_EQ(modes[0].first, "hierarchical");
    EXPECT_EQ(modes[1].second.network.graph_mode, GraphMode::independent);
    EXPECT_EQ(modes[1].second.train.seed, c.train.seed);
    EXPECT_THROW(parse_ablation_axis("loss"), ValidationError);
}

TEST(Ablation, GraphModeRunProducesOneRowPerVariant) {
    TrainConfig c = tiny();
    c.train.epochs = 1;
    const AblationReport r = ablate(c, load_dataset(c), AblationAxis::graph_mode);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.split, "test");
    const std::string table = format_ablation(r);
    EXPECT_NE(table.find("hierarchical"), std::string::npos);
    EXPECT_NE(table.find("independent"), std::string::npos);
}

TEST(GradCheck, ConfigLevelCheckPasses) {
    const TrainConfig c = load_train_config(configs / "gradcheck.ini");
    const GradCheckResult r = gradcheck_config(c, load_dataset(c));
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param;
    EXPECT_EQ(r.coordinates, init_params(c.network, c.train.seed).total_size());
}

TEST(Evaluate, UntrainedModelIsNearChance) {
    const TrainConfig c = load_train_config(configs / "toy.ini");
    const Dataset d = load_dataset(c);
    const EvalReport r = evaluate(c, init_params(c.network, c.train.seed), d.test, "test");
    EXPECT_NEAR(r.metrics.overall_accuracy, 0.25, 0.1);
}

TEST(Training, EmptyTrainingSplitIsAnError) {
    const TrainConfig c = tiny();
    EXPECT_THROW(train(c, Dataset{}), ValidationError);
}

TEST(Report, RejectsEmptyRecordAndUnwritableDirectory) {
    EXPECT_THROW(export_report(RunRecord{}, scratch("empty")), ValidationError);
    RunRecord r;
    r.epochs.push_back(EpochRecord{0, 0.05, 1, 1, 2});
    const fs::path file = scratch("blocker");
    std::ofstream(file) << "x";
    EXPECT_THROW(export_report(r, file / "sub"), ValidationError);
}
