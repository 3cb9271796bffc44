#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pointedge/geom.hpp"
#include "pointedge/losses.hpp"
#include "pointedge/network.hpp"

namespace pointedge {

enum class DataSource { synth, files };

struct DataConfig {
    DataSource source = DataSource::synth;
    Schema schema = Schema::scannet6;
    int num_classes = 4;
    std::filesystem::path scene_spec;  // synth source
    std::size_t train_scenes = 4;
    std::size_t test_scenes = 0;
    std::uint64_t scene_seed = 0;
    std::vector<std::filesystem::path> train_files;  // files source
    std::vector<std::filesystem::path> test_files;
    double block_size = 1.0;
    double block_padding = 0.0;
    double eval_stride = 0.0;  // 0: same as block_size
    std::size_t blocks_per_scene = 1;

    double stride() const { return eval_stride > 0 ? eval_stride : block_size; }
};

struct TrainSettings {
    int epochs = 100;
    std::size_t batch_size = 16;
    double base_lr = 0.05;
    double lr_decay = 0.1;
    int lr_decay_every = 25;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // 0: final checkpoint only
    std::filesystem::path out_dir = "runs/default";
};

struct TrainConfig {
    NetworkConfig network;
    LossWeights loss;
    bool include_self_edges = true;
    TrainSettings train;
    DataConfig data;

    void validate() const;
};

/// Parses INI text (`[section]` headers, `key = value`, `;` comments).
/// Relative paths are resolved against `base_dir`. Unknown keys are errors.
TrainConfig parse_train_config(const std::string& text, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);

/// Canonical INI rendering of a config; parsing it back yields the same config.
std::string to_ini(const TrainConfig& config);

/// Scene spec text: a `[scene]` section followed by one `[primitive.<name>]`
/// section per primitive, in file order.
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec load_scene_spec(const std::filesystem::path& path);

std::string_view data_source_name(DataSource s);

}  // namespace pointedge
