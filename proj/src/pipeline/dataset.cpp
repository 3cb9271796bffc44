#include "pointedge/errors.hpp"
#include "pointedge/pipeline.hpp"
#include "seeds.hpp"

namespace pointedge {

const std::vector<PointCloud>& Dataset::split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "test") return test;
    throw ValidationError("unknown split '" + std::string(name) + "' (expected train or test)");
}

Dataset load_dataset(const TrainConfig& config) {
    const DataConfig& d = config.data;
    Dataset out;
    if (d.source == DataSource::synth) {
        SceneSpec spec = load_scene_spec(d.scene_spec);
        if (spec.num_classes != d.num_classes || spec.schema != d.schema) {
            throw ValidationError("scene spec " + d.scene_spec.string() + " disagrees with [data] classes or schema");
        }
        for (std::size_t i = 0; i < d.train_scenes; ++i) {
            out.train.push_back(synth_scene(spec, detail::derive_seed(d.scene_seed, detail::Stream::train_scene, i)));
        }
        for (std::size_t i = 0; i < d.test_scenes; ++i) {
            out.test.push_back(synth_scene(spec, detail::derive_seed(d.scene_seed, detail::Stream::test_scene, i)));
        }
    } else {
        for (const auto& f : d.train_files) out.train.push_back(load_point_cloud(f, d.schema, d.num_classes));
        for (const auto& f : d.test_files) out.test.push_back(load_point_cloud(f, d.schema, d.num_classes));
    }
    if (out.train.empty()) throw ValidationError("training split is empty");
    for (const auto& cloud : out.train) {
        if (!cloud.has_labels()) throw ValidationError("training scenes must be labeled");
    }
    return out;
}

}  // namespace pointedge
