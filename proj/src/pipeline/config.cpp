#include "pointedge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pointedge/errors.hpp"

namespace pointedge {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

pt::ptree read_ini(const std::string& text) {
    std::istringstream in(text);
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }
    return tree;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Reads one section and complains about any key that was never consumed.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool present() const { return tree_ != nullptr; }

    std::optional<std::string> raw(const std::string& key) {
        seen_.insert(key);
        if (!tree_) return std::nullopt;
        auto child = tree_->get_child_optional(key);
        if (!child) return std::nullopt;
        return trim(child->data());
    }

    template <class T>
    void number(const std::string& key, T& out) {
        if (auto v = raw(key)) out = parse_number<T>(key, *v);
    }

    template <class T>
    void list(const std::string& key, std::vector<T>& out) {
        if (auto v = raw(key)) {
            out.clear();
            std::istringstream words(*v);
            std::string w;
            while (words >> w) out.push_back(parse_number<T>(key, w));
        }
    }

    void text(const std::string& key, std::string& out) {
        if (auto v = raw(key)) out = *v;
    }

    void flag(const std::string& key, bool& out) {
        if (auto v = raw(key)) {
            if (*v == "true" || *v == "1") out = true;
            else if (*v == "false" || *v == "0") out = false;
            else throw ValidationError(where(key) + "expected true or false, got '" + *v + "'");
        }
    }

    void finish() const {
        if (!tree_) return;
        for (const auto& [key, child] : *tree_) {
            if (!seen_.contains(key)) throw ValidationError("[" + name_ + "] unknown key '" + key + "'");
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key + ": "; }

private:
    template <class T>
    T parse_number(const std::string& key, const std::string& v) const {
        T out{};
        const char* end = v.data() + v.size();
        auto [ptr, ec] = std::from_chars(v.data(), end, out);
        if (ec != std::errc{} || ptr != end) throw ValidationError(where(key) + "cannot parse '" + v + "'");
        return out;
    }

    const pt::ptree* tree_;
    std::string name_;
    std::set<std::string> seen_;
};

Section section(const pt::ptree& tree, const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

std::vector<fs::path> path_list(Section& s, const std::string& key, const fs::path& base) {
    std::vector<fs::path> out;
    if (auto v = s.raw(key)) {
        std::istringstream words(*v);
        std::string w;
        while (words >> w) out.push_back(resolve(base, w));
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        if constexpr (std::is_same_v<T, fs::path>) out += v[i].string();
        else out += std::to_string(v[i]);
    }
    return out;
}

std::string real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string_view data_source_name(DataSource s) { return s == DataSource::synth ? "synth" : "files"; }

void TrainConfig::validate() const {
    network.validate();
    loss.validate();
    if (train.epochs < 1) throw ValidationError("train: epochs must be at least 1");
    if (train.batch_size < 1) throw ValidationError("train: batch_size must be at least 1");
    if (!(train.base_lr > 0)) throw ValidationError("train: base_lr must be positive");
    if (!(train.lr_decay > 0 && train.lr_decay <= 1)) throw ValidationError("train: lr_decay must lie in (0, 1]");
    if (train.lr_decay_every < 1) throw ValidationError("train: lr_decay_every must be at least 1");
    if (train.momentum < 0 || train.weight_decay < 0) throw ValidationError("train: momentum and weight_decay must be non-negative");
    if (train.checkpoint_every < 0) throw ValidationError("train: checkpoint_every must be non-negative");
    if (network.input_channels != schema_channels(data.schema)) {
        throw ValidationError("network input_channels does not match the data schema");
    }
    if (static_cast<int>(network.num_classes) != data.num_classes) {
        throw ValidationError("network num_classes does not match data num_classes");
    }
    if (!(data.block_size > 0) || data.block_padding < 0 || data.eval_stride < 0) {
        throw ValidationError("data: block_size must be positive, padding and stride non-negative");
    }
    if (data.blocks_per_scene < 1) throw ValidationError("data: blocks_per_scene must be at least 1");
    if (data.source == DataSource::synth) {
        if (data.scene_spec.empty()) throw ValidationError("data: synth source needs scene_spec");
        if (data.train_scenes < 1) throw ValidationError("data: train_scenes must be at least 1");
    } else if (data.train_files.empty()) {
        throw ValidationError("data: files source needs train_files");
    }
}

TrainConfig parse_train_config(const std::string& text, const fs::path& base_dir) {
    const pt::ptree tree = read_ini(text);
    for (const auto& [name, child] : tree) {
        if (name != "network" && name != "loss" && name != "train" && name != "data") {
            throw ValidationError("unknown section [" + name + "]");
        }
        if (child.empty() && !child.data().empty()) throw ValidationError("key '" + name + "' outside any section");
    }
    TrainConfig c;

    Section data = section(tree, "data");
    if (auto v = data.raw("source")) {
        if (*v == "synth") c.data.source = DataSource::synth;
        else if (*v == "files") c.data.source = DataSource::files;
        else throw ValidationError(data.where("source") + "expected synth or files, got '" + *v + "'");
    }
    if (auto v = data.raw("schema")) c.data.schema = parse_schema(*v);
    data.number("num_classes", c.data.num_classes);
    if (auto v = data.raw("scene_spec")) c.data.scene_spec = resolve(base_dir, *v);
    data.number("train_scenes", c.data.train_scenes);
    data.number("test_scenes", c.data.test_scenes);
    data.number("scene_seed", c.data.scene_seed);
    c.data.train_files = path_list(data, "train_files", base_dir);
    c.data.test_files = path_list(data, "test_files", base_dir);
    data.number("block_size", c.data.block_size);
    data.number("block_padding", c.data.block_padding);
    data.number("eval_stride", c.data.eval_stride);
    data.number("blocks_per_scene", c.data.blocks_per_scene);
    data.finish();

    Section net = section(tree, "network");
    net.list("layer_points", c.network.layer_points);
    net.list("k", c.network.k);
    net.number("k_interp", c.network.k_interp);
    net.list("point_channels", c.network.point_channels);
    net.list("edge_channels", c.network.edge_channels);
    net.list("group_size", c.network.group_size);
    net.number("head_hidden", c.network.head_hidden);
    if (auto v = net.raw("message_passing")) c.network.message_passing = parse_message_passing(*v);
    if (auto v = net.raw("graph_mode")) c.network.graph_mode = parse_graph_mode(*v);
    if (auto v = net.raw("edge_function")) c.network.edge_function = parse_edge_function(*v);
    net.finish();
    c.network.input_channels = schema_channels(c.data.schema);
    c.network.num_classes = static_cast<std::size_t>(std::max(c.data.num_classes, 0));

    Section loss = section(tree, "loss");
    loss.number("lambda1", c.loss.lambda1);
    loss.number("lambda2", c.loss.lambda2);
    if (auto v = loss.raw("alpha")) {
        if (*v == "auto") {
            c.loss.alpha.reset();
        } else {
            double a = 0;
            const char* end = v->data() + v->size();
            auto [ptr, ec] = std::from_chars(v->data(), end, a);
            if (ec != std::errc{} || ptr != end) throw ValidationError(loss.where("alpha") + "expected auto or a number");
            c.loss.alpha = a;
        }
    }
    loss.flag("include_self_edges", c.include_self_edges);
    loss.finish();

    Section train = section(tree, "train");
    train.number("epochs", c.train.epochs);
    train.number("batch_size", c.train.batch_size);
    train.number("base_lr", c.train.base_lr);
    train.number("lr_decay", c.train.lr_decay);
    train.number("lr_decay_every", c.train.lr_decay_every);
    train.number("momentum", c.train.momentum);
    train.number("weight_decay", c.train.weight_decay);
    train.number("seed", c.train.seed);
    train.number("checkpoint_every", c.train.checkpoint_every);
    if (auto v = train.raw("out_dir")) c.train.out_dir = resolve(base_dir, *v);
    train.finish();

    c.validate();
    return c;
}

TrainConfig load_train_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_train_config(text.str(), path.parent_path());
}

std::string to_ini(const TrainConfig& c) {
    std::ostringstream o;
    const auto& n = c.network;
    o << "[network]\n"
      << "layer_points = " << join(n.layer_points) << "\n"
      << "k = " << join(n.k) << "\n"
      << "k_interp = " << n.k_interp << "\n"
      << "point_channels = " << join(n.point_channels) << "\n";
    if (!n.edge_channels.empty()) o << "edge_channels = " << join(n.edge_channels) << "\n";
    if (!n.group_size.empty()) o << "group_size = " << join(n.group_size) << "\n";
    o << "head_hidden = " << n.head_hidden << "\n"
      << "message_passing = " << message_passing_name(n.message_passing) << "\n"
      << "graph_mode = " << graph_mode_name(n.graph_mode) << "\n"
      << "edge_function = " << edge_function_name(n.edge_function) << "\n\n";

    o << "[loss]\n"
      << "lambda1 = " << real(c.loss.lambda1) << "\n"
      << "lambda2 = " << real(c.loss.lambda2) << "\n"
      << "alpha = " << (c.loss.alpha ? real(*c.loss.alpha) : std::string("auto")) << "\n"
      << "include_self_edges = " << (c.include_self_edges ? "true" : "false") << "\n\n";

    const auto& t = c.train;
    o << "[train]\n"
      << "epochs = " << t.epochs << "\n"
      << "batch_size = " << t.batch_size << "\n"
      << "base_lr = " << real(t.base_lr) << "\n"
      << "lr_decay = " << real(t.lr_decay) << "\n"
      << "lr_decay_every = " << t.lr_decay_every << "\n"
      << "momentum = " << real(t.momentum) << "\n"
      << "weight_decay = " << real(t.weight_decay) << "\n"
      << "seed = " << t.seed << "\n"
      << "checkpoint_every = " << t.checkpoint_every << "\n"
      << "out_dir = " << t.out_dir.string() << "\n\n";

    const auto& d = c.data;
    o << "[data]\n"
      << "source = " << data_source_name(d.source) << "\n"
      << "schema = " << schema_id(d.schema) << "\n"
      << "num_classes = " << d.num_classes << "\n";
    if (d.source == DataSource::synth) {
        o << "scene_spec = " << d.scene_spec.string() << "\n"
          << "train_scenes = " << d.train_scenes << "\n"
          << "test_scenes = " << d.test_scenes << "\n"
          << "scene_seed = " << d.scene_seed << "\n";
    } else {
        o << "train_files = " << join(d.train_files) << "\n";
        if (!d.test_files.empty()) o << "test_files = " << join(d.test_files) << "\n";
    }
    o << "block_size = " << real(d.block_size) << "\n"
      << "block_padding = " << real(d.block_padding) << "\n"
      << "eval_stride = " << real(d.eval_stride) << "\n"
      << "blocks_per_scene = " << d.blocks_per_scene << "\n";
    return o.str();
}

SceneSpec parse_scene_spec(const std::string& text) {
    const pt::ptree tree = read_ini(text);
    SceneSpec spec;
    bool have_scene = false;
    for (const auto& [name, child] : tree) {
        if (name == "scene") {
            have_scene = true;
            Section s(&child, name);
            s.number("num_classes", spec.num_classes);
            if (auto v = s.raw("schema")) spec.schema = parse_schema(*v);
            s.number("jitter", spec.jitter);
            s.number("color_noise", spec.color_noise);
            s.finish();
        } else if (name.starts_with("primitive.")) {
            Section s(&child, name);
            ScenePrimitive prim;
            if (auto v = s.raw("kind")) {
                if (*v == "box") prim.kind = PrimitiveKind::box;
                else if (*v == "plane") prim.kind = PrimitiveKind::plane;
                else throw ValidationError(s.where("kind") + "expected box or plane, got '" + *v + "'");
            }
            auto triple = [&s](const std::string& key, auto& out) {
                using V = std::remove_cvref_t<decltype(out[0])>;
                std::vector<V> v;
                s.list(key, v);
                if (v.empty()) return;
                if (v.size() != 3) throw ValidationError(s.where(key) + "expected three values");
                for (int a = 0; a < 3; ++a) out[a] = v[a];
            };
            triple("min", prim.min);
            triple("max", prim.max);
            triple("color", prim.color);
            s.number("label", prim.label);
            s.number("points", prim.points);
            s.finish();
            spec.primitives.push_back(prim);
        } else {
            throw ValidationError("scene spec: unknown section [" + name + "]");
        }
    }
    if (!have_scene) throw ValidationError("scene spec: missing [scene] section");
    if (spec.primitives.empty()) throw ValidationError("scene spec lists no primitives");
    return spec;
}

SceneSpec load_scene_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scene spec " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene_spec(text.str());
}

}  // namespace pointedge
