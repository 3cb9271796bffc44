#include <algorithm>
#include <random>

#include "pointedge/errors.hpp"
#include "pointedge/geom.hpp"

namespace pointedge {

namespace {

struct Face {
    int fixed_axis;
    double fixed_value;
    double area;
};

// Axis-aligned rectangle faces of a primitive, in a fixed order.
std::vector<Face> faces_of(const ScenePrimitive& prim) {
    const Vec3 ext{prim.max[0] - prim.min[0], prim.max[1] - prim.min[1], prim.max[2] - prim.min[2]};
    std::vector<Face> faces;
    if (prim.kind == PrimitiveKind::plane) {
        const int flat = ext[0] == 0 ? 0 : (ext[1] == 0 ? 1 : 2);
        faces.push_back({flat, prim.min[flat], ext[(flat + 1) % 3] * ext[(flat + 2) % 3]});
        return faces;
    }
    for (int a = 0; a < 3; ++a) {
        const double area = ext[(a + 1) % 3] * ext[(a + 2) % 3];
        faces.push_back({a, prim.min[a], area});
        faces.push_back({a, prim.max[a], area});
    }
    return faces;
}

void validate_primitive(const ScenePrimitive& prim, int num_classes, std::size_t index) {
    const std::string where = "scene primitive " + std::to_string(index) + ": ";
    if (prim.label < 0 || prim.label >= num_classes) throw ValidationError(where + "class outside [0, num_classes)");
    int flat = 0;
    for (int a = 0; a < 3; ++a) {
        if (prim.max[a] < prim.min[a]) throw ValidationError(where + "max below min");
        if (prim.max[a] == prim.min[a]) ++flat;
        if (prim.color[a] < 0 || prim.color[a] > 255) throw ValidationError(where + "color outside 0..255");
    }
    if (prim.kind == PrimitiveKind::plane && flat != 1) {
        throw ValidationError(where + "a plane needs exactly one zero-extent axis");
    }
    if (prim.kind == PrimitiveKind::box && flat > 1) {
        throw ValidationError(where + "a box needs at most one zero-extent axis");
    }
}

}  // namespace

PointCloud synth_scene(const SceneSpec& spec, std::uint64_t rng_seed) {
    if (spec.primitives.empty()) throw ValidationError("scene spec lists no primitives");
    if (spec.num_classes <= 0) throw ValidationError("scene spec: num_classes must be positive");
    std::size_t total = 0;
    for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        validate_primitive(spec.primitives[i], spec.num_classes, i);
        total += spec.primitives[i].points;
    }
    if (total == 0) throw ValidationError("scene spec: total point budget is zero");

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> noise(-spec.color_noise, spec.color_noise);

    Positions positions;
    std::vector<Vec3> rgb;
    std::vector<int> labels;
    positions.reserve(total);
    rgb.reserve(total);
    labels.reserve(total);

    for (const auto& prim : spec.primitives) {
        const double dx = spec.jitter > 0 ? spec.jitter * (2.0 * unit(rng) - 1.0) : 0.0;
        const double dy = spec.jitter > 0 ? spec.jitter * (2.0 * unit(rng) - 1.0) : 0.0;
        const auto faces = faces_of(prim);
        std::vector<double> areas;
        for (const auto& f : faces) areas.push_back(f.area);
        const bool degenerate = std::all_of(areas.begin(), areas.end(), [](double a) { return a <= 0; });
        std::discrete_distribution<std::size_t> pick_face(areas.begin(), areas.end());

        for (std::size_t n = 0; n < prim.points; ++n) {
            const Face& f = degenerate ? faces.front() : faces[pick_face(rng)];
            Vec3 p{};
            for (int a = 0; a < 3; ++a) {
                p[a] = a == f.fixed_axis ? f.fixed_value : prim.min[a] + unit(rng) * (prim.max[a] - prim.min[a]);
            }
            p[0] += dx;
            p[1] += dy;
            Vec3 c{};
            for (int a = 0; a < 3; ++a) {
                const int v = spec.color_noise > 0 ? prim.color[a] + noise(rng) : prim.color[a];
                c[a] = static_cast<double>(std::clamp(v, 0, 255)) / 255.0;
            }
            positions.push_back(p);
            rgb.push_back(c);
            labels.push_back(prim.label);
        }
    }

    PointCloud cloud;
    cloud.features = assemble_features(positions, rgb, spec.schema);
    cloud.positions = std::move(positions);
    cloud.labels = std::move(labels);
    cloud.num_classes = spec.num_classes;
    cloud.schema = spec.schema;
    cloud.validate();
    return cloud;
}

}  // namespace pointedge
