#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pointedge/tensor.hpp"

namespace pointedge {

using Vec3 = std::array<double, 3>;
using Positions = std::vector<Vec3>;

double distance(const Vec3& a, const Vec3& b);
double squared_distance(const Vec3& a, const Vec3& b);

/// Per-point input feature layouts.
///   scannet-6d: x y z r g b
///   s3dis-9d:   x y z r g b nx ny nz  (n = position normalized to the room extent)
enum class Schema { scannet6, s3dis9 };

Schema parse_schema(std::string_view id);
std::string_view schema_id(Schema schema);
std::size_t schema_channels(Schema schema);

struct PointCloud {
    Positions positions;
    Tensor features;          // N x D
    std::vector<int> labels;  // empty when unlabeled
    int num_classes = 1;
    Schema schema = Schema::scannet6;

    std::size_t size() const noexcept { return positions.size(); }
    bool has_labels() const noexcept { return !labels.empty(); }
    /// Throws ValidationError when row counts disagree or labels are out of range.
    void validate() const;
    /// Rows `indices` of this cloud, in that order.
    PointCloud subset(const std::vector<std::size_t>& indices) const;
};

/// Builds features for `positions` + 0..1 RGB according to the schema, normalizing
/// the room-position channels by the bounding box of `positions`.
Tensor assemble_features(const Positions& positions, const std::vector<Vec3>& rgb, Schema schema);

/// k nearest references per query, rows sorted by (distance, reference index).
struct NeighborTable {
    std::size_t query_count = 0;
    std::size_t k = 0;
    std::vector<std::size_t> indices;  // query_count x k
    std::vector<double> distances;     // query_count x k, Euclidean

    std::size_t index(std::size_t q, std::size_t j) const { return indices[q * k + j]; }
    double dist(std::size_t q, std::size_t j) const { return distances[q * k + j]; }
};

/// Exact Euclidean kNN by exhaustive search. Ties go to the lower reference index.
NeighborTable knn(const Positions& query, const Positions& reference, std::size_t k);

/// Greedy max-min farthest point sampling. First pick is `start_index`; ties go
/// to the lowest index.
std::vector<std::size_t> farthest_point_sample(const Positions& points, std::size_t m, std::size_t start_index = 0);
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m, std::size_t start_index = 0);

// --- interchange format -----------------------------------------------------

/// ASCII, one point per line: `x y z r g b [label]`; `#` lines and blank lines skipped.
PointCloud load_point_cloud(const std::filesystem::path& path, Schema schema, int num_classes);
PointCloud parse_point_cloud(std::string_view text, Schema schema, int num_classes);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

// --- synthetic scenes -------------------------------------------------------

enum class PrimitiveKind { box, plane };

struct ScenePrimitive {
    PrimitiveKind kind = PrimitiveKind::box;
    Vec3 min{0, 0, 0};
    Vec3 max{1, 1, 1};
    int label = 0;
    std::size_t points = 0;
    std::array<int, 3> color{128, 128, 128};
};

struct SceneSpec {
    std::vector<ScenePrimitive> primitives;
    int num_classes = 1;
    Schema schema = Schema::scannet6;
    /// Each primitive is shifted by a uniform offset in [-jitter, jitter] along x and y.
    double jitter = 0.0;
    /// Per-channel uniform integer color noise amplitude.
    int color_noise = 0;
};

/// Samples points uniformly on primitive surfaces (boxes: all six faces,
/// area-weighted; planes: the flat rectangle). Deterministic for a seed.
PointCloud synth_scene(const SceneSpec& spec, std::uint64_t rng_seed);

// --- blocks -----------------------------------------------------------------

struct BlockSample {
    std::vector<std::size_t> indices;  // rows of the source cloud
    double center_x = 0.0;
    double center_y = 0.0;
};

/// Square xy block of side `block_size` grown by `padding`, centered on a
/// random point of the cloud. Draws `n_points` rows: without replacement when
/// enough points fall inside, with replacement otherwise.
BlockSample sample_block_indices(const PointCloud& cloud, double block_size, double padding, std::size_t n_points,
                                 std::uint64_t rng_seed);

/// Materializes a block. Feature xyz channels become block-centered in x/y;
/// the s3dis room-position channels are recomputed against the source cloud.
PointCloud extract_block(const PointCloud& cloud, const BlockSample& block);

PointCloud sample_block(const PointCloud& cloud, double block_size, double padding, std::size_t n_points,
                        std::uint64_t rng_seed);

/// Covers the cloud's xy extent with a grid of blocks (origin at the minimum
/// corner, given stride). Each tile lists every point within the block grown
/// by padding; empty tiles are dropped. Every point lands in at least one
/// tile when stride <= block_size.
std::vector<BlockSample> tile_cloud(const PointCloud& cloud, double block_size, double stride, double padding);

}  // namespace pointedge
