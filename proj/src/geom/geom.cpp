#include "pointedge/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pointedge/errors.hpp"

namespace pointedge {

double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

double distance(const Vec3& a, const Vec3& b) { return std::sqrt(squared_distance(a, b)); }

Schema parse_schema(std::string_view id) {
    if (id == "scannet-6d") return Schema::scannet6;
    if (id == "s3dis-9d") return Schema::s3dis9;
    throw ValidationError("unknown dataset schema '" + std::string(id) + "' (expected scannet-6d or s3dis-9d)");
}

std::string_view schema_id(Schema schema) { return schema == Schema::s3dis9 ? "s3dis-9d" : "scannet-6d"; }

std::size_t schema_channels(Schema schema) { return schema == Schema::s3dis9 ? 9 : 6; }

void PointCloud::validate() const {
    if (num_classes <= 0) throw ValidationError("point cloud: num_classes must be positive");
    if (features.rank() != 2 || features.rows() != positions.size()) {
        throw ValidationError("point cloud: " + std::to_string(positions.size()) + " positions but features " +
                              features.shape_string());
    }
    if (features.cols() != schema_channels(schema)) {
        throw ValidationError("point cloud: schema " + std::string(schema_id(schema)) + " needs " +
                              std::to_string(schema_channels(schema)) + " feature channels, got " +
                              std::to_string(features.cols()));
    }
    if (!labels.empty() && labels.size() != positions.size()) {
        throw ValidationError("point cloud: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(positions.size()) + " points");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw ValidationError("point cloud: label " + std::to_string(labels[i]) + " at point " +
                                  std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.num_classes = num_classes;
    out.schema = schema;
    out.features = Tensor::zeros(indices.size(), features.cols());
    out.positions.reserve(indices.size());
    if (has_labels()) out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        out.positions.push_back(positions.at(src));
        std::copy_n(features.row(src).data(), features.cols(), out.features.row(i).data());
        if (has_labels()) out.labels.push_back(labels[src]);
    }
    return out;
}

Tensor assemble_features(const Positions& positions, const std::vector<Vec3>& rgb, Schema schema) {
    const std::size_t d = schema_channels(schema);
    Tensor f = Tensor::zeros(positions.size(), d);
    Vec3 lo{0, 0, 0}, hi{0, 0, 0};
    if (!positions.empty()) {
        lo = hi = positions.front();
        for (const auto& p : positions) {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        auto row = f.row(i);
        for (int a = 0; a < 3; ++a) {
            row[a] = positions[i][a];
            row[3 + a] = rgb[i][a];
        }
        if (schema == Schema::s3dis9) {
            for (int a = 0; a < 3; ++a) {
                const double extent = hi[a] - lo[a];
                row[6 + a] = extent > 0 ? (positions[i][a] - lo[a]) / extent : 0.0;
            }
        }
    }
    return f;
}

NeighborTable knn(const Positions& query, const Positions& reference, std::size_t k) {
    if (k == 0) throw ValidationError("knn: k must be positive");
    if (k > reference.size()) {
        throw ValidationError("knn: k = " + std::to_string(k) + " exceeds reference size " +
                              std::to_string(reference.size()));
    }
    NeighborTable table;
    table.query_count = query.size();
    table.k = k;
    table.indices.resize(query.size() * k);
    table.distances.resize(query.size() * k);

    std::vector<std::pair<double, std::size_t>> cand(reference.size());
    for (std::size_t q = 0; q < query.size(); ++q) {
        for (std::size_t r = 0; r < reference.size(); ++r) cand[r] = {squared_distance(query[q], reference[r]), r};
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t j = 0; j < k; ++j) {
            table.indices[q * k + j] = cand[j].second;
            table.distances[q * k + j] = std::sqrt(cand[j].first);
        }
    }
    return table;
}

std::vector<std::size_t> farthest_point_sample(const Positions& points, std::size_t m, std::size_t start_index) {
    const std::size_t n = points.size();
    if (m == 0 || m > n) {
        throw ValidationError("farthest_point_sample: m = " + std::to_string(m) + " must lie in [1, " +
                              std::to_string(n) + "]");
    }
    if (start_index >= n) throw ValidationError("farthest_point_sample: start index out of range");

    std::vector<std::size_t> picks;
    picks.reserve(m);
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    std::size_t current = start_index;
    for (std::size_t t = 0; t < m; ++t) {
        picks.push_back(current);
        taken[current] = true;
        if (t + 1 == m) break;
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            min_d[i] = std::min(min_d[i], squared_distance(points[i], points[current]));
            if (min_d[i] > best_d) {
                best_d = min_d[i];
                best = i;
            }
        }
        current = best;
    }
    return picks;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m, std::size_t start_index) {
    return farthest_point_sample(cloud.positions, m, start_index);
}

BlockSample sample_block_indices(const PointCloud& cloud, double block_size, double padding, std::size_t n_points,
                                 std::uint64_t rng_seed) {
    if (cloud.size() == 0) throw ValidationError("sample_block: empty cloud");
    if (n_points == 0) throw ValidationError("sample_block: n_points must be at least 1");
    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<std::size_t> pick_point(0, cloud.size() - 1);
    const double half = 0.5 * block_size + padding;

    constexpr int max_attempts = 100;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const Vec3& c = cloud.positions[pick_point(rng)];
        BlockSample block;
        block.center_x = c[0];
        block.center_y = c[1];
        std::vector<std::size_t> inside;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto& p = cloud.positions[i];
            if (std::abs(p[0] - c[0]) <= half && std::abs(p[1] - c[1]) <= half) inside.push_back(i);
        }
        if (inside.empty()) continue;
        if (inside.size() >= n_points) {
            std::shuffle(inside.begin(), inside.end(), rng);
            inside.resize(n_points);
            block.indices = std::move(inside);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, inside.size() - 1);
            block.indices.resize(n_points);
            for (auto& idx : block.indices) idx = inside[pick(rng)];
        }
        return block;
    }
    throw ValidationError("sample_block: no non-empty block found in " + std::to_string(max_attempts) + " draws");
}

PointCloud extract_block(const PointCloud& cloud, const BlockSample& block) {
    PointCloud out = cloud.subset(block.indices);
    Vec3 lo = cloud.positions.front(), hi = lo;
    for (const auto& p : cloud.positions) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto row = out.features.row(i);
        const auto& p = out.positions[i];
        row[0] = p[0] - block.center_x;
        row[1] = p[1] - block.center_y;
        row[2] = p[2];
        if (cloud.schema == Schema::s3dis9) {
            for (int a = 0; a < 3; ++a) {
                const double extent = hi[a] - lo[a];
                row[6 + a] = extent > 0 ? (p[a] - lo[a]) / extent : 0.0;
            }
        }
    }
    return out;
}

PointCloud sample_block(const PointCloud& cloud, double block_size, double padding, std::size_t n_points,
                        std::uint64_t rng_seed) {
    return extract_block(cloud, sample_block_indices(cloud, block_size, padding, n_points, rng_seed));
}

std::vector<BlockSample> tile_cloud(const PointCloud& cloud, double block_size, double stride, double padding) {
    if (cloud.size() == 0) throw ValidationError("tile_cloud: empty cloud");
    if (!(block_size > 0) || !(stride > 0)) throw ValidationError("tile_cloud: block size and stride must be positive");
    if (stride > block_size) throw ValidationError("tile_cloud: stride larger than block size leaves gaps");
    double x0 = cloud.positions.front()[0], x1 = x0, y0 = cloud.positions.front()[1], y1 = y0;
    for (const auto& p : cloud.positions) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    const auto steps = [&](double extent) {
        return static_cast<std::size_t>(std::max(0.0, std::ceil((extent - block_size) / stride))) + 1;
    };
    const std::size_t nx = steps(x1 - x0), ny = steps(y1 - y0);
    const double half = 0.5 * block_size + padding;

    std::vector<BlockSample> tiles;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            BlockSample tile;
            tile.center_x = x0 + static_cast<double>(ix) * stride + 0.5 * block_size;
            tile.center_y = y0 + static_cast<double>(iy) * stride + 0.5 * block_size;
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const auto& p = cloud.positions[i];
                if (std::abs(p[0] - tile.center_x) <= half && std::abs(p[1] - tile.center_y) <= half) {
                    tile.indices.push_back(i);
                }
            }
            if (!tile.indices.empty()) tiles.push_back(std::move(tile));
        }
    }
    return tiles;
}

}  // namespace pointedge
