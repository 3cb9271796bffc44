#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "pointedge/errors.hpp"
#include "pointedge/geom.hpp"

namespace pointedge {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t b = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
    return out;
}

double to_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError("malformed number '" + std::string(tok) + "'", line);
    }
    return v;
}

long to_int(std::string_view tok, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("malformed integer '" + std::string(tok) + "'", line);
    }
    return v;
}

}  // namespace

PointCloud parse_point_cloud(std::string_view text, Schema schema, int num_classes) {
    if (num_classes <= 0) throw ValidationError("num_classes must be positive");
    Positions positions;
    std::vector<Vec3> rgb;
    std::vector<int> labels;
    std::optional<bool> labeled;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto toks = split_ws(line);
        if (toks.empty() || toks.front().front() == '#') continue;
        if (toks.size() != 6 && toks.size() != 7) {
            throw ParseError("expected 'x y z r g b [label]', got " + std::to_string(toks.size()) + " fields",
                             line_no);
        }
        const bool has_label = toks.size() == 7;
        if (labeled && *labeled != has_label) throw ParseError("labels present on some lines only", line_no);
        labeled = has_label;

        Vec3 p{to_double(toks[0], line_no), to_double(toks[1], line_no), to_double(toks[2], line_no)};
        Vec3 c{};
        for (int a = 0; a < 3; ++a) {
            const long v = to_int(toks[3 + a], line_no);
            if (v < 0 || v > 255) throw ParseError("color channel outside 0..255", line_no);
            c[a] = static_cast<double>(v) / 255.0;
        }
        positions.push_back(p);
        rgb.push_back(c);
        if (has_label) {
            const long l = to_int(toks[6], line_no);
            if (l < 0) throw ParseError("negative label", line_no);
            if (l >= num_classes) {
                throw ValidationError("line " + std::to_string(line_no) + ": label " + std::to_string(l) +
                                      " outside [0, " + std::to_string(num_classes) + ")");
            }
            labels.push_back(static_cast<int>(l));
        }
    }
    if (positions.empty()) throw ParseError("no points");

    PointCloud cloud;
    cloud.features = assemble_features(positions, rgb, schema);
    cloud.positions = std::move(positions);
    cloud.labels = std::move(labels);
    cloud.num_classes = num_classes;
    cloud.schema = schema;
    cloud.validate();
    return cloud;
}

PointCloud load_point_cloud(const std::filesystem::path& path, Schema schema, int num_classes) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open point cloud file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_point_cloud(ss.str(), schema, num_classes);
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write point cloud " + path.string());
    f << "# x y z r g b" << (cloud.has_labels() ? " label" : "") << '\n';
    f << std::setprecision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions[i];
        f << p[0] << ' ' << p[1] << ' ' << p[2];
        for (int a = 0; a < 3; ++a) f << ' ' << std::lround(cloud.features.at(i, 3 + a) * 255.0);
        if (cloud.has_labels()) f << ' ' << cloud.labels[i];
        f << '\n';
    }
    if (!f) throw std::runtime_error("short write to " + path.string());
}

}  // namespace pointedge
