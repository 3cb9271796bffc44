#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pointedge/errors.hpp"
#include "pointedge/pipeline.hpp"

namespace pointedge {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + path.string());
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

std::string losses_csv(const RunRecord& record) {
    std::string out = "epoch,lr,point_loss,edge_loss,total_loss\n";
    for (const auto& e : record.epochs) {
        out += std::to_string(e.epoch) + "," + fmt("%.17g", e.lr) + "," + fmt("%.17g", e.point_loss) + "," +
               fmt("%.17g", e.edge_loss) + "," + fmt("%.17g", e.total_loss) + "\n";
    }
    return out;
}

std::string losses_svg(const RunRecord& record) {
    constexpr double width = 640, height = 400, margin = 50;
    double hi = 0.0;
    for (const auto& e : record.epochs) hi = std::max({hi, e.point_loss, e.edge_loss, e.total_loss});
    if (!(hi > 0.0) || !std::isfinite(hi)) hi = 1.0;
    const double last = std::max(1.0, static_cast<double>(record.epochs.size() - 1));
    auto x = [&](std::size_t i) { return margin + (width - 2 * margin) * static_cast<double>(i) / last; };
    auto y = [&](double v) { return height - margin - (height - 2 * margin) * v / hi; };

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    out += "  <line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n";
    out += "  <line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
    out += "  <text x=\"320\" y=\"385\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    out += "  <text x=\"45\" y=\"55\" text-anchor=\"end\" font-size=\"12\">" + fmt("%.3g", hi) + "</text>\n";
    out += "  <text x=\"45\" y=\"350\" text-anchor=\"end\" font-size=\"12\">0</text>\n";
    struct Series {
        const char* name;
        const char* color;
        double EpochRecord::*field;
    };
    const Series series[] = {{"point", "#1f77b4", &EpochRecord::point_loss},
                             {"edge", "#d62728", &EpochRecord::edge_loss},
                             {"total", "#2ca02c", &EpochRecord::total_loss}};
    double legend_y = 20;
    for (const auto& s : series) {
        out += "  <polyline fill=\"none\" stroke=\"" + std::string(s.color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < record.epochs.size(); ++i) {
            if (i) out += ' ';
            out += fmt("%.2f", x(i)) + "," + fmt("%.2f", y(record.epochs[i].*s.field));
        }
        out += "\"/>\n";
        out += "  <text x=\"560\" y=\"" + fmt("%.0f", legend_y) + "\" font-size=\"12\" fill=\"" + s.color + "\">" +
               s.name + "</text>\n";
        legend_y += 14;
    }
    out += "</svg>\n";
    return out;
}

void export_report(const RunRecord& record, const fs::path& out_dir) {
    if (record.epochs.empty()) throw ValidationError("export_report: run record has no epochs");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ValidationError("cannot create " + out_dir.string() + ": " + ec.message());

    write_file(out_dir / "losses.csv", losses_csv(record));
    write_file(out_dir / "losses.svg", losses_svg(record));
    write_file(out_dir / "config.ini", record.config_snapshot);

    std::string metrics = "epochs " + std::to_string(record.epochs.size()) + "\n" +
                          "final_total_loss " + fmt("%.4f", record.epochs.back().total_loss) + "\n" +
                          "wall_seconds " + fmt("%.1f", record.wall_seconds) + "\n";
    for (const auto& p : record.checkpoints) metrics += "checkpoint " + p.string() + "\n";
    for (const auto& e : record.evals) {
        metrics += "\n[" + e.split + "]\n";
        if (e.confusion.total() > 0) metrics += format_metrics(e.metrics);
        if (e.edge_total > 0) metrics += "edge_accuracy " + fmt("%.4f", e.edge_accuracy()) + "\n";
    }
    write_file(out_dir / "metrics.txt", metrics);
}

}  // namespace pointedge
