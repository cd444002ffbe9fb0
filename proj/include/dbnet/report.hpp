#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dbnet/dbn.hpp"
#include "dbnet/evaluate.hpp"

namespace dbnet {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

// one chart panel: axes 0..max_hours horizontally, 0..1 vertically, with one
// polyline per classifier
inline void svg_panel(std::ostream& out, double x0, const std::string& title,
                      const EvaluationReport& report, bool g_mean_panel, double max_hours) {
    const double w = 360, h = 260, y0 = 40;
    out << "  <g transform=\"translate(" << x0 << "," << y0 << ")\">\n";
    out << "    <text x=\"" << w / 2 << "\" y=\"-16\" text-anchor=\"middle\">" << title
        << "</text>\n";
    out << "    <rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double ty = h - h * tick / 5.0;
        out << "    <text x=\"-8\" y=\"" << ty + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
            << tick / 5.0 << "</text>\n";
        out << "    <line x1=\"0\" y1=\"" << ty << "\" x2=\"" << w << "\" y2=\"" << ty
            << "\" stroke=\"#ddd\"/>\n";
    }
    for (double hour = 0; hour <= max_hours + 1e-9; hour += max_hours / 5.0) {
        const double tx = w * hour / max_hours;
        out << "    <text x=\"" << tx << "\" y=\"" << h + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << hour << "</text>\n";
    }
    out << "    <text x=\"" << w / 2 << "\" y=\"" << h + 32
        << "\" text-anchor=\"middle\" font-size=\"11\">hours ahead</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::size_t color = 0;
    for (const auto& clf : report.classifiers) {
        out << "    <polyline fill=\"none\" stroke=\"" << colors[color++ % 4]
            << "\" stroke-width=\"1.5\" data-series=\"" << clf.name << "\" points=\"";
        for (const auto& r : clf.horizons) {
            const double value = g_mean_panel ? r.scores.g_mean : r.scores.accuracy;
            out << w * r.horizon_hours / max_hours << "," << h - h * value << " ";
        }
        out << "\"/>\n";
    }
    out << "  </g>\n";
}

}  // namespace detail

inline void write_metrics_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "classifier,horizon_steps,horizon_hours,tp,fp,tn,fn,accuracy,g_mean\n";
    for (const auto& clf : report.classifiers)
        for (const auto& r : clf.horizons)
            out << clf.name << ',' << r.horizon_steps << ',' << detail::format_double(r.horizon_hours)
                << ',' << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.tn << ','
                << r.confusion.fn << ',' << detail::format_double(r.scores.accuracy) << ','
                << detail::format_double(r.scores.g_mean) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

inline void write_horizon_svg(const EvaluationReport& report, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    double max_hours = 1.0;
    for (const auto& clf : report.classifiers)
        for (const auto& r : clf.horizons) max_hours = std::max(max_hours, r.horizon_hours);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"360\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    detail::svg_panel(out, 50, "accuracy", report, false, max_hours);
    detail::svg_panel(out, 500, "g-mean", report, true, max_hours);
    out << "</svg>\n";
    if (!out) throw DataError("failed writing " + path.string());
}

inline void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir.string());

    {
        auto out = detail::open_out(out_dir / "report.json");
        out << report.to_json().dump(2) << '\n';
        if (!out) throw DataError("failed writing " + (out_dir / "report.json").string());
    }
    write_metrics_csv(report, out_dir / "metrics.csv");
    write_horizon_svg(report, out_dir / "horizon.svg");
    {
        auto out = detail::open_out(out_dir / "graph.dot");
        out << export_dot(report.dbn_graph);
        if (!out) throw DataError("failed writing " + (out_dir / "graph.dot").string());
    }
}

}  // namespace dbnet
