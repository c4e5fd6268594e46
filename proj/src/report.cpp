#include "moedrive/report.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "moedrive/dataset.hpp"
#include "moedrive/errors.hpp"

namespace moedrive {

std::string RunManifest::hash() const {
    std::string canon = command + "|" + config_hash + "|" + dataset_hash + "|" +
                        checkpoint_hash + "|" + std::to_string(seed);
    return hash_bytes(canon);
}

std::string iso8601_now() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path);
    out << "{\n"
        << "  \"command\": \"" << m.command << "\",\n"
        << "  \"config_hash\": \"" << m.config_hash << "\",\n"
        << "  \"dataset_manifest_hash\": \"" << m.dataset_hash << "\",\n"
        << "  \"checkpoint_hash\": \"" << m.checkpoint_hash << "\",\n"
        << "  \"seed\": " << m.seed << ",\n"
        << "  \"manifest_hash\": \"" << m.hash() << "\",\n"
        << "  \"started_at\": \"" << m.started_at << "\",\n"
        << "  \"finished_at\": \"" << m.finished_at << "\"\n"
        << "}\n";
}

std::string fmt_num(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path);
    out << "# manifest=" << manifest_hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

void write_line_svg(const std::string& path, const std::string& manifest_hash,
                    const std::string& title, const std::string& x_label,
                    const std::vector<double>& xs,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const double W = 640, H = 400, ml = 60, mr = 20, mt = 40, mb = 50;
    double xmin = xs.front(), xmax = xs.back();
    double ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            if (first) {
                ymin = ymax = y;
                first = false;
            }
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (ymax - ymin < 1e-9) {
        ymax += 1;
        ymin -= 1;
    }
    ymin -= 0.05 * (ymax - ymin);
    ymax += 0.05 * (ymax - ymin);
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n<!-- manifest=" << manifest_hash << " -->\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (double x : xs) {
        out << "<line x1=\"" << X(x) << "\" y1=\"" << H - mb << "\" x2=\"" << X(x) << "\" y2=\""
            << H - mb + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << X(x) << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt_num(x) << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        double y = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << ml - 6 << "\" y=\"" << Y(y) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << fmt_num(y) << "</text>\n";
    }
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";

    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
    int si = 0;
    for (const auto& [name, ys] : series) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[si % 3] << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) out << X(xs[i]) << "," << Y(ys[i]) << " ";
        out << "\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            out << "<circle cx=\"" << X(xs[i]) << "\" cy=\"" << Y(ys[i]) << "\" r=\"3\" fill=\""
                << colors[si % 3] << "\"/>\n";
        out << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 * (si + 1)
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[si % 3] << "\">" << name
            << "</text>\n";
        ++si;
    }
    out << "</svg>\n";
}

} // namespace moedrive
