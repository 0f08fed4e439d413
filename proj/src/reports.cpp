#include "qudsim/reports.hpp"

#include <cmath>
#include <cstdio>

namespace qudsim::reports {

using nlohmann::json;

namespace {

std::string fmt(double value, const char* pattern = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, value);
    return buf;
}

}  // namespace

std::string heatmap_csv(const alignment::HeatmapTable& table) {
    std::string out = "source_group";
    for (const auto& group : table.groups) out += "," + group;
    out += "\n";
    for (std::size_t r = 0; r < table.groups.size(); ++r) {
        out += table.groups[r];
        for (std::size_t c = 0; c < table.groups.size(); ++c) {
            out += ",";
            if (table.cells[r][c]) out += fmt(*table.cells[r][c]);
        }
        out += "\n";
    }
    return out;
}

json heatmap_json(const std::string& metric_id, const alignment::HeatmapTable& table) {
    json cells = json::array();
    for (const auto& row : table.cells) {
        json jrow = json::array();
        for (const auto& cell : row) {
            if (cell)
                jrow.push_back(*cell);
            else
                jrow.push_back(nullptr);
        }
        cells.push_back(std::move(jrow));
    }
    return {{"metric_id", metric_id}, {"groups", table.groups}, {"cells", cells}};
}

std::string heatmap_svg(const alignment::HeatmapTable& table) {
    const int cell = 72;
    const int left = 140;
    const int top = 48;
    const int n = static_cast<int>(table.groups.size());
    const int width = left + n * cell + 8;
    const int height = top + n * cell + 8;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    auto color = [](double v) {
        // white -> deep purple ramp
        auto channel = [&](int from, int to) {
            return static_cast<int>(std::lround(from + (to - from) * v));
        };
        char buf[8];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", channel(0xf7, 0x54), channel(0xf4, 0x27),
                      channel(0xf9, 0x8c));
        return std::string(buf);
    };

    for (int c = 0; c < n; ++c)
        svg += "<text x=\"" + std::to_string(left + c * cell + cell / 2) + "\" y=\"" +
               std::to_string(top - 12) +
               "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
               table.groups[static_cast<std::size_t>(c)] + "</text>\n";
    for (int r = 0; r < n; ++r)
        svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" +
               std::to_string(top + r * cell + cell / 2 + 4) +
               "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">" +
               table.groups[static_cast<std::size_t>(r)] + "</text>\n";

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto& value = table.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            std::string fill = value ? color(*value) : "#dddddd";
            int x = left + c * cell;
            int y = top + r * cell;
            svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
                   "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) +
                   "\" fill=\"" + fill + "\" stroke=\"#888888\"/>\n";
            if (value) {
                std::string label_color = *value > 0.55 ? "#ffffff" : "#222222";
                svg += "<text x=\"" + std::to_string(x + cell / 2) + "\" y=\"" +
                       std::to_string(y + cell / 2 + 4) +
                       "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" "
                       "fill=\"" +
                       label_color + "\">" + fmt(*value, "%.3f") + "</text>\n";
            }
        }
    }
    svg += "</svg>\n";
    return svg;
}

std::string eval_csv(const std::vector<eval::EvalReport>& reports) {
    std::string out = "metric_id,domain,precision,recall,f1,tp,fp,fn,pairs\n";
    for (const auto& r : reports) {
        out += r.metric_id + "," + r.domain + "," + fmt(r.precision) + "," + fmt(r.recall) + "," +
               fmt(r.f1) + "," + std::to_string(r.tp) + "," + std::to_string(r.fp) + "," +
               std::to_string(r.fn) + "," + std::to_string(r.pair_count) + "\n";
    }
    return out;
}

json eval_json(const std::vector<eval::EvalReport>& reports) {
    json out = json::array();
    for (const auto& r : reports)
        out.push_back({{"metric_id", r.metric_id},
                       {"domain", r.domain},
                       {"precision", r.precision},
                       {"recall", r.recall},
                       {"f1", r.f1},
                       {"tp", r.tp},
                       {"fp", r.fp},
                       {"fn", r.fn},
                       {"pairs", r.pair_count}});
    return out;
}

}  // namespace qudsim::reports
