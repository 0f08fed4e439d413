#pragma once

#include <string>
#include <vector>

#include "qudsim/alignment.hpp"
#include "qudsim/eval_harness.hpp"

namespace qudsim::reports {

// CSV grid with a header row; empty cells stay empty fields, distinct from 0.
std::string heatmap_csv(const alignment::HeatmapTable& table);

nlohmann::json heatmap_json(const std::string& metric_id, const alignment::HeatmapTable& table);

// Plain color grid with numeric cell labels; byte-stable for fixed input.
std::string heatmap_svg(const alignment::HeatmapTable& table);

std::string eval_csv(const std::vector<eval::EvalReport>& reports);
nlohmann::json eval_json(const std::vector<eval::EvalReport>& reports);

}  // namespace qudsim::reports
