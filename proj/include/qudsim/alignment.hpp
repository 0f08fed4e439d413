#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qudsim/corpus.hpp"
#include "qudsim/scoring.hpp"

namespace qudsim::alignment {

struct ThresholdConfig {
    std::string metric_id;
    double tau = 0.0;
    struct Calibration {
        std::uint64_t seed = 0;
        double dev_fraction = 0.0;
        double achieved_f1 = 0.0;
        friend bool operator==(const Calibration&, const Calibration&) = default;
    };
    // Absent when the threshold is a shipped default rather than calibrated.
    std::optional<Calibration> calibration;
    bool paper_default = false;
    friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

struct AlignmentSet {
    std::string pair_id;
    std::string metric_id;
    double tau = 0.0;
    std::set<std::pair<int, int>> aligned;  // 1-based (source segment, target segment)
    friend bool operator==(const AlignmentSet&, const AlignmentSet&) = default;
};

// aligned = {(i,j) : matrix[i][j] > tau}, strict inequality. With
// `require_both_directions` the directional components are thresholded
// separately instead of the harmonic-mean score.
AlignmentSet threshold_align(const scoring::SimilarityMatrix& matrix, double tau,
                             bool require_both_directions = false);

// One scored pair with its gold labels, as consumed by calibration.
struct CalibrationEntry {
    const scoring::SimilarityMatrix* matrix = nullptr;
    const corpus::GoldAlignment* gold = nullptr;
};

// Samples a dev split of pairs with a seeded shuffle, scans every distinct
// dev score (plus 0) as a candidate tau, and returns the smallest tau whose
// micro F1 over the dev pairs is maximal.
ThresholdConfig calibrate_threshold(const std::vector<CalibrationEntry>& entries,
                                    double dev_fraction, std::uint64_t seed);

// Harmonic mean of the fraction of aligned source segments and the fraction
// of aligned target segments; 0 when nothing aligns.
double document_similarity(const AlignmentSet& alignment, int source_segment_count,
                           int target_segment_count);

struct TemplateRun {
    std::string pair_id;
    int source_start = 0;
    int target_start = 0;
    int length = 0;  // >= requested n
    friend bool operator==(const TemplateRun&, const TemplateRun&) = default;
};

struct TemplateResult {
    std::vector<TemplateRun> runs;  // maximal diagonal runs of length >= n
    int count = 0;                  // sliding windows: a run of length L adds L-n+1
};

// Counts diagonal chains of n consecutive alignments. Requires n >= 2.
TemplateResult extract_templates(const AlignmentSet& alignment, int n);

// ---------------------------------------------------------------------------
// Heatmap aggregation
// ---------------------------------------------------------------------------

struct HeatmapEntry {
    std::string source_group;
    std::string target_group;
    double value = 0.0;  // typically a document_similarity
};

struct HeatmapTable {
    std::vector<std::string> groups;  // row and column order
    // cells[r][c] = mean value over entries in (groups[r] -> groups[c]);
    // nullopt marks an empty cell, which is distinct from 0.
    std::vector<std::vector<std::optional<double>>> cells;
};

HeatmapTable heatmap_table(const std::vector<HeatmapEntry>& entries,
                           const std::vector<std::string>& group_order = {});

// ---------------------------------------------------------------------------
// Threshold defaults and persistence
// ---------------------------------------------------------------------------

// Shipped per-metric defaults (judge thresholds normalized from the 0-100
// scale). Mirrored by config/thresholds.default.json.
std::map<std::string, ThresholdConfig> paper_default_thresholds();

std::map<std::string, ThresholdConfig> load_thresholds(const std::filesystem::path& path);
nlohmann::json to_json(const ThresholdConfig& config);
ThresholdConfig threshold_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AlignmentSet& alignment);
AlignmentSet alignment_from_json(const nlohmann::json& j);

}  // namespace qudsim::alignment
