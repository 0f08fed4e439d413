#include "qudsim/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qudsim/eval_harness.hpp"
#include "qudsim/util.hpp"

namespace qudsim::alignment {

using nlohmann::json;

AlignmentSet threshold_align(const scoring::SimilarityMatrix& matrix, double tau,
                             bool require_both_directions) {
    if (tau < 0.0 || tau > 1.0)
        throw std::invalid_argument("threshold_align: tau must lie in [0,1]");
    if (require_both_directions && (!matrix.fwd || !matrix.bwd))
        throw std::invalid_argument(
            "threshold_align: per-direction thresholding needs directional components");

    AlignmentSet out;
    out.pair_id = matrix.pair_id;
    out.metric_id = matrix.metric_id;
    out.tau = tau;
    for (int i = 0; i < matrix.rows; ++i) {
        for (int j = 0; j < matrix.cols; ++j) {
            auto ii = static_cast<std::size_t>(i);
            auto jj = static_cast<std::size_t>(j);
            bool aligned = require_both_directions
                               ? (*matrix.fwd)[ii][jj] > tau && (*matrix.bwd)[ii][jj] > tau
                               : matrix.values[ii][jj] > tau;
            if (aligned) out.aligned.insert({i + 1, j + 1});
        }
    }
    return out;
}

ThresholdConfig calibrate_threshold(const std::vector<CalibrationEntry>& entries,
                                    double dev_fraction, std::uint64_t seed) {
    if (entries.empty())
        throw std::invalid_argument("calibrate_threshold: empty gold set");
    if (!(dev_fraction > 0.0) || dev_fraction > 1.0)
        throw std::invalid_argument("calibrate_threshold: dev_fraction must lie in (0,1]");
    for (const auto& e : entries)
        if (!e.matrix || !e.gold)
            throw std::invalid_argument("calibrate_threshold: entry missing matrix or gold");

    auto order = util::shuffled_indices(entries.size(), seed);
    std::size_t dev_count = static_cast<std::size_t>(
        std::llround(dev_fraction * static_cast<double>(entries.size())));
    dev_count = std::clamp<std::size_t>(dev_count, 1, entries.size());

    std::vector<const CalibrationEntry*> dev;
    for (std::size_t k = 0; k < dev_count; ++k) dev.push_back(&entries[order[k]]);

    std::set<double> candidates{0.0};
    for (const auto* e : dev)
        for (const auto& row : e->matrix->values)
            for (double v : row) candidates.insert(v);

    auto dev_f1 = [&](double tau) {
        long tp = 0, fp = 0, fn = 0;
        for (const auto* e : dev) {
            AlignmentSet predicted = threshold_align(*e->matrix, tau);
            for (const auto& cell : predicted.aligned)
                e->gold->aligned.count(cell) ? ++tp : ++fp;
            for (const auto& cell : e->gold->aligned)
                if (!predicted.aligned.count(cell)) ++fn;
        }
        return eval::prf_from_counts(tp, fp, fn).f1;
    };

    // Candidates ascend, so keeping strict improvements yields the smallest
    // tau among the maximizers (ties favor recall).
    double best_tau = 0.0;
    double best_f1 = -1.0;
    for (double tau : candidates) {
        double f1 = dev_f1(tau);
        if (f1 > best_f1 + 1e-15) {
            best_f1 = f1;
            best_tau = tau;
        }
    }

    ThresholdConfig config;
    config.metric_id = entries.front().matrix->metric_id;
    config.tau = best_tau;
    config.calibration = ThresholdConfig::Calibration{seed, dev_fraction, best_f1};
    config.paper_default = false;
    return config;
}

double document_similarity(const AlignmentSet& alignment, int source_segment_count,
                           int target_segment_count) {
    if (source_segment_count <= 0 || target_segment_count <= 0)
        throw std::invalid_argument("document_similarity: segment counts must be positive");
    std::set<int> sources, targets;
    for (const auto& [i, j] : alignment.aligned) {
        sources.insert(i);
        targets.insert(j);
    }
    double f_source = static_cast<double>(sources.size()) / source_segment_count;
    double f_target = static_cast<double>(targets.size()) / target_segment_count;
    if (f_source + f_target == 0.0) return 0.0;
    return 2.0 * f_source * f_target / (f_source + f_target);
}

TemplateResult extract_templates(const AlignmentSet& alignment, int n) {
    if (n < 2) throw std::invalid_argument("extract_templates: template length must be >= 2");
    TemplateResult result;
    const auto& cells = alignment.aligned;
    for (const auto& [i, j] : cells) {
        if (cells.count({i - 1, j - 1})) continue;  // not the head of its diagonal
        int length = 1;
        while (cells.count({i + length, j + length})) ++length;
        if (length >= n) {
            result.runs.push_back({alignment.pair_id, i, j, length});
            result.count += length - n + 1;
        }
    }
    std::sort(result.runs.begin(), result.runs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source_start, a.target_start) < std::tie(b.source_start, b.target_start);
    });
    return result;
}

HeatmapTable heatmap_table(const std::vector<HeatmapEntry>& entries,
                           const std::vector<std::string>& group_order) {
    std::vector<std::string> groups = group_order;
    if (groups.empty()) {
        std::set<std::string> seen;
        for (const auto& e : entries) {
            seen.insert(e.source_group);
            seen.insert(e.target_group);
        }
        groups.assign(seen.begin(), seen.end());
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t g = 0; g < groups.size(); ++g) index[groups[g]] = g;

    std::vector<std::vector<double>> sums(groups.size(), std::vector<double>(groups.size(), 0.0));
    std::vector<std::vector<int>> counts(groups.size(), std::vector<int>(groups.size(), 0));
    for (const auto& e : entries) {
        auto r = index.find(e.source_group);
        auto c = index.find(e.target_group);
        if (r == index.end() || c == index.end())
            throw std::invalid_argument("heatmap_table: entry group not in group order");
        sums[r->second][c->second] += e.value;
        counts[r->second][c->second] += 1;
    }

    HeatmapTable table;
    table.groups = std::move(groups);
    table.cells.assign(table.groups.size(),
                       std::vector<std::optional<double>>(table.groups.size(), std::nullopt));
    for (std::size_t r = 0; r < table.groups.size(); ++r)
        for (std::size_t c = 0; c < table.groups.size(); ++c)
            if (counts[r][c] > 0) table.cells[r][c] = sums[r][c] / counts[r][c];
    return table;
}

std::map<std::string, ThresholdConfig> paper_default_thresholds() {
    auto make = [](const std::string& metric, double tau) {
        ThresholdConfig c;
        c.metric_id = metric;
        c.tau = tau;
        c.paper_default = true;
        return std::pair<std::string, ThresholdConfig>(metric, c);
    };
    return {make("qudsim", 0.20),
            make("jaccard1", 0.09),
            make("jaccard2", 0.01),
            make("jaccard3", 0.01),
            make("jaccard4", 0.00),
            make("rougeL", 0.12),
            make("cosine", 0.71),
            make("judge:gpt-4o", 0.7742),
            make("judge:gpt-4o-mini", 0.6462)};
}

json to_json(const ThresholdConfig& config) {
    json j = {{"metric_id", config.metric_id}, {"tau", config.tau}};
    if (config.paper_default) {
        j["calibration_provenance"] = "paper-default";
    } else if (config.calibration) {
        j["calibration_provenance"] = {{"seed", config.calibration->seed},
                                       {"dev_fraction", config.calibration->dev_fraction},
                                       {"achieved_f1", config.calibration->achieved_f1}};
    }
    return j;
}

ThresholdConfig threshold_from_json(const json& j) {
    const std::string path = "/threshold";
    ThresholdConfig config;
    config.metric_id = corpus::require_string(j, "metric_id", path);
    config.tau = corpus::require_double(j, "tau", path);
    if (config.tau < 0.0 || config.tau > 1.0)
        throw SchemaError(path + "/tau", "tau outside the metric score range [0,1]");
    if (j.contains("calibration_provenance")) {
        const json& prov = j["calibration_provenance"];
        if (prov.is_string() && prov.get<std::string>() == "paper-default") {
            config.paper_default = true;
        } else if (prov.is_object()) {
            ThresholdConfig::Calibration cal;
            cal.seed = corpus::require_field(prov, "seed", path).get<std::uint64_t>();
            cal.dev_fraction = corpus::require_double(prov, "dev_fraction", path);
            cal.achieved_f1 = corpus::require_double(prov, "achieved_f1", path);
            config.calibration = cal;
        } else {
            throw SchemaError(path + "/calibration_provenance",
                              "expected \"paper-default\" or a calibration object");
        }
    }
    return config;
}

std::map<std::string, ThresholdConfig> load_thresholds(const std::filesystem::path& path) {
    json j = corpus::parse_json(util::read_file(path), path.string());
    const json& list = corpus::require_array(j, "thresholds", "/thresholds_file");
    std::map<std::string, ThresholdConfig> out;
    for (const auto& entry : list) {
        ThresholdConfig c = threshold_from_json(entry);
        out[c.metric_id] = c;
    }
    return out;
}

json to_json(const AlignmentSet& alignment) {
    json aligned = json::array();
    for (const auto& [i, j] : alignment.aligned) aligned.push_back({i, j});
    return {{"pair_id", alignment.pair_id},
            {"metric_id", alignment.metric_id},
            {"tau", alignment.tau},
            {"aligned", aligned}};
}

AlignmentSet alignment_from_json(const json& j) {
    const std::string path = "/alignment_set";
    AlignmentSet a;
    a.pair_id = corpus::require_string(j, "pair_id", path);
    a.metric_id = corpus::require_string(j, "metric_id", path);
    a.tau = corpus::require_double(j, "tau", path);
    const json& aligned = corpus::require_array(j, "aligned", path);
    for (std::size_t k = 0; k < aligned.size(); ++k) {
        if (!aligned[k].is_array() || aligned[k].size() != 2 ||
            !aligned[k][0].is_number_integer() || !aligned[k][1].is_number_integer())
            throw SchemaError(path + "/aligned/" + std::to_string(k),
                              "expected a [source_segment, target_segment] pair");
        a.aligned.insert({aligned[k][0].get<int>(), aligned[k][1].get<int>()});
    }
    return a;
}

}  // namespace qudsim::alignment
