#include "qudsim/scoring.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "qudsim/util.hpp"

namespace qudsim::scoring {

using nlohmann::json;

double SimilarityMatrix::at(int i, int j) const {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
        throw std::out_of_range("matrix index (" + std::to_string(i) + "," + std::to_string(j) +
                                ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    return values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

double directional_sim(const std::vector<corpus::Qud>& segment_quds,
                       const std::map<std::string, corpus::AnswerSet>& answers,
                       const corpus::Segmentation& target_segmentation,
                       int target_segment_index) {
    if (segment_quds.empty())
        throw std::invalid_argument("directional_sim: segment has no QUDs");

    const corpus::Segment& target = target_segmentation.segment(target_segment_index);
    std::unordered_set<int> in_segment(target.sentence_indices.begin(),
                                       target.sentence_indices.end());

    double sum = 0.0;
    for (const auto& qud : segment_quds) {
        auto it = answers.find(qud.id);
        if (it == answers.end())
            throw MissingArtifactError("answer set for QUD '" + qud.id + "'");
        const auto& answer = it->second.sentence_indices;
        if (answer.empty()) continue;  // unanswerable contributes 0
        int inside = 0;
        for (int s : answer)
            if (in_segment.count(s)) ++inside;
        sum += static_cast<double>(inside) / static_cast<double>(answer.size());
    }
    return sum / static_cast<double>(segment_quds.size());
}

double qudsim_score(double forward, double backward) {
    if (forward < 0.0 || forward > 1.0 || backward < 0.0 || backward > 1.0)
        throw std::invalid_argument("qudsim_score: directional similarities must lie in [0,1]");
    double denom = forward + backward;
    if (denom == 0.0) return 0.0;
    return 2.0 * forward * backward / denom;
}

namespace {

std::map<int, std::vector<corpus::Qud>> group_by_segment(const std::vector<corpus::Qud>& quds) {
    std::map<int, std::vector<corpus::Qud>> grouped;
    for (const auto& q : quds) grouped[q.source_segment_index].push_back(q);
    return grouped;
}

}  // namespace

SimilarityMatrix similarity_matrix(const PairArtifacts& artifacts, const std::string& metric_id) {
    if (!artifacts.source_segmentation || !artifacts.target_segmentation)
        throw std::invalid_argument("similarity_matrix: segmentations are required");

    const auto& source_seg = *artifacts.source_segmentation;
    const auto& target_seg = *artifacts.target_segmentation;
    auto source_by_segment = group_by_segment(artifacts.source_quds);
    auto target_by_segment = group_by_segment(artifacts.target_quds);

    for (const auto& seg : source_seg.segments)
        if (!source_by_segment.count(seg.segment_index))
            throw std::invalid_argument("similarity_matrix: source segment " +
                                        std::to_string(seg.segment_index) + " has no QUDs");
    for (const auto& seg : target_seg.segments)
        if (!target_by_segment.count(seg.segment_index))
            throw std::invalid_argument("similarity_matrix: target segment " +
                                        std::to_string(seg.segment_index) + " has no QUDs");

    SimilarityMatrix m;
    m.pair_id = artifacts.pair_id;
    m.metric_id = metric_id;
    m.rows = source_seg.segment_count();
    m.cols = target_seg.segment_count();
    m.values.assign(static_cast<std::size_t>(m.rows),
                    std::vector<double>(static_cast<std::size_t>(m.cols), 0.0));
    m.fwd = m.values;
    m.bwd = m.values;

    for (int i = 1; i <= m.rows; ++i) {
        for (int j = 1; j <= m.cols; ++j) {
            double f = directional_sim(source_by_segment.at(i), artifacts.answers_source_to_target,
                                       target_seg, j);
            double b = directional_sim(target_by_segment.at(j), artifacts.answers_target_to_source,
                                       source_seg, i);
            auto ii = static_cast<std::size_t>(i - 1);
            auto jj = static_cast<std::size_t>(j - 1);
            (*m.fwd)[ii][jj] = f;
            (*m.bwd)[ii][jj] = b;
            m.values[ii][jj] = qudsim_score(f, b);
        }
    }
    return m;
}

json to_json(const SimilarityMatrix& m) {
    json j = {{"pair_id", m.pair_id},
              {"metric_id", m.metric_id},
              {"rows", m.rows},
              {"cols", m.cols},
              {"values", m.values}};
    if (m.fwd) j["fwd"] = *m.fwd;
    if (m.bwd) j["bwd"] = *m.bwd;
    if (m.raw_values) j["raw_values"] = *m.raw_values;
    return j;
}

namespace {

std::vector<std::vector<double>> matrix_values(const json& j, const char* key, int rows, int cols,
                                               const std::string& path) {
    const json& v = corpus::require_array(j, key, path);
    if (static_cast<int>(v.size()) != rows)
        throw SchemaError(path + "/" + key, "expected " + std::to_string(rows) + " rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw SchemaError(path + "/" + key, "expected " + std::to_string(cols) + " columns");
        std::vector<double> r;
        for (const auto& cell : row) {
            if (!cell.is_number()) throw SchemaError(path + "/" + key, "expected numbers");
            r.push_back(cell.get<double>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

SimilarityMatrix matrix_from_json(const json& j) {
    const std::string path = "/matrix";
    SimilarityMatrix m;
    m.pair_id = corpus::require_string(j, "pair_id", path);
    m.metric_id = corpus::require_string(j, "metric_id", path);
    m.rows = corpus::require_int(j, "rows", path);
    m.cols = corpus::require_int(j, "cols", path);
    if (m.rows < 0 || m.cols < 0) throw SchemaError(path, "negative matrix dimensions");
    m.values = matrix_values(j, "values", m.rows, m.cols, path);
    if (j.contains("fwd")) m.fwd = matrix_values(j, "fwd", m.rows, m.cols, path);
    if (j.contains("bwd")) m.bwd = matrix_values(j, "bwd", m.rows, m.cols, path);
    if (j.contains("raw_values")) m.raw_values = matrix_values(j, "raw_values", m.rows, m.cols, path);
    return m;
}

}  // namespace qudsim::scoring
