#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qudsim/corpus.hpp"

namespace qudsim::scoring {

// Per-pair real-valued segment-similarity matrix. `values[i][j]` scores
// source segment i+1 against target segment j+1 and always lies in [0, 1].
// For the bidirectional QUD metric the two directional components are kept
// for audit; for cosine the unclamped values are kept in `raw_values`.
struct SimilarityMatrix {
    std::string pair_id;
    std::string metric_id;
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<double>> values;
    std::optional<std::vector<std::vector<double>>> fwd;  // sim(source i -> target j)
    std::optional<std::vector<std::vector<double>>> bwd;  // sim(target j -> source i)
    std::optional<std::vector<std::vector<double>>> raw_values;

    double at(int i, int j) const;  // 0-based
};

// Mean over the segment's QUDs of the fraction of each QUD's answer
// sentences that fall inside target segment `target_segment_index`.
// A QUD with an empty answer set contributes 0. Throws when the segment
// has no QUDs or an answer set is missing.
double directional_sim(const std::vector<corpus::Qud>& segment_quds,
                       const std::map<std::string, corpus::AnswerSet>& answers,
                       const corpus::Segmentation& target_segmentation,
                       int target_segment_index);

// Harmonic mean of the two directional similarities; 0 when both are 0.
// Inputs outside [0, 1] are rejected.
double qudsim_score(double forward, double backward);

// Everything needed to score one ordered document pair in both directions.
struct PairArtifacts {
    std::string pair_id;
    const corpus::Segmentation* source_segmentation = nullptr;
    const corpus::Segmentation* target_segmentation = nullptr;
    std::vector<corpus::Qud> source_quds;
    std::vector<corpus::Qud> target_quds;
    // Answer sets for source QUDs against the target document and vice versa.
    std::map<std::string, corpus::AnswerSet> answers_source_to_target;
    std::map<std::string, corpus::AnswerSet> answers_target_to_source;
};

// matrix[i][j] = harmonic mean of directional_sim(i -> j) and
// directional_sim(j -> i); both components retained.
SimilarityMatrix similarity_matrix(const PairArtifacts& artifacts,
                                   const std::string& metric_id = "qudsim");

nlohmann::json to_json(const SimilarityMatrix& m);
SimilarityMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace qudsim::scoring
