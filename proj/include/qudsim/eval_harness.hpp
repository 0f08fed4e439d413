#pragma once

#include <map>
#include <string>
#include <vector>

#include "qudsim/alignment.hpp"
#include "qudsim/corpus.hpp"

namespace qudsim::eval {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Conventions: with no predictions, precision is 1 when gold is also empty
// (exact agreement) and 0 otherwise; symmetrically for recall; F1 is the
// harmonic mean, 0 when precision + recall = 0.
Prf prf_from_counts(long tp, long fp, long fn);

struct EvalReport {
    std::string metric_id;
    std::string domain;  // "overall" or a domain name
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long pair_count = 0;
};

struct PrCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long pairs = 0;
    void add(const PrCounts& other);
};

// Segment-pair decision counts for one document pair. Throws when the
// prediction and gold refer to different pairs.
PrCounts pr_counts(const alignment::AlignmentSet& predicted, const corpus::GoldAlignment& gold);

EvalReport finalize_report(const std::string& metric_id, const std::string& domain,
                           const PrCounts& counts);

EvalReport prf1(const alignment::AlignmentSet& predicted, const corpus::GoldAlignment& gold);

// IoU over answer sentence indices. Two empty sets agree perfectly (both
// call the QUD unanswerable) and score 1; exactly one empty scores 0.
// Throws when the answer sets describe different QUDs or targets.
double answer_agreement(const corpus::AnswerSet& a, const corpus::AnswerSet& b);

// Same as answer_agreement after mapping both answer sets onto the segments
// that contain them.
double segment_agreement(const corpus::AnswerSet& a, const corpus::AnswerSet& b,
                         const corpus::Segmentation& target_segmentation);

// Per-QUD sentence-set intersection of two annotation runs over the same
// QUD universe.
std::vector<corpus::AnswerSet> gold_intersection(const std::vector<corpus::AnswerSet>& first,
                                                 const std::vector<corpus::AnswerSet>& second);

// Gold segment alignment induced by answerability: each source QUD aligns
// its segment with every target segment containing one of its answers.
corpus::GoldAlignment gold_alignment_from_answers(
    const std::vector<corpus::Qud>& source_quds,
    const std::vector<corpus::AnswerSet>& answers,
    const corpus::Segmentation& target_segmentation,
    const std::string& source_document_id, const std::string& target_document_id);

// One QUD-answering pass of one document pair.
struct AnswerBatch {
    const corpus::Segmentation* target_segmentation = nullptr;
    std::vector<corpus::AnswerSet> answers;
};

struct LevelStats {
    double answerable = 0.0;        // fraction of QUDs with a non-empty answer set
    double unanswerable = 0.0;      // 1 - answerable
    double sentences_per_answer = 0.0;  // mean |A_q| over answerable QUDs
    double coverage = 0.0;          // mean over batches of |union Z_q| / target segments
    long qud_count = 0;
};

// Aggregates answerability statistics over batches: QUD-level fractions are
// micro-averages across all batches, coverage is averaged per batch.
LevelStats abstraction_stats(const std::vector<AnswerBatch>& batches);

// Mean answer_agreement over two complete answering runs of the same QUD
// universe; throws when the universes differ.
double stability(const std::vector<corpus::AnswerSet>& run1,
                 const std::vector<corpus::AnswerSet>& run2);

}  // namespace qudsim::eval
