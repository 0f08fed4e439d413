#include "qudsim/eval_harness.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "qudsim/qud_pipeline.hpp"

namespace qudsim::eval {

Prf prf_from_counts(long tp, long fp, long fn) {
    long predicted = tp + fp;
    long gold = tp + fn;
    Prf out;
    out.precision = predicted > 0 ? static_cast<double>(tp) / predicted : (gold == 0 ? 1.0 : 0.0);
    out.recall = gold > 0 ? static_cast<double>(tp) / gold : (predicted == 0 ? 1.0 : 0.0);
    double denom = out.precision + out.recall;
    out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
    return out;
}

void PrCounts::add(const PrCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    pairs += other.pairs;
}

PrCounts pr_counts(const alignment::AlignmentSet& predicted, const corpus::GoldAlignment& gold) {
    if (predicted.pair_id != gold.pair_id())
        throw std::invalid_argument("pr_counts: prediction is for pair '" + predicted.pair_id +
                                    "' but gold is for '" + gold.pair_id() + "'");
    PrCounts counts;
    counts.pairs = 1;
    for (const auto& cell : predicted.aligned)
        gold.aligned.count(cell) ? ++counts.tp : ++counts.fp;
    for (const auto& cell : gold.aligned)
        if (!predicted.aligned.count(cell)) ++counts.fn;
    return counts;
}

EvalReport finalize_report(const std::string& metric_id, const std::string& domain,
                           const PrCounts& counts) {
    Prf prf = prf_from_counts(counts.tp, counts.fp, counts.fn);
    EvalReport report;
    report.metric_id = metric_id;
    report.domain = domain;
    report.precision = prf.precision;
    report.recall = prf.recall;
    report.f1 = prf.f1;
    report.tp = counts.tp;
    report.fp = counts.fp;
    report.fn = counts.fn;
    report.pair_count = counts.pairs;
    return report;
}

EvalReport prf1(const alignment::AlignmentSet& predicted, const corpus::GoldAlignment& gold) {
    return finalize_report(predicted.metric_id, "overall", pr_counts(predicted, gold));
}

namespace {

double iou(const std::set<int>& a, const std::set<int>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t intersection = 0;
    for (int v : a)
        if (b.count(v)) ++intersection;
    std::size_t unions = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

void check_same_universe(const corpus::AnswerSet& a, const corpus::AnswerSet& b) {
    if (a.qud_id != b.qud_id)
        throw std::invalid_argument("agreement: answer sets are for different QUDs ('" + a.qud_id +
                                    "' vs '" + b.qud_id + "')");
    if (a.target_document_id != b.target_document_id)
        throw std::invalid_argument("agreement: answer sets target different documents ('" +
                                    a.target_document_id + "' vs '" + b.target_document_id + "')");
}

}  // namespace

double answer_agreement(const corpus::AnswerSet& a, const corpus::AnswerSet& b) {
    check_same_universe(a, b);
    return iou(a.sentence_indices, b.sentence_indices);
}

double segment_agreement(const corpus::AnswerSet& a, const corpus::AnswerSet& b,
                         const corpus::Segmentation& target_segmentation) {
    check_same_universe(a, b);
    auto za = pipeline::answering_segments(a, target_segmentation);
    auto zb = pipeline::answering_segments(b, target_segmentation);
    return iou(za.segment_indices, zb.segment_indices);
}

std::vector<corpus::AnswerSet> gold_intersection(const std::vector<corpus::AnswerSet>& first,
                                                 const std::vector<corpus::AnswerSet>& second) {
    std::map<std::string, const corpus::AnswerSet*> by_id;
    for (const auto& a : second) by_id[a.qud_id] = &a;
    if (by_id.size() != second.size() || first.size() != second.size())
        throw std::invalid_argument("gold_intersection: annotation runs cover different QUDs");

    std::vector<corpus::AnswerSet> out;
    for (const auto& a : first) {
        auto it = by_id.find(a.qud_id);
        if (it == by_id.end())
            throw std::invalid_argument("gold_intersection: QUD '" + a.qud_id +
                                        "' missing from the second annotation run");
        check_same_universe(a, *it->second);
        corpus::AnswerSet merged;
        merged.qud_id = a.qud_id;
        merged.target_document_id = a.target_document_id;
        for (int s : a.sentence_indices)
            if (it->second->sentence_indices.count(s)) merged.sentence_indices.insert(s);
        out.push_back(std::move(merged));
    }
    return out;
}

corpus::GoldAlignment gold_alignment_from_answers(
    const std::vector<corpus::Qud>& source_quds, const std::vector<corpus::AnswerSet>& answers,
    const corpus::Segmentation& target_segmentation, const std::string& source_document_id,
    const std::string& target_document_id) {
    std::map<std::string, const corpus::AnswerSet*> by_id;
    for (const auto& a : answers) by_id[a.qud_id] = &a;

    corpus::GoldAlignment gold;
    gold.source_document_id = source_document_id;
    gold.target_document_id = target_document_id;
    for (const auto& qud : source_quds) {
        auto it = by_id.find(qud.id);
        if (it == by_id.end())
            throw std::invalid_argument("gold_alignment_from_answers: no answers for QUD '" +
                                        qud.id + "'");
        auto z = pipeline::answering_segments(*it->second, target_segmentation);
        for (int segment : z.segment_indices)
            gold.aligned.insert({qud.source_segment_index, segment});
    }
    return gold;
}

LevelStats abstraction_stats(const std::vector<AnswerBatch>& batches) {
    if (batches.empty()) throw std::invalid_argument("abstraction_stats: no answer batches");

    LevelStats stats;
    long answered = 0;
    long sentence_sum = 0;
    double coverage_sum = 0.0;
    for (const auto& batch : batches) {
        if (!batch.target_segmentation)
            throw std::invalid_argument("abstraction_stats: batch missing target segmentation");
        std::set<int> covered;
        for (const auto& answer : batch.answers) {
            ++stats.qud_count;
            if (answer.sentence_indices.empty()) continue;
            ++answered;
            sentence_sum += static_cast<long>(answer.sentence_indices.size());
            auto z = pipeline::answering_segments(answer, *batch.target_segmentation);
            covered.insert(z.segment_indices.begin(), z.segment_indices.end());
        }
        int segments = batch.target_segmentation->segment_count();
        if (segments <= 0)
            throw std::invalid_argument("abstraction_stats: target segmentation is empty");
        coverage_sum += static_cast<double>(covered.size()) / segments;
    }
    if (stats.qud_count == 0) throw std::invalid_argument("abstraction_stats: no QUDs in input");

    stats.answerable = static_cast<double>(answered) / stats.qud_count;
    stats.unanswerable = 1.0 - stats.answerable;
    stats.sentences_per_answer =
        answered > 0 ? static_cast<double>(sentence_sum) / answered : 0.0;
    stats.coverage = coverage_sum / static_cast<double>(batches.size());
    return stats;
}

double stability(const std::vector<corpus::AnswerSet>& run1,
                 const std::vector<corpus::AnswerSet>& run2) {
    if (run1.empty())
        throw std::invalid_argument("stability: empty answering runs");
    std::map<std::string, const corpus::AnswerSet*> by_id;
    for (const auto& a : run2) by_id[a.qud_id] = &a;
    if (run1.size() != run2.size() || by_id.size() != run2.size())
        throw std::invalid_argument("stability: runs cover different QUD universes");

    double sum = 0.0;
    for (const auto& a : run1) {
        auto it = by_id.find(a.qud_id);
        if (it == by_id.end())
            throw std::invalid_argument("stability: QUD '" + a.qud_id +
                                        "' missing from the second run");
        sum += answer_agreement(a, *it->second);
    }
    return sum / static_cast<double>(run1.size());
}

}  // namespace qudsim::eval
