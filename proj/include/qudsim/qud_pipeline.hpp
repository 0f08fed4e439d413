#pragma once

#include <set>
#include <string>
#include <vector>

#include "qudsim/corpus.hpp"
#include "qudsim/llm_gateway.hpp"

namespace qudsim::pipeline {

struct AbstractedSegment {
    std::string document_id;
    int segment_index = 0;
    std::string abstract_text;
    friend bool operator==(const AbstractedSegment&, const AbstractedSegment&) = default;
};

// Z_q: the target segments containing at least one sentence of the QUD's
// answer set.
struct AnsweringSegments {
    std::string qud_id;
    std::string target_document_id;
    std::set<int> segment_indices;
    friend bool operator==(const AnsweringSegments&, const AnsweringSegments&) = default;
};

// ---------------------------------------------------------------------------
// Prompt builders (shared with the fixture recorder so replay keys match)
// ---------------------------------------------------------------------------

llm::PromptSpec build_segmentation_prompt(const corpus::Document& doc);
llm::PromptSpec build_abstraction_prompt(const corpus::Document& doc,
                                         const corpus::Segmentation& seg);
llm::PromptSpec build_qud_prompt(const std::string& segment_or_abstract_text);
llm::PromptSpec build_answer_prompt(const std::vector<corpus::Qud>& quds,
                                    const corpus::Document& target);

// Deterministic QUD id: <doc>.s<segment>.q<k>.<S|A>
std::string qud_id(const std::string& doc_id, int segment_index, int k,
                   corpus::AbstractionLevel level);

// ---------------------------------------------------------------------------
// Response parsers (exposed for tests and adversarial transcripts)
// ---------------------------------------------------------------------------

// Accepts JSON arrays of arrays, bracketed groups, labeled lines
// ("Segment 3: 7, 8, 9"), bare number lines, and n-m ranges.
std::vector<std::vector<int>> parse_segment_lists(const std::string& body);

// Numbered paragraph blocks ("Paragraph 2: ..." / "2. ..."); a marker-free
// non-empty response counts as a single block.
std::vector<std::string> parse_numbered_paragraphs(const std::string& body);

// Question lines: anything ending in '?' after bullets/numbering are
// stripped; at most `cap` are kept (truncation recorded in warnings).
std::vector<std::string> parse_questions(const std::string& body, int cap,
                                         std::vector<std::string>* warnings);

struct RawAnswerEntry {
    int sentence_index = 0;
    std::string text;  // may be empty when the response omitted the sentence
};

// Per input question, the extracted (index, text) entries. Blocks are
// matched to questions by normalized text, falling back to response order.
// Throws ParseError when no block structure is recognizable.
std::vector<std::vector<RawAnswerEntry>> parse_answer_blocks(
    const std::string& body, const std::vector<std::string>& questions,
    std::vector<std::string>* warnings);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct SegmentationOutcome {
    corpus::Segmentation segmentation;
    // "llm" | "llm-reprompt" | "paragraph-fallback" | "single-sentence"
    std::string provenance;
    std::vector<std::string> transcript_keys;
};

// LLM segmentation with the repair chain: parse + validate; on failure
// re-prompt once; then fall back to paragraph boundaries. The result always
// passes validate_segmentation.
SegmentationOutcome segment_document(const corpus::Document& doc, llm::Gateway& gateway,
                                     const llm::BackendConfig& config);

struct AbstractionOutcome {
    std::vector<AbstractedSegment> segments;  // order-aligned with the segmentation
    std::vector<std::string> transcript_keys;
};

// One abstract text per segment; a count mismatch is re-prompted once and
// then raised as ParseError with the transcript.
AbstractionOutcome abstract_segments(const corpus::Document& doc, const corpus::Segmentation& seg,
                                     llm::Gateway& gateway, const llm::BackendConfig& config);

struct QudGenOutcome {
    std::vector<corpus::Qud> quds;  // 1..2 per segment
    std::vector<std::string> transcript_keys;
    std::vector<std::string> warnings;
};

// Generates QUDs for one segment. At the Specific level the caller passes
// the raw segment text; at the Abstract level the abstracted text.
QudGenOutcome generate_quds(const std::string& document_id, int segment_index,
                            const std::string& text, corpus::AbstractionLevel level,
                            llm::Gateway& gateway, const llm::BackendConfig& config);

struct AnswerOutcome {
    std::vector<corpus::AnswerSet> answers;  // one per input QUD, same order
    std::vector<std::string> transcript_keys;
    std::vector<std::string> warnings;  // dropped indices, text mismatches, ...
};

// Answers all QUDs against the target document in one call. Out-of-range
// sentence indices are dropped; returned sentence text that does not match
// the original (after whitespace normalization) drops the index too.
AnswerOutcome answer_quds(const std::vector<corpus::Qud>& quds, const corpus::Document& target,
                          llm::Gateway& gateway, const llm::BackendConfig& config);

// Exact set of target segments intersecting the answer set; empty answer
// set yields the empty segment set.
AnsweringSegments answering_segments(const corpus::AnswerSet& answers,
                                     const corpus::Segmentation& target_segmentation);

}  // namespace qudsim::pipeline
