#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qudsim::corpus {

enum class Domain { Obituary, Creative, Suri };
std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

enum class AbstractionLevel { Specific, Abstract };
// Single-letter file/artifact token: "S" for specific, "A" for abstract.
std::string level_token(AbstractionLevel level);
AbstractionLevel level_from_token(const std::string& token);

struct Sentence {
    int index = 0;  // 1-based
    std::string text;
    friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct DocMeta {
    std::string author_kind;  // "human" or a model name
    Domain domain = Domain::Creative;
    std::string prompt_id;
    std::optional<std::string> variant_group;  // minimal-pair group
    friend bool operator==(const DocMeta&, const DocMeta&) = default;
};

struct Document {
    std::string id;
    std::string text;  // raw source text, verbatim
    std::vector<Sentence> sentences;
    DocMeta meta;

    int sentence_count() const { return static_cast<int>(sentences.size()); }
    const std::string& sentence_text(int index) const;  // 1-based, throws on bad index
    friend bool operator==(const Document&, const Document&) = default;
};

struct Segment {
    int segment_index = 0;  // 1-based
    std::vector<int> sentence_indices;
    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Segmentation {
    std::string document_id;
    std::vector<Segment> segments;

    int segment_count() const { return static_cast<int>(segments.size()); }
    // 1-based segment index containing the sentence, or 0 if none.
    int segment_containing(int sentence_index) const;
    const Segment& segment(int segment_index) const;  // 1-based
    friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

struct Qud {
    std::string id;
    std::string source_document_id;
    int source_segment_index = 0;
    std::string question;
    AbstractionLevel level = AbstractionLevel::Abstract;
    friend bool operator==(const Qud&, const Qud&) = default;
};

struct AnswerSet {
    std::string qud_id;
    std::string target_document_id;
    std::set<int> sentence_indices;  // empty means unanswerable
    friend bool operator==(const AnswerSet&, const AnswerSet&) = default;
};

struct GoldAlignment {
    std::string source_document_id;
    std::string target_document_id;
    std::set<std::pair<int, int>> aligned;  // (source segment, target segment)
    std::vector<std::string> provenance;    // annotator ids
    std::string pair_id() const;
    friend bool operator==(const GoldAlignment&, const GoldAlignment&) = default;
};

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

// Deterministic rule-based splitter: terminal .?! runs (with trailing quote
// or bracket closers), guarded by an abbreviation list and an ellipsis rule;
// blank lines always end a sentence. Sentence texts are whitespace-collapsed.
// Throws UsageError when the input is empty after trimming.
std::vector<std::string> split_sentences(const std::string& raw_text);

struct SentencePiece {
    std::string text;
    int paragraph = 0;  // 1-based paragraph (blank-line block) index
};
std::vector<SentencePiece> split_sentences_ex(const std::string& raw_text);

// Builds a Document from raw text: splits sentences and assigns 1-based
// indices. Validates the id (path-safe, no "__", which separates pair ids).
Document make_document(const std::string& id, const std::string& raw_text, DocMeta meta);

// One segment per blank-line paragraph of the source text. Always a valid
// partition; used as the last-resort segmentation repair.
Segmentation paragraph_segmentation(const Document& doc);

// "1. First sentence.\n2. Second sentence." rendering used in prompts.
std::string numbered_text(const Document& doc);

// Segment text = sentence texts joined with single spaces.
std::string segment_text(const Document& doc, const Segment& segment);

// ---------------------------------------------------------------------------
// Segmentation validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string kind;  // gap | overlap | non-contiguous | out-of-range | ...
    std::string detail;
    std::vector<int> sentence_indices;
};

struct ValidationReport {
    bool ok = false;
    std::vector<Violation> violations;
};

// Violations are data, not exceptions: gaps, overlaps, non-contiguous
// segments, out-of-range indices, and bad segment numbering are all reported
// with the offending indices.
ValidationReport validate_segmentation(const Document& doc, const Segmentation& seg);

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

nlohmann::json to_json(const Document& doc);
nlohmann::json to_json(const Segmentation& seg);
nlohmann::json to_json(const Qud& qud);
nlohmann::json to_json(const AnswerSet& answers);
nlohmann::json to_json(const GoldAlignment& gold);

Document document_from_json(const nlohmann::json& j);
Segmentation segmentation_from_json(const nlohmann::json& j);
Qud qud_from_json(const nlohmann::json& j);
AnswerSet answer_set_from_json(const nlohmann::json& j);
GoldAlignment gold_alignment_from_json(const nlohmann::json& j);

// Schema helpers shared by the other modules' serializers. `path` feeds the
// path-level SchemaError messages.
const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                    const std::string& path);
std::string require_string(const nlohmann::json& j, const char* key,
                           const std::string& path);
int require_int(const nlohmann::json& j, const char* key, const std::string& path);
double require_double(const nlohmann::json& j, const char* key, const std::string& path);
const nlohmann::json& require_array(const nlohmann::json& j, const char* key,
                                    const std::string& path);
nlohmann::json parse_json(const std::string& text, const std::string& origin);

// ---------------------------------------------------------------------------
// Workspace store
// ---------------------------------------------------------------------------
//
// Directory layout under the workspace root:
//   corpus/<doc_id>.json
//   derived/<doc_id>.segments.json
//   derived/<doc_id>.abstract.json
//   derived/<doc_id>.quds.<S|A>.json
//   derived/<src>__<tgt>.answers.<S|A>.json
//   derived/<pair_id>.<metric>.matrix.json
//   derived/<pair_id>.<metric>.alignment.json
//   gold/<pair_id>.alignment.json
//   reports/ runs/ cache/
class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path corpus_dir() const { return root_ / "corpus"; }
    std::filesystem::path derived_dir() const { return root_ / "derived"; }
    std::filesystem::path gold_dir() const { return root_ / "gold"; }
    std::filesystem::path reports_dir() const { return root_ / "reports"; }
    std::filesystem::path runs_dir() const { return root_ / "runs"; }
    void ensure_layout() const;

    static std::string pair_id(const std::string& source_doc, const std::string& target_doc);
    static std::pair<std::string, std::string> split_pair_id(const std::string& pair_id);

    std::filesystem::path document_path(const std::string& doc_id) const;
    std::filesystem::path segmentation_path(const std::string& doc_id) const;
    std::filesystem::path abstraction_path(const std::string& doc_id) const;
    std::filesystem::path quds_path(const std::string& doc_id, AbstractionLevel level) const;
    std::filesystem::path answers_path(const std::string& source_doc, const std::string& target_doc,
                                       AbstractionLevel level) const;
    std::filesystem::path matrix_path(const std::string& pair_id, const std::string& metric_id) const;
    std::filesystem::path alignment_path(const std::string& pair_id, const std::string& metric_id) const;
    std::filesystem::path gold_path(const std::string& pair_id) const;

    bool has_document(const std::string& doc_id) const;
    std::vector<std::string> list_documents() const;

    Document load_document(const std::string& doc_id) const;
    void save_document(const Document& doc) const;

    // Loads a segmentation and checks it against its document.
    Segmentation load_segmentation(const std::string& doc_id) const;

    // Loads answer sets for (source -> target) and validates every sentence
    // index against the target document; an out-of-range index is a schema
    // error.
    std::vector<AnswerSet> load_answer_sets(const std::string& source_doc,
                                            const std::string& target_doc,
                                            AbstractionLevel level) const;

    std::vector<Qud> load_quds(const std::string& doc_id, AbstractionLevel level) const;

    GoldAlignment load_gold(const std::string& pair_id) const;
    std::vector<std::string> list_gold_pairs() const;

    nlohmann::json load_json(const std::filesystem::path& path) const;
    void save_json(const std::filesystem::path& path, const nlohmann::json& j) const;

private:
    std::filesystem::path root_;
};

}  // namespace qudsim::corpus
