#include "qudsim/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "qudsim/util.hpp"

namespace qudsim::corpus {

using nlohmann::json;
using util::normalize_whitespace;

std::string to_string(Domain d) {
    switch (d) {
        case Domain::Obituary: return "obituary";
        case Domain::Creative: return "creative";
        case Domain::Suri: return "suri";
    }
    throw std::logic_error("bad Domain value");
}

Domain domain_from_string(const std::string& s) {
    if (s == "obituary") return Domain::Obituary;
    if (s == "creative") return Domain::Creative;
    if (s == "suri") return Domain::Suri;
    throw SchemaError("/meta/domain", "unknown domain '" + s + "' (expected obituary|creative|suri)");
}

std::string level_token(AbstractionLevel level) {
    return level == AbstractionLevel::Specific ? "S" : "A";
}

AbstractionLevel level_from_token(const std::string& token) {
    if (token == "S" || token == "specific") return AbstractionLevel::Specific;
    if (token == "A" || token == "abstract") return AbstractionLevel::Abstract;
    throw SchemaError("/level", "unknown abstraction level '" + token + "' (expected S|A)");
}

const std::string& Document::sentence_text(int index) const {
    if (index < 1 || index > sentence_count())
        throw std::out_of_range("sentence index " + std::to_string(index) + " not in 1.." +
                                std::to_string(sentence_count()) + " for document " + id);
    return sentences[static_cast<std::size_t>(index - 1)].text;
}

int Segmentation::segment_containing(int sentence_index) const {
    for (const auto& seg : segments)
        for (int s : seg.sentence_indices)
            if (s == sentence_index) return seg.segment_index;
    return 0;
}

const Segment& Segmentation::segment(int segment_index) const {
    for (const auto& seg : segments)
        if (seg.segment_index == segment_index) return seg;
    throw std::out_of_range("segment index " + std::to_string(segment_index) +
                            " not present in segmentation of " + document_id);
}

std::string GoldAlignment::pair_id() const {
    return Store::pair_id(source_document_id, target_document_id);
}

// ---------------------------------------------------------------------------
// Sentence splitting
// ---------------------------------------------------------------------------

namespace {

const std::unordered_set<std::string>& abbreviation_guard() {
    static const std::unordered_set<std::string> list = {
        "mr",   "mrs",  "ms",   "dr",   "prof", "rev",  "hon",  "gen",  "sen",
        "rep",  "gov",  "sgt",  "col",  "capt", "lt",   "cmdr", "adm",  "st",
        "mt",   "ft",   "jr",   "sr",   "etc",  "vs",   "al",   "approx",
        "dept", "est",  "fig",  "vol",  "inc",  "ltd",  "co",   "corp", "jan",
        "feb",  "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",
        "nov",  "dec"};
    return list;
}

bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

// Matches one closing quote/bracket at `pos`, returning its byte length or 0.
std::size_t closer_length(const std::string& s, std::size_t pos) {
    char c = s[pos];
    if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '*') return 1;
    // UTF-8 right double/single quotation marks.
    if (pos + 2 < s.size() && static_cast<unsigned char>(s[pos]) == 0xE2 &&
        static_cast<unsigned char>(s[pos + 1]) == 0x80) {
        unsigned char b = static_cast<unsigned char>(s[pos + 2]);
        if (b == 0x9D || b == 0x99) return 3;
    }
    return 0;
}

// Can the byte(s) at `pos` open a new sentence? Uppercase letters, digits,
// and opening quotes/brackets qualify.
bool is_sentence_opener(const std::string& s, std::size_t pos) {
    unsigned char c = static_cast<unsigned char>(s[pos]);
    if (std::isupper(c) || std::isdigit(c)) return true;
    if (c == '"' || c == '\'' || c == '(' || c == '[' || c == '*') return true;
    if (pos + 2 < s.size() && c == 0xE2 && static_cast<unsigned char>(s[pos + 1]) == 0x80) {
        unsigned char b = static_cast<unsigned char>(s[pos + 2]);
        if (b == 0x9C || b == 0x98) return true;  // left quotation marks
    }
    return false;
}

// Token immediately before the period at `dot_pos` (spaces skipped, so the
// pre-tokenized "word ." style still resolves to "word").
std::string token_before(const std::string& s, std::size_t dot_pos) {
    std::size_t end = dot_pos;
    while (end > 0 && util::is_space_byte(s[end - 1])) --end;
    std::size_t start = end;
    while (start > 0) {
        char c = s[start - 1];
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '&' || c == '\'')
            --start;
        else
            break;
    }
    return s.substr(start, end - start);
}

bool guarded_abbreviation(const std::string& s, std::size_t dot_pos) {
    std::string token = token_before(s, dot_pos);
    if (token.empty()) return false;
    // Dotted tokens like "U.S", "H.W", "e.g", "i.e" never end a sentence.
    if (token.find('.') != std::string::npos) return true;
    return abbreviation_guard().count(util::to_lower(token)) > 0;
}

void split_block(const std::string& text, std::size_t begin, std::size_t end, int paragraph,
                 std::vector<SentencePiece>& out) {
    auto emit = [&](std::size_t from, std::size_t to) {
        std::string piece = normalize_whitespace(std::string_view(text).substr(from, to - from));
        if (!piece.empty()) out.push_back({std::move(piece), paragraph});
    };

    std::size_t start = begin;
    std::size_t i = begin;
    while (i < end) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        int dots = 0;
        while (run_end < end && is_terminal(text[run_end])) {
            if (text[run_end] == '.') ++dots;
            ++run_end;
        }
        bool ellipsis = dots >= 2;
        bool abbrev = text[i] == '.' && run_end == i + 1 && guarded_abbreviation(text, i);

        std::size_t after = run_end;
        while (after < end) {
            std::size_t len = closer_length(text, after);
            if (len == 0) break;
            after += len;
        }

        if (!ellipsis && !abbrev && after < end && util::is_space_byte(text[after])) {
            std::size_t next = after;
            while (next < end && util::is_space_byte(text[next])) ++next;
            if (next >= end || is_sentence_opener(text, next)) {
                emit(start, after);
                start = next;
                i = next;
                continue;
            }
        }
        i = after < end ? std::max(after, run_end) : end;
    }
    emit(start, end);
}

}  // namespace

std::vector<SentencePiece> split_sentences_ex(const std::string& raw_text) {
    if (normalize_whitespace(raw_text).empty())
        throw UsageError("cannot split an empty document");

    std::vector<SentencePiece> out;
    int paragraph = 0;
    std::size_t pos = 0;
    const std::size_t n = raw_text.size();
    while (pos < n) {
        // Skip whitespace (and count nothing): paragraph blocks are separated
        // by lines that are blank after trimming.
        while (pos < n && util::is_space_byte(raw_text[pos])) ++pos;
        if (pos >= n) break;
        std::size_t block_end = pos;
        std::size_t scan = pos;
        while (scan < n) {
            if (raw_text[scan] == '\n') {
                std::size_t look = scan + 1;
                while (look < n && (raw_text[look] == ' ' || raw_text[look] == '\t' ||
                                    raw_text[look] == '\r'))
                    ++look;
                if (look < n && raw_text[look] == '\n') {
                    block_end = scan;
                    break;
                }
            }
            ++scan;
            block_end = scan;
        }
        ++paragraph;
        split_block(raw_text, pos, block_end, paragraph, out);
        pos = block_end;
    }
    if (out.empty()) throw UsageError("cannot split an empty document");
    return out;
}

std::vector<std::string> split_sentences(const std::string& raw_text) {
    std::vector<std::string> out;
    for (auto& piece : split_sentences_ex(raw_text)) out.push_back(std::move(piece.text));
    return out;
}

namespace {

void validate_doc_id(const std::string& id) {
    if (id.empty()) throw UsageError("document id must be non-empty");
    if (id.find("__") != std::string::npos)
        throw UsageError("document id must not contain '__' (reserved as the pair-id separator): " + id);
    for (char c : id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.' && c != '_')
            throw UsageError("document id contains unsupported character '" + std::string(1, c) +
                             "': " + id);
    }
}

}  // namespace

Document make_document(const std::string& id, const std::string& raw_text, DocMeta meta) {
    validate_doc_id(id);
    Document doc;
    doc.id = id;
    doc.text = raw_text;
    doc.meta = std::move(meta);
    int index = 1;
    for (auto& piece : split_sentences_ex(raw_text))
        doc.sentences.push_back({index++, std::move(piece.text)});
    return doc;
}

Segmentation paragraph_segmentation(const Document& doc) {
    Segmentation seg;
    seg.document_id = doc.id;
    std::vector<SentencePiece> pieces;
    try {
        pieces = split_sentences_ex(doc.text);
    } catch (const UsageError&) {
        pieces.clear();
    }
    if (static_cast<int>(pieces.size()) != doc.sentence_count()) {
        // Sentence list does not line up with a re-split of the raw text
        // (hand-edited document); a single all-covering segment is still a
        // valid partition.
        Segment all;
        all.segment_index = 1;
        for (int i = 1; i <= doc.sentence_count(); ++i) all.sentence_indices.push_back(i);
        seg.segments.push_back(std::move(all));
        return seg;
    }
    int current_paragraph = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (pieces[i].paragraph != current_paragraph) {
            current_paragraph = pieces[i].paragraph;
            Segment s;
            s.segment_index = static_cast<int>(seg.segments.size()) + 1;
            seg.segments.push_back(std::move(s));
        }
        seg.segments.back().sentence_indices.push_back(static_cast<int>(i) + 1);
    }
    return seg;
}

std::string numbered_text(const Document& doc) {
    std::string out;
    for (const auto& s : doc.sentences) {
        if (!out.empty()) out.push_back('\n');
        out += std::to_string(s.index);
        out += ". ";
        out += s.text;
    }
    return out;
}

std::string segment_text(const Document& doc, const Segment& segment) {
    std::string out;
    for (int idx : segment.sentence_indices) {
        if (!out.empty()) out.push_back(' ');
        out += doc.sentence_text(idx);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate_segmentation(const Document& doc, const Segmentation& seg) {
    ValidationReport report;
    auto violate = [&](std::string kind, std::string detail, std::vector<int> indices = {}) {
        report.violations.push_back({std::move(kind), std::move(detail), std::move(indices)});
    };

    if (seg.document_id != doc.id)
        violate("wrong-document",
                "segmentation refers to '" + seg.document_id + "', not '" + doc.id + "'");

    const int n = doc.sentence_count();
    std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);

    int expected_index = 1;
    for (const auto& segment : seg.segments) {
        if (segment.segment_index != expected_index)
            violate("bad-segment-index",
                    "expected segment index " + std::to_string(expected_index) + ", found " +
                        std::to_string(segment.segment_index));
        ++expected_index;

        if (segment.sentence_indices.empty()) {
            violate("empty-segment", "segment " + std::to_string(segment.segment_index) +
                                          " contains no sentences");
            continue;
        }
        for (std::size_t k = 0; k < segment.sentence_indices.size(); ++k) {
            int s = segment.sentence_indices[k];
            if (s < 1 || s > n) {
                violate("out-of-range",
                        "segment " + std::to_string(segment.segment_index) + " references sentence " +
                            std::to_string(s) + " outside 1.." + std::to_string(n),
                        {s});
                continue;
            }
            ++seen[static_cast<std::size_t>(s)];
            if (k > 0 && s != segment.sentence_indices[k - 1] + 1)
                violate("non-contiguous",
                        "segment " + std::to_string(segment.segment_index) +
                            " jumps from sentence " + std::to_string(segment.sentence_indices[k - 1]) +
                            " to " + std::to_string(s),
                        {segment.sentence_indices[k - 1], s});
        }
    }

    std::vector<int> gaps, overlaps;
    for (int s = 1; s <= n; ++s) {
        if (seen[static_cast<std::size_t>(s)] == 0) gaps.push_back(s);
        if (seen[static_cast<std::size_t>(s)] > 1) overlaps.push_back(s);
    }
    if (!gaps.empty()) violate("gap", "sentences not covered by any segment", gaps);
    if (!overlaps.empty()) violate("overlap", "sentences covered by multiple segments", overlaps);

    report.ok = report.violations.empty();
    return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

const json& require_field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + "/" + key, "missing required field");
    return *it;
}

std::string require_string(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_string()) throw SchemaError(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

int require_int(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number_integer()) throw SchemaError(path + "/" + key, "expected an integer");
    return v.get<int>();
}

double require_double(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw SchemaError(path + "/" + key, "expected a number");
    return v.get<double>();
}

const json& require_array(const json& j, const char* key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_array()) throw SchemaError(path + "/" + key, "expected an array");
    return v;
}

json parse_json(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SchemaError(origin, "not valid JSON");
    return j;
}

json to_json(const Document& doc) {
    json sentences = json::array();
    for (const auto& s : doc.sentences) sentences.push_back({{"index", s.index}, {"text", s.text}});
    json meta = {{"author_kind", doc.meta.author_kind},
                 {"domain", to_string(doc.meta.domain)},
                 {"prompt_id", doc.meta.prompt_id}};
    if (doc.meta.variant_group) meta["variant_group"] = *doc.meta.variant_group;
    return {{"id", doc.id}, {"text", doc.text}, {"sentences", sentences}, {"meta", meta}};
}

Document document_from_json(const json& j) {
    const std::string path = "/document";
    Document doc;
    doc.id = require_string(j, "id", path);
    doc.text = require_string(j, "text", path);
    const json& meta = require_field(j, "meta", path);
    doc.meta.author_kind = require_string(meta, "author_kind", path + "/meta");
    doc.meta.domain = domain_from_string(require_string(meta, "domain", path + "/meta"));
    doc.meta.prompt_id = require_string(meta, "prompt_id", path + "/meta");
    if (meta.contains("variant_group") && !meta["variant_group"].is_null()) {
        if (!meta["variant_group"].is_string())
            throw SchemaError(path + "/meta/variant_group", "expected a string");
        doc.meta.variant_group = meta["variant_group"].get<std::string>();
    }
    const json& sentences = require_array(j, "sentences", path);
    int expected = 1;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
        std::string spath = path + "/sentences/" + std::to_string(k);
        int index = require_int(sentences[k], "index", spath);
        if (index != expected)
            throw SchemaError(spath + "/index", "sentence indices must be gapless 1..n; expected " +
                                                    std::to_string(expected) + ", found " +
                                                    std::to_string(index));
        ++expected;
        doc.sentences.push_back({index, require_string(sentences[k], "text", spath)});
    }
    if (doc.sentences.empty()) throw SchemaError(path + "/sentences", "document has no sentences");

    std::string joined;
    for (const auto& s : doc.sentences) {
        if (!joined.empty()) joined.push_back(' ');
        joined += s.text;
    }
    if (normalize_whitespace(joined) != normalize_whitespace(doc.text))
        throw SchemaError(path + "/sentences",
                          "sentence texts do not reconstruct the document text "
                          "(after whitespace normalization)");
    return doc;
}

json to_json(const Segmentation& seg) {
    json segments = json::array();
    for (const auto& s : seg.segments)
        segments.push_back({{"segment_index", s.segment_index},
                            {"sentence_indices", s.sentence_indices}});
    return {{"document_id", seg.document_id}, {"segments", segments}};
}

Segmentation segmentation_from_json(const json& j) {
    const std::string path = "/segmentation";
    Segmentation seg;
    seg.document_id = require_string(j, "document_id", path);
    const json& segments = require_array(j, "segments", path);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        std::string spath = path + "/segments/" + std::to_string(k);
        Segment s;
        s.segment_index = require_int(segments[k], "segment_index", spath);
        const json& indices = require_array(segments[k], "sentence_indices", spath);
        for (std::size_t m = 0; m < indices.size(); ++m) {
            if (!indices[m].is_number_integer())
                throw SchemaError(spath + "/sentence_indices/" + std::to_string(m),
                                  "expected an integer");
            s.sentence_indices.push_back(indices[m].get<int>());
        }
        seg.segments.push_back(std::move(s));
    }
    return seg;
}

json to_json(const Qud& qud) {
    return {{"id", qud.id},
            {"source_document_id", qud.source_document_id},
            {"source_segment_index", qud.source_segment_index},
            {"question", qud.question},
            {"abstraction_level", level_token(qud.level)}};
}

Qud qud_from_json(const json& j) {
    const std::string path = "/qud";
    Qud q;
    q.id = require_string(j, "id", path);
    q.source_document_id = require_string(j, "source_document_id", path);
    q.source_segment_index = require_int(j, "source_segment_index", path);
    q.question = require_string(j, "question", path);
    if (q.question.empty()) throw SchemaError(path + "/question", "question must be non-empty");
    q.level = level_from_token(require_string(j, "abstraction_level", path));
    return q;
}

json to_json(const AnswerSet& answers) {
    return {{"qud_id", answers.qud_id},
            {"target_document_id", answers.target_document_id},
            {"sentence_indices", answers.sentence_indices}};
}

AnswerSet answer_set_from_json(const json& j) {
    const std::string path = "/answer_set";
    AnswerSet a;
    a.qud_id = require_string(j, "qud_id", path);
    a.target_document_id = require_string(j, "target_document_id", path);
    const json& indices = require_array(j, "sentence_indices", path);
    for (std::size_t m = 0; m < indices.size(); ++m) {
        if (!indices[m].is_number_integer())
            throw SchemaError(path + "/sentence_indices/" + std::to_string(m),
                              "expected an integer");
        a.sentence_indices.insert(indices[m].get<int>());
    }
    return a;
}

json to_json(const GoldAlignment& gold) {
    json aligned = json::array();
    for (const auto& [i, jdx] : gold.aligned) aligned.push_back({i, jdx});
    return {{"source_document_id", gold.source_document_id},
            {"target_document_id", gold.target_document_id},
            {"aligned", aligned},
            {"provenance", gold.provenance}};
}

GoldAlignment gold_alignment_from_json(const json& j) {
    const std::string path = "/gold_alignment";
    GoldAlignment g;
    g.source_document_id = require_string(j, "source_document_id", path);
    g.target_document_id = require_string(j, "target_document_id", path);
    const json& aligned = require_array(j, "aligned", path);
    for (std::size_t k = 0; k < aligned.size(); ++k) {
        std::string apath = path + "/aligned/" + std::to_string(k);
        if (!aligned[k].is_array() || aligned[k].size() != 2 ||
            !aligned[k][0].is_number_integer() || !aligned[k][1].is_number_integer())
            throw SchemaError(apath, "expected a [source_segment, target_segment] pair");
        g.aligned.insert({aligned[k][0].get<int>(), aligned[k][1].get<int>()});
    }
    if (j.contains("provenance")) {
        const json& prov = j["provenance"];
        if (!prov.is_array()) throw SchemaError(path + "/provenance", "expected an array");
        for (const auto& p : prov) {
            if (!p.is_string()) throw SchemaError(path + "/provenance", "expected strings");
            g.provenance.push_back(p.get<std::string>());
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

Store::Store(std::filesystem::path root) : root_(std::move(root)) {}

void Store::ensure_layout() const {
    for (const auto& dir : {corpus_dir(), derived_dir(), gold_dir(), reports_dir(), runs_dir()})
        std::filesystem::create_directories(dir);
}

std::string Store::pair_id(const std::string& source_doc, const std::string& target_doc) {
    return source_doc + "__" + target_doc;
}

std::pair<std::string, std::string> Store::split_pair_id(const std::string& pair_id) {
    auto pos = pair_id.find("__");
    if (pos == std::string::npos || pos == 0 || pos + 2 >= pair_id.size())
        throw UsageError("bad pair id '" + pair_id + "' (expected <source>__<target>)");
    return {pair_id.substr(0, pos), pair_id.substr(pos + 2)};
}

std::filesystem::path Store::document_path(const std::string& doc_id) const {
    return corpus_dir() / (doc_id + ".json");
}
std::filesystem::path Store::segmentation_path(const std::string& doc_id) const {
    return derived_dir() / (doc_id + ".segments.json");
}
std::filesystem::path Store::abstraction_path(const std::string& doc_id) const {
    return derived_dir() / (doc_id + ".abstract.json");
}
std::filesystem::path Store::quds_path(const std::string& doc_id, AbstractionLevel level) const {
    return derived_dir() / (doc_id + ".quds." + level_token(level) + ".json");
}
std::filesystem::path Store::answers_path(const std::string& source_doc,
                                          const std::string& target_doc,
                                          AbstractionLevel level) const {
    return derived_dir() / (pair_id(source_doc, target_doc) + ".answers." + level_token(level) + ".json");
}
std::filesystem::path Store::matrix_path(const std::string& pair, const std::string& metric_id) const {
    return derived_dir() / (pair + "." + metric_id + ".matrix.json");
}
std::filesystem::path Store::alignment_path(const std::string& pair, const std::string& metric_id) const {
    return derived_dir() / (pair + "." + metric_id + ".alignment.json");
}
std::filesystem::path Store::gold_path(const std::string& pair) const {
    return gold_dir() / (pair + ".alignment.json");
}

bool Store::has_document(const std::string& doc_id) const {
    return std::filesystem::exists(document_path(doc_id));
}

std::vector<std::string> Store::list_documents() const {
    std::vector<std::string> ids;
    if (!std::filesystem::exists(corpus_dir())) return ids;
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir())) {
        if (entry.path().extension() == ".json")
            ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

nlohmann::json Store::load_json(const std::filesystem::path& path) const {
    if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string());
    return parse_json(util::read_file(path), path.string());
}

void Store::save_json(const std::filesystem::path& path, const json& j) const {
    util::write_file_atomic(path, j.dump(2) + "\n");
}

Document Store::load_document(const std::string& doc_id) const {
    return document_from_json(load_json(document_path(doc_id)));
}

void Store::save_document(const Document& doc) const {
    save_json(document_path(doc.id), to_json(doc));
}

Segmentation Store::load_segmentation(const std::string& doc_id) const {
    Segmentation seg = segmentation_from_json(load_json(segmentation_path(doc_id)));
    Document doc = load_document(doc_id);
    auto report = validate_segmentation(doc, seg);
    if (!report.ok)
        throw SchemaError("/segmentation",
                          "stored segmentation for '" + doc_id + "' is invalid: " +
                              report.violations.front().kind + " (" +
                              report.violations.front().detail + ")");
    return seg;
}

std::vector<AnswerSet> Store::load_answer_sets(const std::string& source_doc,
                                               const std::string& target_doc,
                                               AbstractionLevel level) const {
    json j = load_json(answers_path(source_doc, target_doc, level));
    Document target = load_document(target_doc);
    const json& answers = require_array(j, "answers", "/answers_file");
    std::vector<AnswerSet> out;
    for (std::size_t k = 0; k < answers.size(); ++k) {
        AnswerSet a = answer_set_from_json(answers[k]);
        std::string apath = "/answers_file/answers/" + std::to_string(k);
        if (a.target_document_id != target_doc)
            throw SchemaError(apath + "/target_document_id",
                              "expected '" + target_doc + "', found '" + a.target_document_id + "'");
        for (int s : a.sentence_indices)
            if (s < 1 || s > target.sentence_count())
                throw SchemaError(apath + "/sentence_indices",
                                  "sentence " + std::to_string(s) + " does not exist in '" +
                                      target_doc + "' (1.." +
                                      std::to_string(target.sentence_count()) + ")");
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Qud> Store::load_quds(const std::string& doc_id, AbstractionLevel level) const {
    json j = load_json(quds_path(doc_id, level));
    const json& quds = require_array(j, "quds", "/quds_file");
    std::vector<Qud> out;
    for (const auto& q : quds) out.push_back(qud_from_json(q));
    return out;
}

GoldAlignment Store::load_gold(const std::string& pair) const {
    return gold_alignment_from_json(load_json(gold_path(pair)));
}

std::vector<std::string> Store::list_gold_pairs() const {
    std::vector<std::string> pairs;
    if (!std::filesystem::exists(gold_dir())) return pairs;
    for (const auto& entry : std::filesystem::directory_iterator(gold_dir())) {
        auto name = entry.path().filename().string();
        const std::string suffix = ".alignment.json";
        if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix)
            pairs.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace qudsim::corpus
