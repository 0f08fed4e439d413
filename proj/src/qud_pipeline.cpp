#include "qudsim/qud_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "qudsim/util.hpp"

namespace qudsim::pipeline {

using corpus::AbstractionLevel;

// ---------------------------------------------------------------------------
// Prompt builders
// ---------------------------------------------------------------------------

llm::PromptSpec build_segmentation_prompt(const corpus::Document& doc) {
    return llm::render_prompt(llm::TemplateId::Segmentation,
                              {{"document", corpus::numbered_text(doc)}});
}

llm::PromptSpec build_abstraction_prompt(const corpus::Document& doc,
                                         const corpus::Segmentation& seg) {
    std::string paragraphs;
    for (const auto& segment : seg.segments) {
        if (!paragraphs.empty()) paragraphs.push_back('\n');
        paragraphs += "Paragraph " + std::to_string(segment.segment_index) + ": " +
                      corpus::segment_text(doc, segment);
    }
    return llm::render_prompt(llm::TemplateId::Abstraction, {{"paragraphs", paragraphs}});
}

llm::PromptSpec build_qud_prompt(const std::string& segment_or_abstract_text) {
    return llm::render_prompt(llm::TemplateId::QudGen, {{"paragraph", segment_or_abstract_text}});
}

llm::PromptSpec build_answer_prompt(const std::vector<corpus::Qud>& quds,
                                    const corpus::Document& target) {
    std::string questions;
    int k = 1;
    for (const auto& qud : quds) {
        if (!questions.empty()) questions.push_back('\n');
        questions += std::to_string(k++) + ". " + qud.question;
    }
    return llm::render_prompt(llm::TemplateId::QudAnswer,
                              {{"document", corpus::numbered_text(target)},
                               {"questions", questions}});
}

std::string qud_id(const std::string& doc_id, int segment_index, int k,
                   AbstractionLevel level) {
    return doc_id + ".s" + std::to_string(segment_index) + ".q" + std::to_string(k) + "." +
           corpus::level_token(level);
}

// ---------------------------------------------------------------------------
// Parsers
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Integers in `text`, expanding "4-6" style ranges between adjacent numbers.
std::vector<int> integers_in(const std::string& text) {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
        long value = std::stol(text.substr(i, end - i));
        if (value > 1000000) value = 1000000;  // clamp absurd numbers, range guard drops them
        if (end < text.size() && text[end] == '-' && end + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[end + 1]))) {
            std::size_t rend = end + 1;
            while (rend < text.size() && std::isdigit(static_cast<unsigned char>(text[rend])))
                ++rend;
            long hi = std::stol(text.substr(end + 1, rend - end - 1));
            if (hi >= value && hi - value <= 500) {
                for (long v = value; v <= hi; ++v) out.push_back(static_cast<int>(v));
                i = rend;
                continue;
            }
        }
        out.push_back(static_cast<int>(value));
        i = end;
    }
    return out;
}

// Does the line start with an enumeration label like "Segment 3:", "3.",
// "3)" whose first integer is a counter rather than content?
std::size_t label_prefix_length(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && util::is_space_byte(line[i])) ++i;
    std::size_t word_start = i;
    while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i]))) ++i;
    bool has_word = i > word_start;
    if (has_word) {
        while (i < line.size() && util::is_space_byte(line[i])) ++i;
    }
    std::size_t digits_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_start) return 0;
    while (i < line.size() && util::is_space_byte(line[i])) ++i;
    if (i < line.size() && (line[i] == ':' || line[i] == '.' || line[i] == ')')) return i + 1;
    return 0;
}

}  // namespace

std::vector<std::vector<int>> parse_segment_lists(const std::string& body) {
    std::vector<std::vector<int>> segments;

    // Whole-response JSON arrays first.
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_array()) {
        bool shape_ok = true;
        for (const auto& row : j) {
            if (!row.is_array()) {
                shape_ok = false;
                break;
            }
            std::vector<int> seg;
            for (const auto& v : row) {
                if (!v.is_number_integer()) {
                    shape_ok = false;
                    break;
                }
                seg.push_back(v.get<int>());
            }
            if (!shape_ok) break;
            if (!seg.empty()) segments.push_back(std::move(seg));
        }
        if (shape_ok && !segments.empty()) return segments;
        segments.clear();
    }

    for (const auto& line : split_lines(body)) {
        // Multiple bracket groups on one line are separate segments.
        std::vector<std::pair<std::size_t, std::size_t>> groups;
        std::size_t open = line.find('[');
        while (open != std::string::npos) {
            std::size_t close = line.find(']', open + 1);
            if (close == std::string::npos) break;
            groups.push_back({open + 1, close});
            open = line.find('[', close + 1);
        }
        if (groups.size() > 1) {
            for (auto [from, to] : groups) {
                auto ints = integers_in(line.substr(from, to - from));
                if (!ints.empty()) segments.push_back(std::move(ints));
            }
            continue;
        }

        std::string content = line;
        if (std::size_t prefix = label_prefix_length(line); prefix > 0)
            content = line.substr(prefix);
        auto ints = integers_in(content);
        if (!ints.empty()) segments.push_back(std::move(ints));
    }
    return segments;
}

std::vector<std::string> parse_numbered_paragraphs(const std::string& body) {
    struct Block {
        int number = 0;
        std::string text;
    };
    std::vector<Block> blocks;

    for (const auto& line : split_lines(body)) {
        std::size_t prefix = label_prefix_length(line);
        if (prefix > 0) {
            auto nums = integers_in(line.substr(0, prefix));
            Block block;
            block.number = nums.empty() ? 0 : nums.front();
            block.text = line.substr(prefix);
            blocks.push_back(std::move(block));
        } else if (!blocks.empty()) {
            blocks.back().text += "\n" + line;
        } else if (!util::normalize_whitespace(line).empty()) {
            blocks.push_back({0, line});
        }
    }

    std::vector<std::string> texts;
    for (auto& block : blocks) {
        std::string text = util::normalize_whitespace(block.text);
        if (!text.empty()) texts.push_back(std::move(text));
    }

    // Reorder by the reported numbers when they are a permutation of 1..n.
    std::vector<int> numbers;
    for (const auto& block : blocks)
        if (!util::normalize_whitespace(block.text).empty()) numbers.push_back(block.number);
    if (numbers.size() == texts.size() && !texts.empty()) {
        std::vector<int> sorted = numbers;
        std::sort(sorted.begin(), sorted.end());
        bool is_permutation = true;
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i] != static_cast<int>(i) + 1) is_permutation = false;
        if (is_permutation) {
            std::vector<std::string> ordered(texts.size());
            for (std::size_t i = 0; i < texts.size(); ++i)
                ordered[static_cast<std::size_t>(numbers[i] - 1)] = texts[i];
            return ordered;
        }
    }
    return texts;
}

namespace {

std::string strip_listing_prefix(std::string text) {
    std::size_t i = 0;
    while (i < text.size() && util::is_space_byte(text[i])) ++i;
    if (i < text.size() && (text[i] == '-' || text[i] == '*')) {
        ++i;
    } else if (i < text.size() && (text[i] == 'Q' || text[i] == 'q')) {
        std::size_t k = i + 1;
        while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
        if (k < text.size() && (text[k] == ':' || text[k] == '.' || text[k] == ')')) i = k + 1;
    } else {
        std::size_t k = i;
        while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
        if (k > i && k < text.size() && (text[k] == '.' || text[k] == ')' || text[k] == ':'))
            i = k + 1;
    }
    return text.substr(i);
}

std::string normalized_question(const std::string& text) {
    std::string lowered = util::to_lower(util::normalize_whitespace(text));
    std::string out;
    for (char c : lowered)
        if (std::isalnum(static_cast<unsigned char>(c)) || c == ' ') out.push_back(c);
    return util::normalize_whitespace(out);
}

}  // namespace

std::vector<std::string> parse_questions(const std::string& body, int cap,
                                         std::vector<std::string>* warnings) {
    std::vector<std::string> questions;
    for (const auto& line : split_lines(body)) {
        std::string rest = strip_listing_prefix(line);
        std::size_t start = 0;
        while (true) {
            std::size_t qmark = rest.find('?', start);
            if (qmark == std::string::npos) break;
            std::string candidate = util::normalize_whitespace(rest.substr(start, qmark - start));
            start = qmark + 1;
            if (candidate.size() < 3) continue;
            bool has_letter = std::any_of(candidate.begin(), candidate.end(), [](char c) {
                return std::isalpha(static_cast<unsigned char>(c));
            });
            if (!has_letter) continue;
            questions.push_back(candidate + "?");
        }
    }
    if (cap > 0 && static_cast<int>(questions.size()) > cap) {
        if (warnings)
            warnings->push_back("truncated " + std::to_string(questions.size() - cap) +
                                " extra QUD(s) beyond the cap of " + std::to_string(cap));
        questions.resize(static_cast<std::size_t>(cap));
    }
    return questions;
}

namespace {

struct AnswerBlock {
    std::string question_text;
    std::vector<RawAnswerEntry> entries;
};

// A line reads as an answer entry when it leads with a sentence number
// ("3: ...", "[3, 9]", "Sentence 3. ...") or an answers label.
bool entry_shaped(const std::string& line) {
    std::string stripped = util::normalize_whitespace(line);
    if (stripped.empty()) return false;
    std::string lowered = util::to_lower(stripped);
    if (lowered.rfind("answers", 0) == 0 || lowered.rfind("sentences", 0) == 0 ||
        lowered.rfind("sentence", 0) == 0)
        return true;
    if (stripped == "[]" || lowered == "none" || lowered == "empty" || lowered == "unanswerable")
        return true;
    std::size_t i = 0;
    while (i < stripped.size() && (stripped[i] == '[' || stripped[i] == '(')) ++i;
    return i < stripped.size() && std::isdigit(static_cast<unsigned char>(stripped[i]));
}

bool looks_like_question_header(const std::string& line, std::string* question_out) {
    std::string stripped = util::normalize_whitespace(line);
    if (stripped.empty()) return false;
    std::string lowered = util::to_lower(stripped);
    bool labeled = lowered.rfind("question", 0) == 0;
    std::size_t qmark = stripped.rfind('?');
    if (qmark == std::string::npos) {
        if (labeled) {
            *question_out = "";
            return true;
        }
        return false;
    }
    if (!labeled && qmark + 1 != stripped.size()) return false;  // '?' must end the line
    std::string text = stripped.substr(0, qmark + 1);
    if (labeled) {
        auto colon = text.find(':');
        if (colon != std::string::npos) text = text.substr(colon + 1);
    }
    text = strip_listing_prefix(text);
    *question_out = util::normalize_whitespace(text);
    return true;
}

// "3: sentence text" | "[3] sentence" | "Sentence 3. text" | "3" | "[3, 9]"
bool parse_entry_line(const std::string& line, std::vector<RawAnswerEntry>* entries) {
    std::string stripped = util::normalize_whitespace(line);
    if (stripped.empty()) return false;
    std::string lowered = util::to_lower(stripped);
    if (lowered.rfind("answers", 0) == 0 || lowered.rfind("sentences", 0) == 0) {
        auto colon = stripped.find(':');
        stripped = colon == std::string::npos ? "" : util::normalize_whitespace(stripped.substr(colon + 1));
        if (stripped.empty() || stripped == "[]" || util::to_lower(stripped) == "none" ||
            util::to_lower(stripped) == "empty")
            return true;  // explicit empty marker, consumed
        lowered = util::to_lower(stripped);
    }
    if (stripped.empty()) return false;
    if (stripped == "[]" || lowered == "none" || lowered == "empty" || lowered == "unanswerable")
        return true;

    std::size_t i = 0;
    if (lowered.rfind("sentence", 0) == 0) i = std::string("sentence").size();
    while (i < stripped.size() &&
           (util::is_space_byte(stripped[i]) || stripped[i] == '[' || stripped[i] == '('))
        ++i;
    std::size_t digits = i;
    while (digits < stripped.size() && std::isdigit(static_cast<unsigned char>(stripped[digits])))
        ++digits;
    if (digits == i) return false;
    int index = std::stoi(stripped.substr(i, digits - i));

    std::size_t rest = digits;
    // A bare list "[3, 9]" has only digits/punctuation left.
    std::string tail = stripped.substr(rest);
    bool bare_list = !tail.empty() && std::all_of(tail.begin(), tail.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == ',' || c == ']' || c == '[' ||
               c == ')' || c == '(' || util::is_space_byte(c);
    });
    if (tail.empty() || bare_list) {
        entries->push_back({index, ""});
        for (int extra : integers_in(tail)) entries->push_back({extra, ""});
        return true;
    }

    while (rest < stripped.size() &&
           (stripped[rest] == ']' || stripped[rest] == ')' || stripped[rest] == ':' ||
            stripped[rest] == '.' || stripped[rest] == '-' || util::is_space_byte(stripped[rest])))
        ++rest;
    std::string text = stripped.substr(rest);
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"')
        text = text.substr(1, text.size() - 2);
    entries->push_back({index, util::normalize_whitespace(text)});
    return true;
}

}  // namespace

std::vector<std::vector<RawAnswerEntry>> parse_answer_blocks(
    const std::string& body, const std::vector<std::string>& questions,
    std::vector<std::string>* warnings) {
    std::set<std::string> wanted;
    for (const auto& q : questions) wanted.insert(normalized_question(q));

    std::vector<AnswerBlock> blocks;
    for (const auto& line : split_lines(body)) {
        std::string question;
        bool header = looks_like_question_header(line, &question);
        // A line that echoes one of the input questions is always a header;
        // other entry-shaped lines bind to the open block even when the
        // quoted sentence itself ends with a question mark.
        bool echoes_input = header && wanted.count(normalized_question(question)) > 0;
        if (!echoes_input && !blocks.empty() && entry_shaped(line)) {
            parse_entry_line(line, &blocks.back().entries);
            continue;
        }
        if (header) {
            blocks.push_back({question, {}});
            continue;
        }
        if (!blocks.empty()) parse_entry_line(line, &blocks.back().entries);
    }
    if (blocks.empty())
        throw ParseError("answer response has no recognizable question blocks", body);

    // Match blocks to input questions by normalized text, then by order.
    std::vector<std::vector<RawAnswerEntry>> result(questions.size());
    std::vector<bool> block_used(blocks.size(), false);
    std::vector<bool> question_filled(questions.size(), false);

    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].question_text.empty()) continue;
        std::string norm = normalized_question(blocks[b].question_text);
        for (std::size_t q = 0; q < questions.size(); ++q) {
            if (question_filled[q]) continue;
            if (normalized_question(questions[q]) == norm) {
                result[q] = blocks[b].entries;
                question_filled[q] = true;
                block_used[b] = true;
                break;
            }
        }
    }
    std::size_t next_block = 0;
    for (std::size_t q = 0; q < questions.size(); ++q) {
        if (question_filled[q]) continue;
        while (next_block < blocks.size() && block_used[next_block]) ++next_block;
        if (next_block < blocks.size()) {
            result[q] = blocks[next_block].entries;
            block_used[next_block] = true;
            question_filled[q] = true;
        } else if (warnings) {
            warnings->push_back("no answer block for question: " + questions[q]);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

corpus::Segmentation build_segmentation(const std::string& doc_id,
                                        std::vector<std::vector<int>> lists) {
    corpus::Segmentation seg;
    seg.document_id = doc_id;
    int index = 1;
    for (auto& list : lists) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        seg.segments.push_back({index++, std::move(list)});
    }
    return seg;
}

}  // namespace

SegmentationOutcome segment_document(const corpus::Document& doc, llm::Gateway& gateway,
                                     const llm::BackendConfig& config) {
    SegmentationOutcome outcome;
    if (doc.sentence_count() == 1) {
        outcome.segmentation.document_id = doc.id;
        outcome.segmentation.segments.push_back({1, {1}});
        outcome.provenance = "single-sentence";
        return outcome;
    }

    auto prompt = build_segmentation_prompt(doc);
    for (int attempt = 1; attempt <= 2; ++attempt) {
        std::string body = gateway.chat(prompt, config, attempt);
        outcome.transcript_keys.push_back(llm::Gateway::chat_key(prompt, config, attempt));
        auto candidate = build_segmentation(doc.id, parse_segment_lists(body));
        if (!candidate.segments.empty() && corpus::validate_segmentation(doc, candidate).ok) {
            outcome.segmentation = std::move(candidate);
            outcome.provenance = attempt == 1 ? "llm" : "llm-reprompt";
            return outcome;
        }
    }

    outcome.segmentation = corpus::paragraph_segmentation(doc);
    outcome.provenance = "paragraph-fallback";
    return outcome;
}

AbstractionOutcome abstract_segments(const corpus::Document& doc, const corpus::Segmentation& seg,
                                     llm::Gateway& gateway, const llm::BackendConfig& config) {
    auto report = corpus::validate_segmentation(doc, seg);
    if (!report.ok)
        throw std::invalid_argument("abstract_segments: segmentation of '" + doc.id +
                                    "' is invalid (" + report.violations.front().kind + ")");

    AbstractionOutcome outcome;
    auto prompt = build_abstraction_prompt(doc, seg);
    std::string body;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        body = gateway.chat(prompt, config, attempt);
        outcome.transcript_keys.push_back(llm::Gateway::chat_key(prompt, config, attempt));
        auto texts = parse_numbered_paragraphs(body);
        if (static_cast<int>(texts.size()) == seg.segment_count()) {
            for (int k = 0; k < seg.segment_count(); ++k)
                outcome.segments.push_back(
                    {doc.id, seg.segments[static_cast<std::size_t>(k)].segment_index,
                     texts[static_cast<std::size_t>(k)]});
            return outcome;
        }
    }
    throw ParseError("abstraction returned a wrong paragraph count for '" + doc.id +
                         "' (expected " + std::to_string(seg.segment_count()) + ")",
                     body);
}

QudGenOutcome generate_quds(const std::string& document_id, int segment_index,
                            const std::string& text, AbstractionLevel level,
                            llm::Gateway& gateway, const llm::BackendConfig& config) {
    if (util::normalize_whitespace(text).empty())
        throw std::invalid_argument("generate_quds: empty segment text for " + document_id +
                                    " segment " + std::to_string(segment_index));

    QudGenOutcome outcome;
    auto prompt = build_qud_prompt(text);
    std::string body;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        body = gateway.chat(prompt, config, attempt);
        outcome.transcript_keys.push_back(llm::Gateway::chat_key(prompt, config, attempt));
        auto questions = parse_questions(body, 2, &outcome.warnings);
        if (!questions.empty()) {
            int k = 1;
            for (auto& question : questions) {
                corpus::Qud qud;
                qud.id = qud_id(document_id, segment_index, k, level);
                qud.source_document_id = document_id;
                qud.source_segment_index = segment_index;
                qud.question = std::move(question);
                qud.level = level;
                outcome.quds.push_back(std::move(qud));
                ++k;
            }
            return outcome;
        }
    }
    throw ParseError("QUD generation produced no parseable questions for " + document_id +
                         " segment " + std::to_string(segment_index),
                     body);
}

AnswerOutcome answer_quds(const std::vector<corpus::Qud>& quds, const corpus::Document& target,
                          llm::Gateway& gateway, const llm::BackendConfig& config) {
    if (quds.empty()) throw std::invalid_argument("answer_quds: no QUDs given");

    std::vector<std::string> questions;
    for (const auto& qud : quds) questions.push_back(qud.question);

    AnswerOutcome outcome;
    auto prompt = build_answer_prompt(quds, target);
    std::string body;
    std::vector<std::vector<RawAnswerEntry>> per_question;
    bool parsed = false;
    for (int attempt = 1; attempt <= 2 && !parsed; ++attempt) {
        body = gateway.chat(prompt, config, attempt);
        outcome.transcript_keys.push_back(llm::Gateway::chat_key(prompt, config, attempt));
        try {
            per_question = parse_answer_blocks(body, questions, &outcome.warnings);
            parsed = true;
        } catch (const ParseError&) {
            if (attempt == 2) throw;
        }
    }

    for (std::size_t q = 0; q < quds.size(); ++q) {
        corpus::AnswerSet answer;
        answer.qud_id = quds[q].id;
        answer.target_document_id = target.id;
        for (const auto& entry : per_question[q]) {
            if (entry.sentence_index < 1 || entry.sentence_index > target.sentence_count()) {
                outcome.warnings.push_back(
                    "dropped out-of-range sentence " + std::to_string(entry.sentence_index) +
                    " for QUD " + quds[q].id);
                continue;
            }
            if (!entry.text.empty()) {
                std::string original =
                    util::normalize_whitespace(target.sentence_text(entry.sentence_index));
                if (util::normalize_whitespace(entry.text) != original) {
                    outcome.warnings.push_back("dropped sentence " +
                                               std::to_string(entry.sentence_index) + " for QUD " +
                                               quds[q].id + ": returned text does not match");
                    continue;
                }
            }
            answer.sentence_indices.insert(entry.sentence_index);
        }
        outcome.answers.push_back(std::move(answer));
    }
    return outcome;
}

AnsweringSegments answering_segments(const corpus::AnswerSet& answers,
                                     const corpus::Segmentation& target_segmentation) {
    AnsweringSegments result;
    result.qud_id = answers.qud_id;
    result.target_document_id = answers.target_document_id;
    for (const auto& segment : target_segmentation.segments)
        for (int sentence : segment.sentence_indices)
            if (answers.sentence_indices.count(sentence)) {
                result.segment_indices.insert(segment.segment_index);
                break;
            }
    return result;
}

}  // namespace qudsim::pipeline
