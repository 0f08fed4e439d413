#include "qudsim/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qudsim/llm_gateway.hpp"
#include "qudsim/util.hpp"

namespace qudsim::baselines {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '\'') {
            // apostrophe joins its word
        } else if (c == 0xE2 && i + 2 < text.size() &&
                   static_cast<unsigned char>(text[i + 1]) == 0x80 &&
                   static_cast<unsigned char>(text[i + 2]) == 0x99) {
            i += 2;  // curly apostrophe
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

namespace {

std::set<std::string> ngram_set(const std::vector<std::string>& tokens, int n) {
    std::set<std::string> grams;
    if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return grams;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string gram = tokens[i];
        for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
            gram.push_back('\x1f');
            gram += tokens[i + k];
        }
        grams.insert(std::move(gram));
    }
    return grams;
}

}  // namespace

double ngram_jaccard(const std::vector<std::string>& source_tokens,
                     const std::vector<std::string>& target_tokens, int n) {
    if (n < 1) throw std::invalid_argument("ngram_jaccard: n must be >= 1");
    auto s = ngram_set(source_tokens, n);
    auto t = ngram_set(target_tokens, n);
    if (s.empty() && t.empty()) return 0.0;
    std::size_t intersection = 0;
    for (const auto& gram : s)
        if (t.count(gram)) ++intersection;
    std::size_t unions = s.size() + t.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const std::vector<std::string>& source_tokens,
               const std::vector<std::string>& target_tokens) {
    std::size_t lcs = lcs_length(source_tokens, target_tokens);
    if (lcs == 0) return 0.0;
    double precision = static_cast<double>(lcs) / static_cast<double>(target_tokens.size());
    double recall = static_cast<double>(lcs) / static_cast<double>(source_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cosine: empty embedding");
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm embedding");
    double value = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(value, -1.0, 1.0);
}

namespace {

std::optional<int> integer_at(const std::string& text, std::size_t pos) {
    std::size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos || end - pos > 3) return std::nullopt;
    int value = std::stoi(text.substr(pos, end - pos));
    if (value > 100) return std::nullopt;
    return value;
}

std::optional<int> first_integer_from(const std::string& text, std::size_t start) {
    for (std::size_t i = start; i < text.size(); ++i)
        if (std::isdigit(static_cast<unsigned char>(text[i]))) return integer_at(text, i);
    return std::nullopt;
}

}  // namespace

std::optional<int> parse_judge_score(const std::string& body) {
    std::string lower = util::to_lower(body);
    auto key = lower.find("score");
    if (key != std::string::npos) {
        if (auto v = first_integer_from(body, key)) return v;
    }
    std::string trimmed = util::normalize_whitespace(body);
    if (!trimmed.empty() &&
        std::all_of(trimmed.begin(), trimmed.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        if (auto v = integer_at(trimmed, 0)) return v;
    }
    return first_integer_from(body, 0);
}

double llm_judge(const std::string& source_text, const std::string& target_text,
                 llm::Gateway& gateway, const llm::BackendConfig& judge_config) {
    auto spec = llm::render_prompt(llm::TemplateId::Judge, {{"document_1", source_text},
                                                            {"document_2", target_text}});
    std::string body = gateway.chat(spec, judge_config, 1);
    auto score = parse_judge_score(body);
    if (!score) {
        body = gateway.chat(spec, judge_config, 2);
        score = parse_judge_score(body);
    }
    if (!score) throw ParseError("judge response contains no 0-100 score", body);
    return static_cast<double>(*score) / 100.0;
}

}  // namespace qudsim::baselines
