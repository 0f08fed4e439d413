#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qudsim::llm {
class Gateway;
struct BackendConfig;
}  // namespace qudsim::llm

namespace qudsim::baselines {

// Lowercased word tokens: alphanumeric runs, apostrophes dropped inside
// words ("don't" -> "dont"), every other byte a separator.
std::vector<std::string> tokenize(std::string_view text);

// Jaccard similarity over the sets of unique n-grams; 0 when both sets are
// empty (e.g. both token lists shorter than n).
double ngram_jaccard(const std::vector<std::string>& source_tokens,
                     const std::vector<std::string>& target_tokens, int n);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// LCS F-measure with equal precision/recall weighting:
// P = LCS/|target|, R = LCS/|source|, F = 2PR/(P+R); 0 when LCS = 0.
double rouge_l(const std::vector<std::string>& source_tokens,
               const std::vector<std::string>& target_tokens);

// Cosine of two embedding vectors, clamped to [-1, 1] against rounding.
// Throws on dimension mismatch, empty, or zero-norm input.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Extracts a 0-100 integer rating from a judge response: prefers the first
// integer after a "score" keyword, then a bare integer response, then the
// first integer anywhere. Values above 100 are rejected.
std::optional<int> parse_judge_score(const std::string& body);

// Prompts the judge backend to rate two segment texts and normalizes the
// 0-100 rating to [0, 1]. A response with no usable score is re-prompted
// once, then raises ParseError with the transcript.
double llm_judge(const std::string& source_text, const std::string& target_text,
                 llm::Gateway& gateway, const llm::BackendConfig& judge_config);

}  // namespace qudsim::baselines
