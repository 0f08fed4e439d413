#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace qudsim::llm {

enum class TemplateId {
    Segmentation,
    Abstraction,
    QudGen,
    QudAnswer,
    Judge,
    DocGenObituary,
    DocGenCreative,
    DocGenSuri,
};

std::string to_string(TemplateId id);
TemplateId template_from_string(const std::string& name);

// A rendered prompt: template plus filled slots. render_prompt() is the only
// constructor that guarantees the no-unfilled-slot invariant.
struct PromptSpec {
    TemplateId template_id = TemplateId::Segmentation;
    std::map<std::string, std::string> slots;
    std::string system;
    std::string user;
};

// Substitutes {slot} markers in the template. Every declared slot must be
// provided (MissingSlotError otherwise) and unknown slot names are rejected.
PromptSpec render_prompt(TemplateId id, const std::map<std::string, std::string>& slots);

// Slot names declared by a template, for callers that build slot maps
// programmatically.
std::vector<std::string> template_slots(TemplateId id);

struct BackendConfig {
    std::string endpoint_url;           // e.g. https://api.openai.com/v1
    std::string model_name;
    double temperature = 1.0;
    double top_p = 1.0;
    int max_retries = 3;                // transport retries after the first attempt
    int backoff_base_ms = 250;
    int timeout_seconds = 120;
    std::filesystem::path cache_dir;
    bool offline = false;               // replay only: a cache miss is an error
    std::string api_key_env = "QUDSIM_API_KEY";
};

enum class BackendRole { Pipeline, Embedding, Judge };

// Fixed configuration used for recorded-transcript replay. The fixture
// generator and the CLI's --fixtures mode must agree on these values since
// they feed the cache keys.
BackendConfig fixture_backend_config(BackendRole role, const std::filesystem::path& fixtures_dir);

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t http_calls = 0;
};

// Chat-completion and embedding access with a permanent content-addressed
// response cache: cache/<sha256>.json stores the request echo plus the
// response. Safe to call from multiple workers; cache writes are serialized.
class Gateway {
public:
    Gateway() = default;

    // Cache-first chat completion. `attempt` feeds the cache key so a
    // semantic re-prompt is a distinct request.
    std::string chat(const PromptSpec& spec, const BackendConfig& config, int attempt = 1);

    // Cache-first text embedding. Empty input is rejected.
    std::vector<double> embed(const std::string& text, const BackendConfig& config);

    // Writes a response into the cache under the exact key chat()/embed()
    // would compute. Used to record transcripts for offline replay.
    void record_chat(const PromptSpec& spec, const BackendConfig& config, int attempt,
                     const std::string& body);
    void record_embedding(const std::string& text, const BackendConfig& config,
                          const std::vector<double>& vector);

    static std::string chat_key(const PromptSpec& spec, const BackendConfig& config, int attempt);
    static std::string embed_key(const std::string& text, const BackendConfig& config);

    CacheStats stats() const;

private:
    void cache_store(const BackendConfig& config, const std::string& key,
                     const nlohmann::json& request, const nlohmann::json& response);
    nlohmann::json http_round_trip(const BackendConfig& config, const std::string& api_path,
                                   const nlohmann::json& payload, const std::string& describe);

    mutable std::mutex mutex_;
    CacheStats stats_;
};

// Deterministic stand-in embedding used when recording offline fixtures:
// components are derived from a content hash, so the vector depends only on
// the text. Dimension must be in 1..16.
std::vector<double> deterministic_fixture_embedding(std::string_view text, int dim = 16);

}  // namespace qudsim::llm
