#include "qudsim/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "qudsim/util.hpp"

namespace qudsim::llm {

using nlohmann::json;

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::Segmentation: return "segmentation";
        case TemplateId::Abstraction: return "abstraction";
        case TemplateId::QudGen: return "qud_gen";
        case TemplateId::QudAnswer: return "qud_answer";
        case TemplateId::Judge: return "judge";
        case TemplateId::DocGenObituary: return "doc_gen_obituary";
        case TemplateId::DocGenCreative: return "doc_gen_creative";
        case TemplateId::DocGenSuri: return "doc_gen_suri";
    }
    throw std::logic_error("bad TemplateId value");
}

TemplateId template_from_string(const std::string& name) {
    for (TemplateId id : {TemplateId::Segmentation, TemplateId::Abstraction, TemplateId::QudGen,
                          TemplateId::QudAnswer, TemplateId::Judge, TemplateId::DocGenObituary,
                          TemplateId::DocGenCreative, TemplateId::DocGenSuri})
        if (to_string(id) == name) return id;
    throw UsageError("unknown prompt template '" + name + "'");
}

namespace {

struct TemplateDef {
    const char* system;
    const char* user;
    std::vector<const char*> slots;
};

const TemplateDef& template_def(TemplateId id) {
    static const TemplateDef segmentation{
        "You will be given text with numbered sentences and your task is to redraw the "
        "paragraph boundaries such that each chunk is about one atomic topic. Each segment "
        "cannot be about multiple topics or about a complex topic. You may not change the "
        "text or change the order of the sentences. For each segment, provide the list of "
        "sentence numbers that belong to that segment.",
        "Document: {document}",
        {"document"}};
    static const TemplateDef abstraction{
        "You will be given several numbered paragraphs. Decontextualize each paragraph such "
        "that the paragraph's general plot is captured. Names, places, extraneous details "
        "and descriptive language should all be abstracted away.",
        "{paragraphs}",
        {"paragraphs"}};
    static const TemplateDef qud_gen{
        "You will be given a paragraph. We are interested in forming unique, high-level, "
        "abstract QUDs with minimal details such that when they are answered, we understand "
        "the main themes of the paragraph. Details specific to the content should be "
        "omitted. QUDs should look like: What were the individual's greatest "
        "accomplishments? What legacy did the individual leave behind?. First answer the "
        "minimum number of QUD(s) required. Then list the QUDs. Do not use conjunctions in "
        "the QUDs.",
        "Paragraph: {paragraph}",
        {"paragraph"}};
    static const TemplateDef qud_answer{
        "You are an expert reading comprehension agent. You will be given a passage with "
        "numbered sentences and a series of questions. For each question, your task is to "
        "extract all sentences that directly help answer it. You must return the question "
        "and a list of sentence numbers and sentences that answer it. The question may not "
        "always be answerable. In that case, return an empty list. Do NOT overgenerate. Do "
        "not modify the original text.",
        "Document: {document}\nQuestions: {questions}",
        {"document", "questions"}};
    static const TemplateDef judge{
        "Given two documents, your task is to rate their semantic structure similarity as "
        "opposed to content or word-overlap. Focus on the underlying semantic structure "
        "present across the entire text, instead of the surface-level features. Rate the "
        "similarity on a scale of 0-100.",
        "Document 1: {document_1}\nDocument 2: {document_2}",
        {"document_1", "document_2"}};
    static const TemplateDef doc_gen_obituary{
        "You are a journalist whose expertise is in writing obituaries. Do not include "
        "titles, prefaces or extraneous details about the obituary.",
        "Write an obituary for {person} who died on {date_of_death}.",
        {"person", "date_of_death"}};
    static const TemplateDef doc_gen_creative{
        "You are a creative author that writes short-stories. Do not include titles, "
        "prefaces or extraneous details about the story.",
        "Write a story given the following prompt: {writing_prompt}",
        {"writing_prompt"}};
    static const TemplateDef doc_gen_suri{"", "{suri_prompt}", {"suri_prompt"}};

    switch (id) {
        case TemplateId::Segmentation: return segmentation;
        case TemplateId::Abstraction: return abstraction;
        case TemplateId::QudGen: return qud_gen;
        case TemplateId::QudAnswer: return qud_answer;
        case TemplateId::Judge: return judge;
        case TemplateId::DocGenObituary: return doc_gen_obituary;
        case TemplateId::DocGenCreative: return doc_gen_creative;
        case TemplateId::DocGenSuri: return doc_gen_suri;
    }
    throw std::logic_error("bad TemplateId value");
}

std::string fill_slots(std::string text, const std::map<std::string, std::string>& slots) {
    for (const auto& [name, value] : slots) {
        std::string marker = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = text.find(marker, pos)) != std::string::npos) {
            text.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    return text;
}

}  // namespace

std::vector<std::string> template_slots(TemplateId id) {
    const auto& def = template_def(id);
    return {def.slots.begin(), def.slots.end()};
}

PromptSpec render_prompt(TemplateId id, const std::map<std::string, std::string>& slots) {
    const TemplateDef& def = template_def(id);
    for (const char* required : def.slots)
        if (!slots.count(required)) throw MissingSlotError(required);
    for (const auto& [name, value] : slots) {
        (void)value;
        bool known = false;
        for (const char* s : def.slots)
            if (name == s) known = true;
        if (!known)
            throw UsageError("template '" + to_string(id) + "' has no slot named '" + name + "'");
    }
    PromptSpec spec;
    spec.template_id = id;
    spec.slots = slots;
    spec.system = fill_slots(def.system, slots);
    spec.user = fill_slots(def.user, slots);
    return spec;
}

BackendConfig fixture_backend_config(BackendRole role, const std::filesystem::path& fixtures_dir) {
    BackendConfig config;
    config.endpoint_url = "fixture://local";
    config.offline = true;
    config.cache_dir = fixtures_dir;
    switch (role) {
        case BackendRole::Pipeline: config.model_name = "gpt-4o"; break;
        case BackendRole::Embedding: config.model_name = "text-embedding-3-small"; break;
        case BackendRole::Judge: config.model_name = "gpt-4o"; break;
    }
    return config;
}

namespace {

json chat_request_json(const PromptSpec& spec, const BackendConfig& config, int attempt) {
    return {{"kind", "chat"},
            {"endpoint", config.endpoint_url},
            {"model", config.model_name},
            {"messages",
             {{{"role", "system"}, {"content", spec.system}},
              {{"role", "user"}, {"content", spec.user}}}},
            {"temperature", config.temperature},
            {"top_p", config.top_p},
            {"attempt", attempt}};
}

json embed_request_json(const std::string& text, const BackendConfig& config) {
    return {{"kind", "embed"},
            {"endpoint", config.endpoint_url},
            {"model", config.model_name},
            {"input", text},
            {"attempt", 1}};
}

std::string head_of(const std::string& text, std::size_t limit = 80) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string Gateway::chat_key(const PromptSpec& spec, const BackendConfig& config, int attempt) {
    return util::sha256_hex(chat_request_json(spec, config, attempt).dump());
}

std::string Gateway::embed_key(const std::string& text, const BackendConfig& config) {
    return util::sha256_hex(embed_request_json(text, config).dump());
}

void Gateway::cache_store(const BackendConfig& config, const std::string& key,
                          const json& request, const json& response) {
    if (config.cache_dir.empty())
        throw UsageError("backend config has no cache_dir");
    json entry = {{"key", key},
                  {"request", request},
                  {"response", response},
                  {"recorded_at", util::iso8601_utc_now()}};
    std::lock_guard<std::mutex> lock(mutex_);
    util::write_file_atomic(config.cache_dir / (key + ".json"), entry.dump(2) + "\n");
}

json Gateway::http_round_trip(const BackendConfig& config, const std::string& api_path,
                              const json& payload, const std::string& describe) {
    auto url = util::split_url(config.endpoint_url);
    std::string body = payload.dump();

    httplib::Headers headers;
    if (!config.api_key_env.empty()) {
        if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    int attempts = 1 + std::max(0, config.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            int delay = config.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(std::min(delay, 4000)));
        }
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.http_calls;
        }
        httplib::Client client(url.base);
        client.set_connection_timeout(config.timeout_seconds, 0);
        client.set_read_timeout(config.timeout_seconds, 0);
        auto res = client.Post(url.path + api_path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + head_of(res->body, 200);
            if (retryable_status(res->status)) continue;
            throw BackendError(describe + " failed (" + last_error + ")");
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw BackendError(describe + ": malformed backend response (not JSON): " +
                               head_of(res->body, 200));
        return parsed;
    }
    throw BackendError(describe + " failed after " + std::to_string(attempts) +
                       " attempts; last error: " + last_error);
}

std::string Gateway::chat(const PromptSpec& spec, const BackendConfig& config, int attempt) {
    json request = chat_request_json(spec, config, attempt);
    std::string key = util::sha256_hex(request.dump());

    auto cache_path = config.cache_dir / (key + ".json");
    if (!config.cache_dir.empty() && std::filesystem::exists(cache_path)) {
        json entry = nlohmann::json::parse(util::read_file(cache_path));
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.hits;
        }
        return entry.at("response").get<std::string>();
    }

    if (config.offline)
        throw BackendError("offline replay miss for " + to_string(spec.template_id) +
                           " (model " + config.model_name + ", attempt " +
                           std::to_string(attempt) + "): no transcript " + key + ".json under " +
                           config.cache_dir.string() + "; prompt head: \"" +
                           head_of(spec.user) + "\"");

    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.misses;
    }

    json payload = {{"model", config.model_name},
                    {"messages", json::array()},
                    {"temperature", config.temperature},
                    {"top_p", config.top_p}};
    if (!spec.system.empty())
        payload["messages"].push_back({{"role", "system"}, {"content", spec.system}});
    payload["messages"].push_back({{"role", "user"}, {"content", spec.user}});

    json response = http_round_trip(config, "/chat/completions", payload,
                                    "chat(" + to_string(spec.template_id) + ")");
    std::string content;
    try {
        content = response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw BackendError("chat(" + to_string(spec.template_id) +
                           "): malformed backend response (no choices[0].message.content)");
    }
    cache_store(config, key, request, json(content));
    return content;
}

std::vector<double> Gateway::embed(const std::string& text, const BackendConfig& config) {
    if (util::normalize_whitespace(text).empty())
        throw std::invalid_argument("embed: input text is empty");

    json request = embed_request_json(text, config);
    std::string key = util::sha256_hex(request.dump());

    auto cache_path = config.cache_dir / (key + ".json");
    if (!config.cache_dir.empty() && std::filesystem::exists(cache_path)) {
        json entry = nlohmann::json::parse(util::read_file(cache_path));
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.hits;
        }
        return entry.at("response").get<std::vector<double>>();
    }

    if (config.offline)
        throw BackendError("offline replay miss for embedding (model " + config.model_name +
                           "): no transcript " + key + ".json under " +
                           config.cache_dir.string() + "; text head: \"" + head_of(text) + "\"");

    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.misses;
    }

    json payload = {{"model", config.model_name}, {"input", text}};
    json response = http_round_trip(config, "/embeddings", payload, "embed");
    std::vector<double> vector;
    try {
        vector = response.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw BackendError("embed: malformed backend response (no data[0].embedding)");
    }
    if (vector.empty()) throw BackendError("embed: backend returned an empty vector");
    cache_store(config, key, request, json(vector));
    return vector;
}

void Gateway::record_chat(const PromptSpec& spec, const BackendConfig& config, int attempt,
                          const std::string& body) {
    json request = chat_request_json(spec, config, attempt);
    cache_store(config, util::sha256_hex(request.dump()), request, json(body));
}

void Gateway::record_embedding(const std::string& text, const BackendConfig& config,
                               const std::vector<double>& vector) {
    json request = embed_request_json(text, config);
    cache_store(config, util::sha256_hex(request.dump()), request, json(vector));
}

CacheStats Gateway::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

std::vector<double> deterministic_fixture_embedding(std::string_view text, int dim) {
    if (dim < 1 || dim > 16)
        throw std::invalid_argument("deterministic_fixture_embedding: dim must be in 1..16");
    auto digest = util::sha256_bytes(text);
    std::vector<double> vector;
    vector.reserve(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        int hi = digest[static_cast<std::size_t>(2 * i)];
        int lo = digest[static_cast<std::size_t>(2 * i + 1)];
        int value = (hi << 8) | lo;
        vector.push_back((value - 32768) / 32768.0);
    }
    bool all_zero = true;
    for (double v : vector)
        if (v != 0.0) all_zero = false;
    if (all_zero) vector[0] = 0.5;
    return vector;
}

}  // namespace qudsim::llm
