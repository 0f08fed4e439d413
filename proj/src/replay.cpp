#include "qudsim/replay.hpp"

#include <cmath>
#include <map>

#include "qudsim/baselines.hpp"
#include "qudsim/llm_gateway.hpp"
#include "qudsim/qud_pipeline.hpp"
#include "qudsim/util.hpp"

namespace qudsim::corpus {

std::vector<Document> load_corpus_manifest(const std::filesystem::path& manifest_path) {
    nlohmann::json manifest =
        parse_json(util::read_file(manifest_path), manifest_path.string());
    const nlohmann::json& entries = require_array(manifest, "documents", "/manifest");
    auto base = manifest_path.parent_path();

    std::vector<Document> docs;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        std::string path = "/manifest/documents/" + std::to_string(k);
        const auto& entry = entries[k];
        DocMeta meta;
        meta.author_kind = require_string(entry, "author_kind", path);
        meta.domain = domain_from_string(require_string(entry, "domain", path));
        meta.prompt_id = require_string(entry, "prompt_id", path);
        if (entry.contains("variant_group"))
            meta.variant_group = require_string(entry, "variant_group", path);
        auto raw = util::read_file(base / require_string(entry, "file", path));
        docs.push_back(make_document(require_string(entry, "id", path), raw, meta));
    }
    return docs;
}

}  // namespace qudsim::corpus

namespace qudsim::replay {

using corpus::AbstractionLevel;
using corpus::Document;
using corpus::Segmentation;
using nlohmann::json;

namespace {

Segmentation authored_segmentation(const Document& doc, const json& lists) {
    Segmentation seg;
    seg.document_id = doc.id;
    int index = 1;
    for (const auto& list : lists) {
        corpus::Segment segment;
        segment.segment_index = index++;
        for (const auto& v : list) segment.sentence_indices.push_back(v.get<int>());
        seg.segments.push_back(std::move(segment));
    }
    auto report = corpus::validate_segmentation(doc, seg);
    if (!report.ok)
        throw UsageError("authored segmentation for '" + doc.id + "' is invalid: " +
                         report.violations.front().detail);
    return seg;
}

std::string segmentation_body(const Segmentation& seg) {
    std::string body = "Here are the segments:\n";
    for (const auto& segment : seg.segments) {
        body += "Segment " + std::to_string(segment.segment_index) + ": ";
        for (std::size_t i = 0; i < segment.sentence_indices.size(); ++i) {
            if (i) body += ", ";
            body += std::to_string(segment.sentence_indices[i]);
        }
        body += "\n";
    }
    return body;
}

std::string abstraction_body(const std::vector<std::string>& texts) {
    std::string body;
    for (std::size_t k = 0; k < texts.size(); ++k)
        body += "Paragraph " + std::to_string(k + 1) + ": " + texts[k] + "\n";
    return body;
}

std::string qud_body(const std::vector<std::string>& questions) {
    std::string body = "The minimum number of QUDs required is " +
                       std::to_string(questions.size()) + ".\n";
    for (std::size_t k = 0; k < questions.size(); ++k)
        body += std::to_string(k + 1) + ". " + questions[k] + "\n";
    return body;
}

std::string answers_body(const std::vector<corpus::Qud>& quds,
                         const std::map<std::string, std::vector<int>>& answers,
                         const Document& target) {
    std::string body;
    for (const auto& qud : quds) {
        auto it = answers.find(qud.id);
        if (it == answers.end())
            throw UsageError("authoring data has no answers entry for QUD '" + qud.id +
                             "' against '" + target.id + "'");
        body += "Question: " + qud.question + "\n";
        if (it->second.empty()) {
            body += "Answers: []\n";
        } else {
            body += "Answers:\n";
            for (int idx : it->second) {
                if (idx < 1 || idx > target.sentence_count())
                    throw UsageError("authored answer index " + std::to_string(idx) +
                                     " out of range for '" + target.id + "'");
                body += std::to_string(idx) + ": " + target.sentence_text(idx) + "\n";
            }
        }
        body += "\n";
    }
    return body;
}

std::vector<corpus::Qud> authored_quds(const Document& doc, const json& per_segment,
                                       AbstractionLevel level) {
    std::vector<corpus::Qud> quds;
    for (std::size_t s = 0; s < per_segment.size(); ++s) {
        int k = 1;
        for (const auto& question : per_segment[s]) {
            corpus::Qud qud;
            qud.id = pipeline::qud_id(doc.id, static_cast<int>(s) + 1, k++, level);
            qud.source_document_id = doc.id;
            qud.source_segment_index = static_cast<int>(s) + 1;
            qud.question = question.get<std::string>();
            qud.level = level;
            quds.push_back(std::move(qud));
        }
    }
    return quds;
}

}  // namespace

RecordSummary record_fixtures(const std::filesystem::path& fixtures_root,
                              const std::filesystem::path& out_dir) {
    auto docs = corpus::load_corpus_manifest(fixtures_root / "corpus_manifest.json");
    std::map<std::string, Document> by_id;
    for (auto& doc : docs) by_id.emplace(doc.id, std::move(doc));

    json authoring = corpus::parse_json(
        util::read_file(fixtures_root / "authoring" / "responses.json"), "responses.json");

    std::filesystem::create_directories(out_dir);
    llm::Gateway gateway;
    auto chat_cfg = llm::fixture_backend_config(llm::BackendRole::Pipeline, out_dir);
    auto embed_cfg = llm::fixture_backend_config(llm::BackendRole::Embedding, out_dir);
    auto judge_cfg = llm::fixture_backend_config(llm::BackendRole::Judge, out_dir);

    RecordSummary summary;
    auto record = [&](const llm::PromptSpec& spec, const std::string& body) {
        gateway.record_chat(spec, chat_cfg, 1, body);
        ++summary.chat_transcripts;
    };

    std::map<std::string, Segmentation> segmentations;
    std::map<std::string, std::vector<std::string>> abstractions;

    for (const auto& [doc_id, lists] : authoring.at("segmentations").items()) {
        const Document& doc = by_id.at(doc_id);
        Segmentation seg = authored_segmentation(doc, lists);
        record(pipeline::build_segmentation_prompt(doc), segmentation_body(seg));
        segmentations.emplace(doc_id, std::move(seg));
    }

    for (const auto& [doc_id, texts_json] : authoring.at("abstractions").items()) {
        const Document& doc = by_id.at(doc_id);
        const Segmentation& seg = segmentations.at(doc_id);
        std::vector<std::string> texts;
        for (const auto& t : texts_json) texts.push_back(t.get<std::string>());
        if (static_cast<int>(texts.size()) != seg.segment_count())
            throw UsageError("authored abstraction count mismatch for '" + doc_id + "'");
        record(pipeline::build_abstraction_prompt(doc, seg), abstraction_body(texts));
        abstractions.emplace(doc_id, std::move(texts));
    }

    // QUD generation transcripts: one call per (segment, level).
    std::map<std::string, std::map<std::string, std::vector<corpus::Qud>>> quds_by_doc_level;
    for (const auto& [doc_id, levels] : authoring.at("quds").items()) {
        const Document& doc = by_id.at(doc_id);
        const Segmentation& seg = segmentations.at(doc_id);
        for (const auto& [token, per_segment] : levels.items()) {
            AbstractionLevel level = corpus::level_from_token(token);
            if (static_cast<int>(per_segment.size()) != seg.segment_count())
                throw UsageError("authored QUD segment count mismatch for '" + doc_id + "' level " +
                                 token);
            for (std::size_t s = 0; s < per_segment.size(); ++s) {
                std::vector<std::string> questions;
                for (const auto& q : per_segment[s]) questions.push_back(q.get<std::string>());
                if (questions.empty() || questions.size() > 2)
                    throw UsageError("authored QUD count for '" + doc_id + "' segment " +
                                     std::to_string(s + 1) + " must be 1 or 2");
                std::string text = level == AbstractionLevel::Abstract
                                       ? abstractions.at(doc_id)[s]
                                       : corpus::segment_text(
                                             doc, seg.segments[s]);
                record(pipeline::build_qud_prompt(text), qud_body(questions));
            }
            quds_by_doc_level[doc_id][token] = authored_quds(doc, per_segment, level);
        }
    }

    // Answer transcripts: one call per authored (ordered pair, level).
    for (const auto& [pair, levels] : authoring.at("answers").items()) {
        auto [source_id, target_id] = corpus::Store::split_pair_id(pair);
        const Document& target = by_id.at(target_id);
        for (const auto& [token, answers_json] : levels.items()) {
            const auto& quds = quds_by_doc_level.at(source_id).at(token);
            std::map<std::string, std::vector<int>> answers;
            for (const auto& [qud_key, indices] : answers_json.items()) {
                std::vector<int> list;
                for (const auto& v : indices) list.push_back(v.get<int>());
                answers[qud_key] = std::move(list);
            }
            record(pipeline::build_answer_prompt(quds, target),
                   answers_body(quds, answers, target));
        }
    }

    // Embedding transcripts for every authored segment text.
    for (const auto& [doc_id, seg] : segmentations) {
        const Document& doc = by_id.at(doc_id);
        for (const auto& segment : seg.segments) {
            std::string text = corpus::segment_text(doc, segment);
            gateway.record_embedding(text, embed_cfg,
                                     llm::deterministic_fixture_embedding(text));
            ++summary.embeddings;
        }
    }

    // Judge transcripts (synthetic stand-in ratings) for the pairs listed in
    // the authoring data.
    if (authoring.contains("judge_pairs")) {
        for (const auto& pair_json : authoring.at("judge_pairs")) {
            std::string pair = pair_json.get<std::string>();
            auto [source_id, target_id] = corpus::Store::split_pair_id(pair);
            const Document& source = by_id.at(source_id);
            const Document& target = by_id.at(target_id);
            const Segmentation& source_seg = segmentations.at(source_id);
            const Segmentation& target_seg = segmentations.at(target_id);
            for (const auto& s : source_seg.segments) {
                for (const auto& t : target_seg.segments) {
                    std::string s_text = corpus::segment_text(source, s);
                    std::string t_text = corpus::segment_text(target, t);
                    double rough = baselines::rouge_l(baselines::tokenize(s_text),
                                                      baselines::tokenize(t_text));
                    int score = static_cast<int>(std::lround(100.0 * rough));
                    auto spec = llm::render_prompt(llm::TemplateId::Judge,
                                                   {{"document_1", s_text},
                                                    {"document_2", t_text}});
                    gateway.record_chat(spec, judge_cfg, 1,
                                        "Score: " + std::to_string(score) + "/100");
                    ++summary.chat_transcripts;
                }
            }
        }
    }

    return summary;
}

}  // namespace qudsim::replay
