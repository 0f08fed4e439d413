#include "qudsim/cli.hpp"

#include <chrono>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qudsim/alignment.hpp"
#include "qudsim/baselines.hpp"
#include "qudsim/corpus.hpp"
#include "qudsim/eval_harness.hpp"
#include "qudsim/llm_gateway.hpp"
#include "qudsim/qud_pipeline.hpp"
#include "qudsim/replay.hpp"
#include "qudsim/reports.hpp"
#include "qudsim/scoring.hpp"
#include "qudsim/util.hpp"

namespace qudsim::cli {

using corpus::AbstractionLevel;
using nlohmann::json;

namespace {

json default_config() {
    json backend = {{"endpoint_url", "http://localhost:8000/v1"}};
    json config = {{"backends",
                    {{"pipeline", backend},
                     {"embedding", backend},
                     {"judge", backend}}},
                   {"temperature", 1.0},
                   {"top_p", 1.0},
                   {"max_retries", 3},
                   {"seed", 17},
                   {"dev_fraction", 0.2},
                   {"parallel", 1},
                   {"cache_dir", "cache"}};
    config["backends"]["pipeline"]["model_name"] = "gpt-4o";
    config["backends"]["embedding"]["model_name"] = "text-embedding-3-small";
    config["backends"]["judge"]["model_name"] = "gpt-4o";
    return config;
}

void merge_into(json& base, const json& overlay) {
    for (const auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object())
            merge_into(base[key], value);
        else
            base[key] = value;
    }
}

struct Ctx {
    corpus::Store store{"."};
    json config;
    std::string config_fingerprint;
    bool fixtures = false;
    std::filesystem::path fixtures_dir;
    unsigned parallel = 1;
    std::uint64_t seed = 17;
    double dev_fraction = 0.2;
    llm::Gateway gateway;
    llm::BackendConfig pipeline_cfg;
    llm::BackendConfig embed_cfg;
    llm::BackendConfig judge_cfg;
};

llm::BackendConfig backend_from_config(const json& config, const char* role,
                                       const std::filesystem::path& workspace) {
    const json& backend = config.at("backends").at(role);
    llm::BackendConfig cfg;
    cfg.endpoint_url = backend.at("endpoint_url").get<std::string>();
    cfg.model_name = backend.at("model_name").get<std::string>();
    cfg.temperature = backend.value("temperature", config.at("temperature").get<double>());
    cfg.top_p = backend.value("top_p", config.at("top_p").get<double>());
    cfg.max_retries = backend.value("max_retries", config.at("max_retries").get<int>());
    if (backend.contains("api_key_env")) cfg.api_key_env = backend.at("api_key_env");
    std::filesystem::path cache = config.at("cache_dir").get<std::string>();
    cfg.cache_dir = cache.is_absolute() ? cache : workspace / cache;
    return cfg;
}

void init_context(Ctx& ctx, const std::string& workspace, const std::string& config_path,
                  const std::string& fixtures_dir, std::optional<std::uint64_t> seed,
                  std::optional<unsigned> parallel) {
    ctx.store = corpus::Store(workspace);
    ctx.store.ensure_layout();

    ctx.config = default_config();
    if (!config_path.empty()) {
        json file = corpus::parse_json(util::read_file(config_path), config_path);
        merge_into(ctx.config, file);
    }
    if (seed) ctx.config["seed"] = *seed;
    if (parallel) ctx.config["parallel"] = *parallel;

    ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
    ctx.parallel = ctx.config.at("parallel").get<unsigned>();
    ctx.dev_fraction = ctx.config.at("dev_fraction").get<double>();

    if (!fixtures_dir.empty()) {
        ctx.fixtures = true;
        ctx.fixtures_dir = fixtures_dir;
        ctx.pipeline_cfg = llm::fixture_backend_config(llm::BackendRole::Pipeline, fixtures_dir);
        ctx.embed_cfg = llm::fixture_backend_config(llm::BackendRole::Embedding, fixtures_dir);
        ctx.judge_cfg = llm::fixture_backend_config(llm::BackendRole::Judge, fixtures_dir);
    } else {
        ctx.pipeline_cfg = backend_from_config(ctx.config, "pipeline", workspace);
        ctx.embed_cfg = backend_from_config(ctx.config, "embedding", workspace);
        ctx.judge_cfg = backend_from_config(ctx.config, "judge", workspace);
        std::filesystem::create_directories(ctx.pipeline_cfg.cache_dir);
    }

    json fingerprint_input = ctx.config;
    fingerprint_input["fixtures"] = ctx.fixtures;
    ctx.config_fingerprint = util::sha256_hex(fingerprint_input.dump()).substr(0, 12);
    return ctx;
}

std::vector<std::string> resolve_docs(const Ctx& ctx, const std::vector<std::string>& docs,
                                      bool all_docs) {
    if (all_docs) {
        auto ids = ctx.store.list_documents();
        if (ids.empty()) throw MissingArtifactError("no documents in " +
                                                    ctx.store.corpus_dir().string());
        return ids;
    }
    if (docs.empty()) throw UsageError("specify --doc <id> (repeatable) or --all");
    return docs;
}

std::pair<std::string, std::string> parse_pair(const std::string& pair) {
    auto pos = pair.find(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= pair.size())
        throw UsageError("expected --pair <source>:<target>, got '" + pair + "'");
    return {pair.substr(0, pos), pair.substr(pos + 1)};
}

std::vector<std::pair<std::string, std::string>> resolve_pairs(const Ctx& ctx,
                                                               const std::string& pair,
                                                               bool all_pairs, bool both) {
    std::vector<std::pair<std::string, std::string>> out;
    if (all_pairs) {
        auto ids = ctx.store.list_documents();
        for (const auto& a : ids)
            for (const auto& b : ids)
                if (a != b) out.push_back({a, b});
        if (out.empty()) throw MissingArtifactError("no document pairs in the corpus");
        return out;
    }
    if (pair.empty()) throw UsageError("specify --pair <source>:<target> or --all-pairs");
    auto [source, target] = parse_pair(pair);
    out.push_back({source, target});
    if (both && source != target) out.push_back({target, source});
    return out;
}

// Pair ids of stored matrices/alignments for one metric.
std::vector<std::string> list_metric_files(const Ctx& ctx, const std::string& metric,
                                           const std::string& kind) {
    std::string suffix = "." + metric + "." + kind + ".json";
    std::vector<std::string> pairs;
    if (!std::filesystem::exists(ctx.store.derived_dir())) return pairs;
    for (const auto& entry : std::filesystem::directory_iterator(ctx.store.derived_dir())) {
        auto name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix)
            pairs.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

AbstractionLevel parse_level(const std::string& level) {
    return corpus::level_from_token(level);
}

std::string qudsim_metric_id(AbstractionLevel level) {
    return level == AbstractionLevel::Abstract ? "qudsim" : "qudsim-specific";
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ingest(Ctx& ctx, const std::string& manifest) {
    auto docs = corpus::load_corpus_manifest(manifest);
    for (const auto& doc : docs) {
        ctx.store.save_document(doc);
        std::cout << "ingested " << doc.id << " (" << doc.sentence_count() << " sentences)\n";
    }
    return 0;
}

int cmd_segment(Ctx& ctx, const std::vector<std::string>& doc_args, bool all_docs) {
    auto docs = resolve_docs(ctx, doc_args, all_docs);
    std::vector<std::string> lines(docs.size());
    util::parallel_for(docs.size(), ctx.parallel, [&](std::size_t i) {
        auto doc = ctx.store.load_document(docs[i]);
        auto outcome = pipeline::segment_document(doc, ctx.gateway, ctx.pipeline_cfg);
        json j = corpus::to_json(outcome.segmentation);
        j["provenance"] = outcome.provenance;
        j["transcripts"] = outcome.transcript_keys;
        j["config_fingerprint"] = ctx.config_fingerprint;
        ctx.store.save_json(ctx.store.segmentation_path(doc.id), j);
        lines[i] = "segmented " + doc.id + ": " +
                   std::to_string(outcome.segmentation.segment_count()) + " segments (" +
                   outcome.provenance + ")";
    });
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
}

int cmd_abstract(Ctx& ctx, const std::vector<std::string>& doc_args, bool all_docs) {
    auto docs = resolve_docs(ctx, doc_args, all_docs);
    std::vector<std::string> lines(docs.size());
    util::parallel_for(docs.size(), ctx.parallel, [&](std::size_t i) {
        auto doc = ctx.store.load_document(docs[i]);
        auto seg = ctx.store.load_segmentation(doc.id);
        auto outcome = pipeline::abstract_segments(doc, seg, ctx.gateway, ctx.pipeline_cfg);
        json abstracts = json::array();
        for (const auto& a : outcome.segments)
            abstracts.push_back(
                {{"segment_index", a.segment_index}, {"abstract_text", a.abstract_text}});
        json j = {{"document_id", doc.id},
                  {"abstracts", abstracts},
                  {"transcripts", outcome.transcript_keys},
                  {"config_fingerprint", ctx.config_fingerprint}};
        ctx.store.save_json(ctx.store.abstraction_path(doc.id), j);
        lines[i] = "abstracted " + doc.id + ": " + std::to_string(outcome.segments.size()) +
                   " segments";
    });
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
}

std::vector<std::string> load_abstract_texts(const Ctx& ctx, const std::string& doc_id,
                                             const corpus::Segmentation& seg) {
    json j = ctx.store.load_json(ctx.store.abstraction_path(doc_id));
    const json& abstracts = corpus::require_array(j, "abstracts", "/abstraction_file");
    if (static_cast<int>(abstracts.size()) != seg.segment_count())
        throw SchemaError("/abstraction_file/abstracts",
                          "abstraction count does not match the segmentation of '" + doc_id + "'");
    std::vector<std::string> texts;
    for (const auto& a : abstracts)
        texts.push_back(corpus::require_string(a, "abstract_text", "/abstraction_file/abstracts"));
    return texts;
}

int cmd_quds(Ctx& ctx, const std::vector<std::string>& doc_args, bool all_docs,
             const std::string& level_token) {
    AbstractionLevel level = parse_level(level_token);
    auto docs = resolve_docs(ctx, doc_args, all_docs);
    std::vector<std::string> lines(docs.size());
    util::parallel_for(docs.size(), ctx.parallel, [&](std::size_t i) {
        auto doc = ctx.store.load_document(docs[i]);
        auto seg = ctx.store.load_segmentation(doc.id);
        std::vector<std::string> texts;
        if (level == AbstractionLevel::Abstract) {
            texts = load_abstract_texts(ctx, doc.id, seg);
        } else {
            for (const auto& segment : seg.segments)
                texts.push_back(corpus::segment_text(doc, segment));
        }
        json quds = json::array();
        json warnings = json::array();
        json transcripts = json::array();
        int count = 0;
        for (int s = 0; s < seg.segment_count(); ++s) {
            auto outcome = pipeline::generate_quds(doc.id, s + 1,
                                                   texts[static_cast<std::size_t>(s)], level,
                                                   ctx.gateway, ctx.pipeline_cfg);
            for (const auto& qud : outcome.quds) {
                quds.push_back(corpus::to_json(qud));
                ++count;
            }
            for (const auto& w : outcome.warnings) warnings.push_back(w);
            for (const auto& key : outcome.transcript_keys) transcripts.push_back(key);
        }
        json j = {{"document_id", doc.id},
                  {"level", corpus::level_token(level)},
                  {"quds", quds},
                  {"warnings", warnings},
                  {"transcripts", transcripts},
                  {"config_fingerprint", ctx.config_fingerprint}};
        ctx.store.save_json(ctx.store.quds_path(doc.id, level), j);
        lines[i] = "generated " + std::to_string(count) + " QUDs for " + doc.id + " (level " +
                   corpus::level_token(level) + ")";
    });
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
}

int cmd_answer(Ctx& ctx, const std::string& pair, bool all_pairs, bool both,
               const std::string& level_token) {
    AbstractionLevel level = parse_level(level_token);
    auto pairs = resolve_pairs(ctx, pair, all_pairs, both);
    std::vector<std::string> lines(pairs.size());
    util::parallel_for(pairs.size(), ctx.parallel, [&](std::size_t i) {
        const auto& [source_id, target_id] = pairs[i];
        auto quds = ctx.store.load_quds(source_id, level);
        auto target = ctx.store.load_document(target_id);
        auto outcome = pipeline::answer_quds(quds, target, ctx.gateway, ctx.pipeline_cfg);
        json answers = json::array();
        int answered = 0;
        for (const auto& a : outcome.answers) {
            answers.push_back(corpus::to_json(a));
            if (!a.sentence_indices.empty()) ++answered;
        }
        json j = {{"pair_id", corpus::Store::pair_id(source_id, target_id)},
                  {"source_document_id", source_id},
                  {"target_document_id", target_id},
                  {"level", corpus::level_token(level)},
                  {"answers", answers},
                  {"warnings", outcome.warnings},
                  {"transcripts", outcome.transcript_keys},
                  {"config_fingerprint", ctx.config_fingerprint}};
        ctx.store.save_json(ctx.store.answers_path(source_id, target_id, level), j);
        lines[i] = "answered " + std::to_string(outcome.answers.size()) + " QUDs of " + source_id +
                   " against " + target_id + " (" + std::to_string(answered) + " answerable)";
    });
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
}

scoring::SimilarityMatrix qudsim_matrix(Ctx& ctx, const std::string& source_id,
                                        const std::string& target_id, AbstractionLevel level) {
    auto source_seg = ctx.store.load_segmentation(source_id);
    auto target_seg = ctx.store.load_segmentation(target_id);
    scoring::PairArtifacts artifacts;
    artifacts.pair_id = corpus::Store::pair_id(source_id, target_id);
    artifacts.source_segmentation = &source_seg;
    artifacts.target_segmentation = &target_seg;
    artifacts.source_quds = ctx.store.load_quds(source_id, level);
    artifacts.target_quds = ctx.store.load_quds(target_id, level);
    for (auto& a : ctx.store.load_answer_sets(source_id, target_id, level))
        artifacts.answers_source_to_target.emplace(a.qud_id, std::move(a));
    for (auto& a : ctx.store.load_answer_sets(target_id, source_id, level))
        artifacts.answers_target_to_source.emplace(a.qud_id, std::move(a));
    return scoring::similarity_matrix(artifacts, qudsim_metric_id(level));
}

scoring::SimilarityMatrix text_metric_matrix(Ctx& ctx, const std::string& metric,
                                             const std::string& source_id,
                                             const std::string& target_id) {
    auto source = ctx.store.load_document(source_id);
    auto target = ctx.store.load_document(target_id);
    auto source_seg = ctx.store.load_segmentation(source_id);
    auto target_seg = ctx.store.load_segmentation(target_id);

    std::vector<std::string> source_texts, target_texts;
    for (const auto& s : source_seg.segments) source_texts.push_back(corpus::segment_text(source, s));
    for (const auto& t : target_seg.segments) target_texts.push_back(corpus::segment_text(target, t));

    scoring::SimilarityMatrix m;
    m.pair_id = corpus::Store::pair_id(source_id, target_id);
    m.metric_id = metric;
    m.rows = source_seg.segment_count();
    m.cols = target_seg.segment_count();
    m.values.assign(static_cast<std::size_t>(m.rows),
                    std::vector<double>(static_cast<std::size_t>(m.cols), 0.0));

    if (metric.rfind("jaccard", 0) == 0) {
        int n = metric.back() - '0';
        if (n < 1 || n > 4) throw UsageError("supported n-gram metrics are jaccard1..jaccard4");
        std::vector<std::vector<std::string>> source_tokens, target_tokens;
        for (const auto& t : source_texts) source_tokens.push_back(baselines::tokenize(t));
        for (const auto& t : target_texts) target_tokens.push_back(baselines::tokenize(t));
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j)
                m.values[i][j] = baselines::ngram_jaccard(source_tokens[i], target_tokens[j], n);
    } else if (metric == "rougeL") {
        std::vector<std::vector<std::string>> source_tokens, target_tokens;
        for (const auto& t : source_texts) source_tokens.push_back(baselines::tokenize(t));
        for (const auto& t : target_texts) target_tokens.push_back(baselines::tokenize(t));
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j)
                m.values[i][j] = baselines::rouge_l(source_tokens[i], target_tokens[j]);
    } else if (metric == "cosine") {
        std::vector<std::vector<double>> source_vecs, target_vecs;
        for (const auto& t : source_texts) source_vecs.push_back(ctx.gateway.embed(t, ctx.embed_cfg));
        for (const auto& t : target_texts) target_vecs.push_back(ctx.gateway.embed(t, ctx.embed_cfg));
        m.raw_values = m.values;
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j) {
                double raw = baselines::cosine(source_vecs[i], target_vecs[j]);
                (*m.raw_values)[i][j] = raw;
                m.values[i][j] = std::max(0.0, raw);
            }
    } else if (metric.rfind("judge:", 0) == 0) {
        llm::BackendConfig judge = ctx.judge_cfg;
        judge.model_name = metric.substr(std::string("judge:").size());
        if (judge.model_name.empty()) throw UsageError("metric 'judge:' needs a model name");
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j)
                m.values[i][j] =
                    baselines::llm_judge(source_texts[i], target_texts[j], ctx.gateway, judge);
    } else {
        throw UsageError("unknown metric '" + metric + "'");
    }
    return m;
}

int cmd_score(Ctx& ctx, const std::string& pair, bool all_pairs, const std::string& metric,
              const std::string& level_token) {
    auto pairs = resolve_pairs(ctx, pair, all_pairs, false);
    std::vector<std::string> lines(pairs.size());
    util::parallel_for(pairs.size(), ctx.parallel, [&](std::size_t i) {
        const auto& [source_id, target_id] = pairs[i];
        scoring::SimilarityMatrix m;
        std::string metric_id = metric;
        if (metric == "qudsim") {
            AbstractionLevel level = parse_level(level_token);
            m = qudsim_matrix(ctx, source_id, target_id, level);
            metric_id = m.metric_id;
        } else {
            m = text_metric_matrix(ctx, metric, source_id, target_id);
        }
        json j = scoring::to_json(m);
        j["config_fingerprint"] = ctx.config_fingerprint;
        ctx.store.save_json(ctx.store.matrix_path(m.pair_id, metric_id), j);
        lines[i] = "scored " + m.pair_id + " with " + metric_id + " (" + std::to_string(m.rows) +
                   "x" + std::to_string(m.cols) + ")";
    });
    for (const auto& line : lines) std::cout << line << "\n";
    return 0;
}

double resolve_tau(const std::string& metric, std::optional<double> tau,
                   const std::string& thresholds_path) {
    if (tau) return *tau;
    std::map<std::string, alignment::ThresholdConfig> table;
    if (!thresholds_path.empty())
        table = alignment::load_thresholds(thresholds_path);
    else
        table = alignment::paper_default_thresholds();
    auto it = table.find(metric);
    if (it == table.end())
        throw UsageError("no default threshold for metric '" + metric +
                         "'; pass --tau or a thresholds file");
    return it->second.tau;
}

int cmd_align(Ctx& ctx, const std::string& pair, bool all, const std::string& metric,
              std::optional<double> tau_flag, const std::string& thresholds_path,
              bool both_directions) {
    double tau = resolve_tau(metric, tau_flag, thresholds_path);
    std::vector<std::string> pair_ids;
    if (all) {
        pair_ids = list_metric_files(ctx, metric, "matrix");
        if (pair_ids.empty())
            throw MissingArtifactError("no " + metric + " matrices in " +
                                       ctx.store.derived_dir().string());
    } else {
        if (pair.empty()) throw UsageError("specify --pair <source>:<target> or --all");
        auto [source_id, target_id] = parse_pair(pair);
        pair_ids.push_back(corpus::Store::pair_id(source_id, target_id));
    }
    for (const auto& pair_id : pair_ids) {
        auto m = scoring::matrix_from_json(ctx.store.load_json(ctx.store.matrix_path(pair_id, metric)));
        auto aligned = alignment::threshold_align(m, tau, both_directions);
        json j = alignment::to_json(aligned);
        j["config_fingerprint"] = ctx.config_fingerprint;
        ctx.store.save_json(ctx.store.alignment_path(pair_id, metric), j);
        std::cout << "aligned " << pair_id << " with " << metric << " at tau=" << tau << ": "
                  << aligned.aligned.size() << " segment pairs\n";
    }
    return 0;
}

int cmd_calibrate(Ctx& ctx, const std::string& metric, std::optional<double> dev_fraction_flag) {
    double dev_fraction = dev_fraction_flag.value_or(ctx.dev_fraction);
    auto gold_pairs = ctx.store.list_gold_pairs();
    if (gold_pairs.empty())
        throw MissingArtifactError("no gold alignments in " + ctx.store.gold_dir().string());

    std::vector<corpus::GoldAlignment> golds;
    std::vector<scoring::SimilarityMatrix> matrices;
    golds.reserve(gold_pairs.size());
    matrices.reserve(gold_pairs.size());
    for (const auto& pair_id : gold_pairs) {
        golds.push_back(ctx.store.load_gold(pair_id));
        matrices.push_back(
            scoring::matrix_from_json(ctx.store.load_json(ctx.store.matrix_path(pair_id, metric))));
    }
    std::vector<alignment::CalibrationEntry> entries;
    for (std::size_t i = 0; i < golds.size(); ++i) entries.push_back({&matrices[i], &golds[i]});

    auto config = alignment::calibrate_threshold(entries, dev_fraction, ctx.seed);
    json j = alignment::to_json(config);
    j["config_fingerprint"] = ctx.config_fingerprint;
    ctx.store.save_json(ctx.store.reports_dir() / ("calibration." + metric + ".json"), j);
    std::cout << "calibrated " << metric << ": tau=" << config.tau
              << " (dev F1=" << config.calibration->achieved_f1 << ", " << gold_pairs.size()
              << " gold pairs)\n";
    return 0;
}

int cmd_eval(Ctx& ctx, const std::string& metric, const std::string& domain_filter,
             bool abstraction_stats_mode) {
    if (abstraction_stats_mode) {
        json out = json::object();
        for (AbstractionLevel level : {AbstractionLevel::Specific, AbstractionLevel::Abstract}) {
            std::vector<eval::AnswerBatch> batches;
            std::vector<corpus::Segmentation> segmentations;  // keep alive
            std::string suffix = ".answers." + corpus::level_token(level) + ".json";
            std::vector<std::string> files;
            for (const auto& entry : std::filesystem::directory_iterator(ctx.store.derived_dir())) {
                auto name = entry.path().filename().string();
                if (name.size() > suffix.size() &&
                    name.substr(name.size() - suffix.size()) == suffix)
                    files.push_back(name.substr(0, name.size() - suffix.size()));
            }
            std::sort(files.begin(), files.end());
            segmentations.reserve(files.size());
            for (const auto& pair_id : files) {
                auto [source_id, target_id] = corpus::Store::split_pair_id(pair_id);
                segmentations.push_back(ctx.store.load_segmentation(target_id));
                eval::AnswerBatch batch;
                batch.target_segmentation = &segmentations.back();
                batch.answers = ctx.store.load_answer_sets(source_id, target_id, level);
                batches.push_back(std::move(batch));
            }
            if (batches.empty()) continue;
            auto stats = eval::abstraction_stats(batches);
            out[corpus::level_token(level)] = {{"answerable", stats.answerable},
                                               {"unanswerable", stats.unanswerable},
                                               {"sentences_per_answer", stats.sentences_per_answer},
                                               {"coverage", stats.coverage},
                                               {"quds", stats.qud_count}};
            std::cout << "level " << corpus::level_token(level) << ": answerable "
                      << stats.answerable << ", sentences/answer " << stats.sentences_per_answer
                      << ", coverage " << stats.coverage << "\n";
        }
        if (out.empty()) throw MissingArtifactError("no answer files to evaluate");
        ctx.store.save_json(ctx.store.reports_dir() / "abstraction_stats.json", out);
        return 0;
    }

    auto gold_pairs = ctx.store.list_gold_pairs();
    if (gold_pairs.empty())
        throw MissingArtifactError("no gold alignments in " + ctx.store.gold_dir().string());

    eval::PrCounts overall;
    std::map<std::string, eval::PrCounts> by_domain;
    for (const auto& pair_id : gold_pairs) {
        auto gold = ctx.store.load_gold(pair_id);
        auto predicted = alignment::alignment_from_json(
            ctx.store.load_json(ctx.store.alignment_path(pair_id, metric)));
        auto source = ctx.store.load_document(gold.source_document_id);
        std::string domain = corpus::to_string(source.meta.domain);
        if (!domain_filter.empty() && domain != domain_filter) continue;
        auto counts = eval::pr_counts(predicted, gold);
        overall.add(counts);
        by_domain[domain].add(counts);
    }
    if (overall.pairs == 0) throw MissingArtifactError("no gold pairs matched the domain filter");

    std::vector<eval::EvalReport> reports;
    reports.push_back(eval::finalize_report(metric, "overall", overall));
    for (const auto& [domain, counts] : by_domain)
        reports.push_back(eval::finalize_report(metric, domain, counts));

    ctx.store.save_json(ctx.store.reports_dir() / ("eval." + metric + ".json"),
                        reports::eval_json(reports));
    util::write_file_atomic(ctx.store.reports_dir() / ("eval." + metric + ".csv"),
                            reports::eval_csv(reports));
    for (const auto& r : reports)
        std::cout << r.metric_id << " " << r.domain << ": P=" << r.precision << " R=" << r.recall
                  << " F1=" << r.f1 << " (" << r.pair_count << " pairs)\n";
    return 0;
}

int cmd_templates(Ctx& ctx, const std::string& metric, std::vector<int> ns) {
    if (ns.empty()) ns = {2, 3, 4};
    auto pair_ids = list_metric_files(ctx, metric, "alignment");
    if (pair_ids.empty())
        throw MissingArtifactError("no " + metric + " alignments in " +
                                   ctx.store.derived_dir().string());

    json pairs_json = json::array();
    // (source author, target author) -> n -> [counts...]
    std::map<std::pair<std::string, std::string>, std::map<int, std::vector<int>>> grouped;

    for (const auto& pair_id : pair_ids) {
        auto aligned = alignment::alignment_from_json(
            ctx.store.load_json(ctx.store.alignment_path(pair_id, metric)));
        auto [source_id, target_id] = corpus::Store::split_pair_id(pair_id);
        auto source = ctx.store.load_document(source_id);
        auto target = ctx.store.load_document(target_id);

        json counts = json::object();
        json runs = json::object();
        for (int n : ns) {
            auto result = alignment::extract_templates(aligned, n);
            counts[std::to_string(n)] = result.count;
            json jruns = json::array();
            for (const auto& run : result.runs)
                jruns.push_back({{"source_start", run.source_start},
                                 {"target_start", run.target_start},
                                 {"length", run.length}});
            runs[std::to_string(n)] = jruns;
            grouped[{source.meta.author_kind, target.meta.author_kind}][n].push_back(result.count);
        }
        pairs_json.push_back({{"pair_id", pair_id}, {"counts", counts}, {"runs", runs}});
    }

    json averages = json::array();
    for (const auto& [key, per_n] : grouped) {
        json mean_counts = json::object();
        for (const auto& [n, counts] : per_n) {
            double sum = 0;
            for (int c : counts) sum += c;
            mean_counts[std::to_string(n)] = sum / static_cast<double>(counts.size());
        }
        averages.push_back({{"source_group", key.first},
                            {"target_group", key.second},
                            {"mean_counts", mean_counts}});
    }

    json out = {{"metric_id", metric},
                {"ns", ns},
                {"pairs", pairs_json},
                {"group_averages", averages},
                {"config_fingerprint", ctx.config_fingerprint}};
    ctx.store.save_json(ctx.store.reports_dir() / ("templates." + metric + ".json"), out);
    for (const auto& p : pairs_json)
        std::cout << p["pair_id"].get<std::string>() << ": counts " << p["counts"].dump() << "\n";
    return 0;
}

int cmd_heatmap(Ctx& ctx, const std::string& metric) {
    auto pair_ids = list_metric_files(ctx, metric, "alignment");
    if (pair_ids.empty())
        throw MissingArtifactError("no " + metric + " alignments in " +
                                   ctx.store.derived_dir().string());

    std::vector<alignment::HeatmapEntry> entries;
    for (const auto& pair_id : pair_ids) {
        auto aligned = alignment::alignment_from_json(
            ctx.store.load_json(ctx.store.alignment_path(pair_id, metric)));
        auto [source_id, target_id] = corpus::Store::split_pair_id(pair_id);
        auto source = ctx.store.load_document(source_id);
        auto target = ctx.store.load_document(target_id);
        auto source_seg = ctx.store.load_segmentation(source_id);
        auto target_seg = ctx.store.load_segmentation(target_id);
        double value = alignment::document_similarity(aligned, source_seg.segment_count(),
                                                      target_seg.segment_count());
        entries.push_back({source.meta.author_kind, target.meta.author_kind, value});
    }

    auto table = alignment::heatmap_table(entries);
    ctx.store.save_json(ctx.store.reports_dir() / ("heatmap." + metric + ".json"),
                        reports::heatmap_json(metric, table));
    util::write_file_atomic(ctx.store.reports_dir() / ("heatmap." + metric + ".csv"),
                            reports::heatmap_csv(table));
    util::write_file_atomic(ctx.store.reports_dir() / ("heatmap." + metric + ".svg"),
                            reports::heatmap_svg(table));
    std::cout << "heatmap." << metric << ".{csv,json,svg}: " << table.groups.size() << " groups, "
              << entries.size() << " document pairs\n";
    return 0;
}

int cmd_report(Ctx& ctx, const std::string& pair, const std::string& metric) {
    if (pair.empty()) throw UsageError("report needs --pair <source>:<target>");
    auto [source_id, target_id] = parse_pair(pair);
    std::string pair_id = corpus::Store::pair_id(source_id, target_id);

    auto aligned = alignment::alignment_from_json(
        ctx.store.load_json(ctx.store.alignment_path(pair_id, metric)));
    auto matrix = scoring::matrix_from_json(
        ctx.store.load_json(ctx.store.matrix_path(pair_id, metric)));
    auto source = ctx.store.load_document(source_id);
    auto target = ctx.store.load_document(target_id);
    auto source_seg = ctx.store.load_segmentation(source_id);
    auto target_seg = ctx.store.load_segmentation(target_id);

    // QUD texts and answer sentences are attached when the metric is QUD
    // based and the artifacts exist.
    std::map<int, json> quds_by_segment;
    if (metric.rfind("qudsim", 0) == 0) {
        AbstractionLevel level = metric == "qudsim-specific" ? AbstractionLevel::Specific
                                                             : AbstractionLevel::Abstract;
        auto quds = ctx.store.load_quds(source_id, level);
        std::map<std::string, corpus::AnswerSet> answers;
        for (auto& a : ctx.store.load_answer_sets(source_id, target_id, level))
            answers.emplace(a.qud_id, std::move(a));
        for (const auto& qud : quds) {
            json entry = {{"id", qud.id}, {"question", qud.question}};
            auto it = answers.find(qud.id);
            if (it != answers.end()) entry["answer_sentences"] = it->second.sentence_indices;
            quds_by_segment[qud.source_segment_index].push_back(entry);
        }
    }

    json alignments = json::array();
    for (const auto& [i, j] : aligned.aligned) {
        json entry = {{"source_segment", i},
                      {"target_segment", j},
                      {"score", matrix.at(i - 1, j - 1)},
                      {"source_text", corpus::segment_text(source, source_seg.segment(i))},
                      {"target_text", corpus::segment_text(target, target_seg.segment(j))}};
        if (matrix.fwd) entry["fwd"] = (*matrix.fwd)[i - 1][j - 1];
        if (matrix.bwd) entry["bwd"] = (*matrix.bwd)[i - 1][j - 1];
        if (auto it = quds_by_segment.find(i); it != quds_by_segment.end())
            entry["source_quds"] = it->second;
        alignments.push_back(std::move(entry));
    }

    json out = {{"pair_id", pair_id},
                {"metric_id", metric},
                {"tau", aligned.tau},
                {"alignments", alignments},
                {"config_fingerprint", ctx.config_fingerprint}};
    ctx.store.save_json(ctx.store.reports_dir() / ("pair." + pair_id + "." + metric + ".json"), out);
    std::cout << "report for " << pair_id << " (" << metric << "): " << alignments.size()
              << " aligned segment pairs\n";
    return 0;
}

void write_manifest(Ctx& ctx, const std::string& command, const std::vector<std::string>& argv,
                    const std::string& config_path, const std::string& started_at, int exit_code,
                    const std::string& error) {
    try {
        auto stats = ctx.gateway.stats();
        json backends = {
            {"pipeline", {{"endpoint", ctx.pipeline_cfg.endpoint_url},
                          {"model", ctx.pipeline_cfg.model_name}}},
            {"embedding", {{"endpoint", ctx.embed_cfg.endpoint_url},
                           {"model", ctx.embed_cfg.model_name}}},
            {"judge", {{"endpoint", ctx.judge_cfg.endpoint_url},
                       {"model", ctx.judge_cfg.model_name}}}};
        json manifest = {{"command", command},
                         {"argv", argv},
                         {"workspace", ctx.store.root().string()},
                         {"config_path", config_path},
                         {"fixtures", ctx.fixtures},
                         {"stages", json::array({command})},
                         {"backends", backends},
                         {"seed", ctx.seed},
                         {"parallel", ctx.parallel},
                         {"config_fingerprint", ctx.config_fingerprint},
                         {"started_at", started_at},
                         {"finished_at", util::iso8601_utc_now()},
                         {"cache_stats",
                          {{"hits", stats.hits},
                           {"misses", stats.misses},
                           {"http_calls", stats.http_calls}}},
                         {"exit_code", exit_code}};
        if (!error.empty()) manifest["error"] = error;
        auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
        ctx.store.save_json(
            ctx.store.runs_dir() / ("run-" + std::to_string(stamp) + "-" + command + ".json"),
            manifest);
    } catch (const std::exception&) {
        // Manifests are best-effort audit records.
    }
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"qudsim: discourse-structure similarity between documents via Questions Under Discussion"};
    app.require_subcommand(1);

    std::string workspace = ".";
    std::string config_path;
    std::string fixtures_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> parallel;
    app.add_option("--workspace", workspace, "Workspace directory (corpus/, derived/, ...)");
    app.add_option("--config", config_path, "JSON config with backend endpoints and models");
    app.add_option("--fixtures", fixtures_dir,
                   "Replay recorded transcripts from this directory (offline, no network)");
    app.add_option("--seed", seed, "Seed override for calibration splits");
    app.add_option("--parallel", parallel, "Worker threads for independent documents/pairs");

    std::vector<std::string> docs;
    bool all_docs = false;
    std::string pair;
    bool all_pairs = false;
    bool both = false;
    std::string level = "A";
    std::string metric = "qudsim";
    std::optional<double> tau;
    std::string thresholds_path;
    bool both_directions = false;
    std::vector<int> template_ns;
    std::optional<double> dev_fraction;
    std::string manifest_path;
    std::string domain_filter;
    bool abstraction_stats_mode = false;

    auto* ingest = app.add_subcommand("ingest", "Add documents from a corpus manifest");
    ingest->add_option("--manifest", manifest_path, "Corpus manifest JSON")->required();

    auto add_doc_opts = [&](CLI::App* cmd) {
        cmd->add_option("--doc", docs, "Document id (repeatable)");
        cmd->add_flag("--all", all_docs, "All documents in the corpus");
    };
    auto* segment = app.add_subcommand("segment", "Segment documents into atomic-topic spans");
    add_doc_opts(segment);
    auto* abstract_cmd = app.add_subcommand("abstract", "Entity-abstract each segment");
    add_doc_opts(abstract_cmd);
    auto* quds = app.add_subcommand("quds", "Generate QUDs per segment");
    add_doc_opts(quds);
    quds->add_option("--level", level, "Abstraction level: A (abstract) or S (specific)");

    auto* answer = app.add_subcommand("answer", "Answer source QUDs against a target document");
    answer->add_option("--pair", pair, "<source>:<target> document ids");
    answer->add_flag("--all-pairs", all_pairs, "Every ordered document pair");
    answer->add_flag("--both", both, "Also answer the reverse direction");
    answer->add_option("--level", level, "Abstraction level: A or S");

    auto* score = app.add_subcommand("score", "Compute a segment-similarity matrix");
    score->add_option("--pair", pair, "<source>:<target> document ids");
    score->add_flag("--all-pairs", all_pairs, "Every ordered document pair");
    score->add_option("--metric", metric,
                      "qudsim | jaccard1..4 | rougeL | cosine | judge:<model>");
    score->add_option("--level", level, "QUD abstraction level for qudsim: A or S");

    auto* align = app.add_subcommand("align", "Threshold a matrix into binary alignments");
    align->add_option("--pair", pair, "<source>:<target> document ids");
    align->add_flag("--all", all_docs, "All scored pairs for the metric");
    align->add_option("--metric", metric, "Metric id");
    align->add_option("--tau", tau, "Threshold; scores strictly above it align");
    align->add_option("--thresholds", thresholds_path, "Thresholds JSON (default: shipped values)");
    align->add_flag("--both-directions", both_directions,
                    "Threshold each direction separately instead of the combined score");

    auto* calibrate = app.add_subcommand("calibrate", "Fit tau against gold alignments");
    calibrate->add_option("--metric", metric, "Metric id");
    calibrate->add_option("--dev-fraction", dev_fraction, "Dev split fraction (default 0.2)");

    auto* eval_cmd = app.add_subcommand("eval", "Precision/recall/F1 against gold alignments");
    eval_cmd->add_option("--metric", metric, "Metric id");
    eval_cmd->add_option("--domain", domain_filter, "Restrict to one domain");
    eval_cmd->add_flag("--abstraction-stats", abstraction_stats_mode,
                       "Answerability and coverage statistics per abstraction level");

    auto* templates = app.add_subcommand("templates", "Count diagonal discourse templates");
    templates->add_option("--metric", metric, "Metric id");
    templates->add_option("--n", template_ns, "Template length (repeatable; default 2 3 4)");

    auto* heatmap = app.add_subcommand("heatmap", "Aggregate document similarity by author group");
    heatmap->add_option("--metric", metric, "Metric id");

    auto* report = app.add_subcommand("report", "Per-pair alignment diagram JSON");
    report->add_option("--pair", pair, "<source>:<target> document ids")->required();
    report->add_option("--metric", metric, "Metric id");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    std::string command = app.get_subcommands().front()->get_name();
    std::vector<std::string> argv_copy;
    for (int i = 0; i < argc; ++i) argv_copy.push_back(argv[i]);
    std::string started_at = util::iso8601_utc_now();

    Ctx ctx;
    bool ctx_ready = false;
    int exit_code = 0;
    std::string error;
    try {
        ctx = make_context(workspace, config_path, fixtures_dir, seed, parallel);
        ctx_ready = true;
        if (ingest->parsed()) exit_code = cmd_ingest(ctx, manifest_path);
        else if (segment->parsed()) exit_code = cmd_segment(ctx, docs, all_docs);
        else if (abstract_cmd->parsed()) exit_code = cmd_abstract(ctx, docs, all_docs);
        else if (quds->parsed()) exit_code = cmd_quds(ctx, docs, all_docs, level);
        else if (answer->parsed()) exit_code = cmd_answer(ctx, pair, all_pairs, both, level);
        else if (score->parsed()) exit_code = cmd_score(ctx, pair, all_pairs, metric, level);
        else if (align->parsed())
            exit_code = cmd_align(ctx, pair, all_docs, metric, tau, thresholds_path, both_directions);
        else if (calibrate->parsed()) exit_code = cmd_calibrate(ctx, metric, dev_fraction);
        else if (eval_cmd->parsed())
            exit_code = cmd_eval(ctx, metric, domain_filter, abstraction_stats_mode);
        else if (templates->parsed()) exit_code = cmd_templates(ctx, metric, template_ns);
        else if (heatmap->parsed()) exit_code = cmd_heatmap(ctx, metric);
        else if (report->parsed()) exit_code = cmd_report(ctx, pair, metric);
        else throw UsageError("unknown command");
    } catch (const UsageError& e) {
        error = e.what();
        exit_code = 1;
    } catch (const SchemaError& e) {
        error = e.what();
        exit_code = 1;
    } catch (const MissingArtifactError& e) {
        error = e.what();
        exit_code = 2;
    } catch (const BackendError& e) {
        error = e.what();
        exit_code = 3;
    } catch (const ParseError& e) {
        error = std::string(e.what()) + "\n--- transcript ---\n" + e.transcript;
        exit_code = 3;
    } catch (const std::exception& e) {
        error = e.what();
        exit_code = 1;
    }

    if (!error.empty()) std::cerr << "error: " << error << "\n";
    if (ctx_ready) write_manifest(ctx, command, argv_copy, config_path, started_at, exit_code, error);
    return exit_code;
}

}  // namespace qudsim::cli
