#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qudsim/corpus.hpp"

namespace qudsim::corpus {

// Reads a corpus manifest ({"documents": [{id, file, author_kind, domain,
// prompt_id, variant_group?}, ...]}) and builds the documents. File paths
// are relative to the manifest's directory.
std::vector<Document> load_corpus_manifest(const std::filesystem::path& manifest_path);

}  // namespace qudsim::corpus

namespace qudsim::replay {

struct RecordSummary {
    int chat_transcripts = 0;
    int embeddings = 0;
};

// Renders the human-readable authoring data (authoring/responses.json next
// to the corpus manifest) into recorded transcripts under `out_dir`, keyed
// exactly as the pipeline will request them in --fixtures mode. Embedding
// transcripts use the deterministic stand-in vectors; judge transcripts are
// synthetic stand-in ratings.
RecordSummary record_fixtures(const std::filesystem::path& fixtures_root,
                              const std::filesystem::path& out_dir);

}  // namespace qudsim::replay
