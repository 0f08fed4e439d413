#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "qudsim/corpus.hpp"
#include "qudsim/util.hpp"
#include "test_support.hpp"

using namespace qudsim;
using namespace qudsim::corpus;

static DocMeta meta(const std::string& author = "human") {
    return DocMeta{author, Domain::Creative, "p1", std::nullopt};
}

TEST_CASE("split_sentences: terminal punctuation") {
    auto s = split_sentences("A. B? C!");
    REQUIRE(s.size() == 3);
    CHECK(s[0] == "A.");
    CHECK(s[1] == "B?");
    CHECK(s[2] == "C!");
}

TEST_CASE("split_sentences: abbreviation guard") {
    auto s = split_sentences("Dr. Reed spoke. He left.");
    REQUIRE(s.size() == 2);
    CHECK(s[0] == "Dr. Reed spoke.");
    CHECK(s[1] == "He left.");

    s = split_sentences("Mr. President-elect Harrison arrived. The U.S. flag waved.");
    REQUIRE(s.size() == 2);

    // Dotted tokens never end a sentence, even in pre-tokenized text.
    s = split_sentences("Reagan laughed it off , H.W . ignored it , and Clinton believed it all .");
    CHECK(s.size() == 1);
}

TEST_CASE("split_sentences: empty input is an error") {
    CHECK_THROWS_AS(split_sentences(""), UsageError);
    CHECK_THROWS_AS(split_sentences("  \n\t "), UsageError);
}

TEST_CASE("split_sentences: ellipsis does not end a sentence") {
    auto s = split_sentences("But the alternative... I trailed off. He waited.");
    REQUIRE(s.size() == 2);
    CHECK(s[0] == "But the alternative... I trailed off.");
}

TEST_CASE("split_sentences: quotes stay attached") {
    auto s = split_sentences("\"Why?\" he finally asked. \"Go on.\" She nodded.");
    REQUIRE(s.size() == 3);
    CHECK(s[0] == "\"Why?\" he finally asked.");
    CHECK(s[1] == "\"Go on.\"");
    CHECK(s[2] == "She nodded.");
}

TEST_CASE("split_sentences: curly quotes") {
    auto s = split_sentences("\xE2\x80\x9CGet to the point.\xE2\x80\x9D He leaned back.");
    REQUIRE(s.size() == 2);
}

TEST_CASE("split_sentences: blank lines are hard boundaries") {
    auto pieces = split_sentences_ex("Chapter One\n\nThe story began. It went on.");
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0].text == "Chapter One");
    CHECK(pieces[0].paragraph == 1);
    CHECK(pieces[1].paragraph == 2);
    CHECK(pieces[2].paragraph == 2);
}

TEST_CASE("split_sentences: lowercase continuation is not a boundary") {
    auto s = split_sentences("He said the word . and then nothing more happened.");
    CHECK(s.size() == 1);
}

TEST_CASE("make_document: reconstruction invariant on random prose") {
    std::mt19937 rng(42);
    for (int iter = 0; iter < 50; ++iter) {
        std::string text = testsup::random_prose(rng, 1 + iter % 12);
        Document doc = make_document("doc-x", text, meta());
        std::string joined;
        for (const auto& sent : doc.sentences) {
            if (!joined.empty()) joined.push_back(' ');
            joined += sent.text;
        }
        CHECK(util::normalize_whitespace(joined) == util::normalize_whitespace(text));
        for (int i = 0; i < doc.sentence_count(); ++i)
            CHECK(doc.sentences[static_cast<std::size_t>(i)].index == i + 1);
    }
}

TEST_CASE("make_document: id validation") {
    CHECK_THROWS_AS(make_document("", "Hi.", meta()), UsageError);
    CHECK_THROWS_AS(make_document("a__b", "Hi.", meta()), UsageError);
    CHECK_THROWS_AS(make_document("a/b", "Hi.", meta()), UsageError);
    CHECK_NOTHROW(make_document("gemini-flat.earth_1", "Hi.", meta()));
}

static Document five_sentence_doc() {
    return make_document("d5", "One one. Two two. Three three. Four four. Five five.", meta());
}

static Segmentation seg_of(const std::string& doc_id, std::vector<std::vector<int>> groups) {
    Segmentation seg;
    seg.document_id = doc_id;
    int k = 1;
    for (auto& g : groups) seg.segments.push_back({k++, std::move(g)});
    return seg;
}

TEST_CASE("validate_segmentation: exact partition is ok") {
    auto doc = five_sentence_doc();
    auto report = validate_segmentation(doc, seg_of("d5", {{1, 2}, {3, 4, 5}}));
    CHECK(report.ok);
    CHECK(report.violations.empty());
}

TEST_CASE("validate_segmentation: overlap reported with offending sentence") {
    auto doc = five_sentence_doc();
    auto report = validate_segmentation(doc, seg_of("d5", {{1, 2}, {2, 3, 4}, {5}}));
    REQUIRE_FALSE(report.ok);
    bool found = false;
    for (const auto& v : report.violations)
        if (v.kind == "overlap" && v.sentence_indices == std::vector<int>{2}) found = true;
    CHECK(found);
}

TEST_CASE("validate_segmentation: gap reported with offending sentence") {
    auto doc = five_sentence_doc();
    auto report = validate_segmentation(doc, seg_of("d5", {{1, 2}, {4, 5}}));
    REQUIRE_FALSE(report.ok);
    bool found = false;
    for (const auto& v : report.violations)
        if (v.kind == "gap" && v.sentence_indices == std::vector<int>{3}) found = true;
    CHECK(found);
}

TEST_CASE("validate_segmentation: non-contiguous and out-of-range") {
    auto doc = five_sentence_doc();
    auto report = validate_segmentation(doc, seg_of("d5", {{1, 3, 2}, {4, 5, 9}}));
    REQUIRE_FALSE(report.ok);
    bool noncontig = false, range = false;
    for (const auto& v : report.violations) {
        if (v.kind == "non-contiguous") noncontig = true;
        if (v.kind == "out-of-range" && v.sentence_indices == std::vector<int>{9}) range = true;
    }
    CHECK(noncontig);
    CHECK(range);
}

TEST_CASE("validate_segmentation ok iff sorted concatenation equals 1..n") {
    std::mt19937 rng(7);
    auto doc = five_sentence_doc();
    for (int iter = 0; iter < 300; ++iter) {
        // Random grouping of a random subsequence (with possible duplicates).
        std::uniform_int_distribution<int> count(0, 7);
        std::uniform_int_distribution<int> pick(1, 5);
        std::vector<int> pool;
        int n = count(rng);
        for (int i = 0; i < n; ++i) pool.push_back(pick(rng));
        std::vector<std::vector<int>> groups;
        std::size_t at = 0;
        while (at < pool.size()) {
            std::uniform_int_distribution<std::size_t> glen(1, pool.size() - at);
            std::size_t len = glen(rng);
            groups.emplace_back(pool.begin() + static_cast<long>(at),
                                pool.begin() + static_cast<long>(at + len));
            std::sort(groups.back().begin(), groups.back().end());
            at += len;
        }
        auto seg = seg_of("d5", std::move(groups));
        auto report = validate_segmentation(doc, seg);

        std::vector<int> flat;
        bool contiguous = true;
        for (const auto& s : seg.segments) {
            for (std::size_t k = 0; k < s.sentence_indices.size(); ++k) {
                flat.push_back(s.sentence_indices[k]);
                if (k > 0 && s.sentence_indices[k] != s.sentence_indices[k - 1] + 1)
                    contiguous = false;
            }
            if (s.sentence_indices.empty()) contiguous = false;
        }
        std::sort(flat.begin(), flat.end());
        bool exact = flat == std::vector<int>{1, 2, 3, 4, 5} && contiguous;
        CHECK(report.ok == exact);
    }
}

TEST_CASE("paragraph_segmentation covers the document") {
    Document doc = make_document(
        "para", "First para one. First para two.\n\nSecond para. Also second.\n\nThird.", meta());
    auto seg = paragraph_segmentation(doc);
    CHECK(seg.segments.size() == 3);
    CHECK(validate_segmentation(doc, seg).ok);
    CHECK(seg.segments[0].sentence_indices == std::vector<int>{1, 2});
    CHECK(seg.segments[2].sentence_indices == std::vector<int>{5});
}

TEST_CASE("numbered_text and segment_text") {
    auto doc = five_sentence_doc();
    auto numbered = numbered_text(doc);
    CHECK(numbered.rfind("1. One one.", 0) == 0);
    CHECK(numbered.find("\n5. Five five.") != std::string::npos);
    CHECK(segment_text(doc, Segment{1, {2, 3}}) == "Two two. Three three.");
}

// --------------------------------------------------------------------------
// JSON round-trips
// --------------------------------------------------------------------------

TEST_CASE("json round-trip is lossless for randomized instances") {
    std::mt19937 rng(99);
    for (int iter = 0; iter < 100; ++iter) {
        std::uniform_int_distribution<int> nsent(1, 15);
        Document doc = make_document(
            "rt-" + std::to_string(iter), testsup::random_prose(rng, nsent(rng)),
            DocMeta{iter % 2 ? "human" : "gpt-4o",
                    iter % 3 == 0 ? Domain::Obituary : Domain::Suri,
                    "prompt-" + std::to_string(iter),
                    iter % 2 ? std::optional<std::string>("vg") : std::nullopt});
        CHECK(document_from_json(to_json(doc)) == doc);

        Segmentation seg;
        seg.document_id = doc.id;
        int at = 1, k = 1;
        while (at <= doc.sentence_count()) {
            std::uniform_int_distribution<int> len(1, 4);
            int take = std::min(len(rng), doc.sentence_count() - at + 1);
            Segment s{k++, {}};
            for (int i = 0; i < take; ++i) s.sentence_indices.push_back(at++);
            seg.segments.push_back(std::move(s));
        }
        CHECK(segmentation_from_json(to_json(seg)) == seg);

        Qud q{"q-" + std::to_string(iter), doc.id, 1, "What happened to the town?",
              iter % 2 ? AbstractionLevel::Abstract : AbstractionLevel::Specific};
        CHECK(qud_from_json(to_json(q)) == q);

        AnswerSet a{q.id, doc.id, {}};
        std::uniform_int_distribution<int> pick(1, doc.sentence_count());
        for (int i = 0; i < iter % 5; ++i) a.sentence_indices.insert(pick(rng));
        CHECK(answer_set_from_json(to_json(a)) == a);

        GoldAlignment g{"src-doc", "tgt-doc", {{1, 2}, {2, 2}}, {"ann1", "ann2"}};
        CHECK(gold_alignment_from_json(to_json(g)) == g);
    }
}

TEST_CASE("schema errors carry paths") {
    nlohmann::json j = {{"id", "d"}, {"text", "Hi."}};
    try {
        document_from_json(j);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path == "/document/meta");
    }

    nlohmann::json bad_sentence = {
        {"id", "d"},
        {"text", "Hi. Ho."},
        {"meta", {{"author_kind", "human"}, {"domain", "creative"}, {"prompt_id", "p"}}},
        {"sentences", {{{"index", 1}, {"text", "Hi."}}, {{"index", 3}, {"text", "Ho."}}}}};
    try {
        document_from_json(bad_sentence);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path == "/document/sentences/1/index");
    }
}

TEST_CASE("document reconstruction mismatch is a schema error") {
    auto j = to_json(five_sentence_doc());
    j["sentences"][0]["text"] = "Tampered text here.";
    CHECK_THROWS_AS(document_from_json(j), SchemaError);
}

// --------------------------------------------------------------------------
// Store
// --------------------------------------------------------------------------

TEST_CASE("store: save/load documents and pair ids") {
    testsup::TempDir tmp("store");
    Store store(tmp.path());
    store.ensure_layout();

    auto doc = five_sentence_doc();
    store.save_document(doc);
    CHECK(store.has_document("d5"));
    CHECK(store.load_document("d5") == doc);
    CHECK(store.list_documents() == std::vector<std::string>{"d5"});

    CHECK(Store::pair_id("a", "b") == "a__b");
    auto [s, t] = Store::split_pair_id("a-1__b-2");
    CHECK(s == "a-1");
    CHECK(t == "b-2");
    CHECK_THROWS_AS(Store::split_pair_id("nounderscore"), UsageError);
}

TEST_CASE("store: missing artifacts throw MissingArtifactError") {
    testsup::TempDir tmp("store-missing");
    Store store(tmp.path());
    store.ensure_layout();
    CHECK_THROWS_AS(store.load_document("nope"), MissingArtifactError);
    CHECK_THROWS_AS(store.load_segmentation("nope"), MissingArtifactError);
}

TEST_CASE("store: answer set with out-of-range index is a schema error") {
    testsup::TempDir tmp("store-answers");
    Store store(tmp.path());
    store.ensure_layout();
    auto doc = five_sentence_doc();
    store.save_document(doc);

    nlohmann::json file = {
        {"answers", nlohmann::json::array({{{"qud_id", "q1"},
                                            {"target_document_id", "d5"},
                                            {"sentence_indices", {3, 99}}}})}};
    store.save_json(store.answers_path("src", "d5", AbstractionLevel::Abstract), file);
    CHECK_THROWS_AS(store.load_answer_sets("src", "d5", AbstractionLevel::Abstract), SchemaError);

    file["answers"][0]["sentence_indices"] = {3, 5};
    store.save_json(store.answers_path("src", "d5", AbstractionLevel::Abstract), file);
    auto loaded = store.load_answer_sets("src", "d5", AbstractionLevel::Abstract);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].sentence_indices == std::set<int>{3, 5});
}

TEST_CASE("store: invalid stored segmentation is rejected on load") {
    testsup::TempDir tmp("store-seg");
    Store store(tmp.path());
    store.ensure_layout();
    store.save_document(five_sentence_doc());
    store.save_json(store.segmentation_path("d5"), to_json(seg_of("d5", {{1, 2}, {4, 5}})));
    CHECK_THROWS_AS(store.load_segmentation("d5"), SchemaError);
    store.save_json(store.segmentation_path("d5"), to_json(seg_of("d5", {{1, 2}, {3, 4, 5}})));
    CHECK(store.load_segmentation("d5").segment_count() == 2);
}

// --------------------------------------------------------------------------
// Bundled sample corpus
// --------------------------------------------------------------------------

TEST_CASE("bundled sample corpus loads with 4 documents") {
    namespace fs = std::filesystem;
    fs::path fixtures(QUDSIM_FIXTURES_DIR);
    auto manifest = corpus::parse_json(util::read_file(fixtures / "corpus_manifest.json"),
                                       "corpus_manifest.json");
    REQUIRE(manifest.at("documents").size() == 4);
    int loaded = 0;
    for (const auto& entry : manifest.at("documents")) {
        auto raw = util::read_file(fixtures / entry.at("file").get<std::string>());
        DocMeta m;
        m.author_kind = entry.at("author_kind").get<std::string>();
        m.domain = domain_from_string(entry.at("domain").get<std::string>());
        m.prompt_id = entry.at("prompt_id").get<std::string>();
        if (entry.contains("variant_group"))
            m.variant_group = entry.at("variant_group").get<std::string>();
        Document doc = make_document(entry.at("id").get<std::string>(), raw, m);
        CHECK(doc.sentence_count() > 5);
        CHECK(document_from_json(to_json(doc)) == doc);
        ++loaded;
    }
    CHECK(loaded == 4);
}
