#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "navads/errors.hpp"
#include "navads/index.hpp"
#include "navads/util.hpp"

using namespace navads;

static corpus::DocumentSegment seg(std::string id, std::string text, double edu = 1.0) {
    corpus::DocumentSegment s;
    s.doc_id = std::move(id);
    s.text = std::move(text);
    s.edu_value = edu;
    return s;
}

static std::vector<corpus::DocumentSegment> two_doc_corpus() {
    return {seg("d1", "a b"), seg("d2", "a a")};
}

TEST_CASE("corpus stats count documents, lengths, and frequencies") {
    auto segments = two_doc_corpus();
    auto stats = index::compute_corpus_stats(segments);
    CHECK(stats.doc_count == 2);
    CHECK(stats.avg_doc_len == doctest::Approx(2.0));
    CHECK(stats.doc_frequency.at("a") == 2);  // per-document, not per-occurrence
    CHECK(stats.doc_frequency.at("b") == 1);
    CHECK(stats.doc_frequency.count("z") == 0);
}

TEST_CASE("bm25 hand-evaluated two-document case") {
    auto segments = two_doc_corpus();
    auto stats = index::compute_corpus_stats(segments);
    CHECK(index::bm25_score("a", "a a", stats) == doctest::Approx(0.2507).epsilon(0.002));
    CHECK(index::bm25_score("a", "a a", stats) ==
          doctest::Approx(0.2506921405916876).epsilon(1e-12));
    CHECK(index::bm25_score("a", "a b", stats) ==
          doctest::Approx(0.1823215567939546).epsilon(1e-12));
    // Query terms score per occurrence; a repeated term doubles its share.
    CHECK(index::bm25_score("a a", "a a", stats) ==
          doctest::Approx(0.5013842811833752).epsilon(1e-12));
}

TEST_CASE("bm25 three-document cross-check") {
    std::vector<corpus::DocumentSegment> segments = {seg("d1", "x y z"), seg("d2", "x x q"),
                                                     seg("d3", "p q")};
    auto stats = index::compute_corpus_stats(segments);
    CHECK(index::bm25_score("x q", "x x q", stats) ==
          doctest::Approx(1.0714452953493814).epsilon(1e-12));
    CHECK(index::bm25_score("x q", "p q", stats) ==
          doctest::Approx(0.523548346501579).epsilon(1e-12));
    CHECK(index::bm25_score("x q", "x y z", stats) ==
          doctest::Approx(0.44713858782297017).epsilon(1e-12));
    CHECK(index::bm25_idf(stats, "nope") == doctest::Approx(2.0794415416798357).epsilon(1e-12));
    // Absent query terms contribute nothing.
    CHECK(index::bm25_score("nope", "x y z", stats) == 0.0);
}

TEST_CASE("bm25 degenerate corpora score zero") {
    index::CorpusStats empty;
    CHECK(index::bm25_score("a", "a a", empty) == 0.0);
}

TEST_CASE("annotate_bm25 fills every segment") {
    auto segments = two_doc_corpus();
    index::annotate_bm25("a", segments);
    auto stats = index::compute_corpus_stats(segments);
    for (const auto& s : segments) {
        REQUIRE(s.bm25_score.has_value());
        CHECK(*s.bm25_score == index::bm25_score("a", s.text, stats));
    }
}

TEST_CASE("hash ngram embeddings are unit-norm, deterministic, and seeded") {
    index::HashNgramProvider p(384, 0);
    CHECK(p.dim() == 384);
    CHECK(p.model_id() == "hash-ngram3/v1/d384/s0");

    const char* samples[] = {"waterproof boots for wet trails",
                             "ab",  // shorter than one 3-gram
                             "x",
                             "the the the the",
                             "\xe2\x80\x9cunicode\xe2\x80\x9d text"};
    for (const char* text : samples) {
        auto v = p.embed(text);
        REQUIRE(v.values.size() == 384);
        CHECK(v.model_id == p.model_id());
        double norm_sq = 0.0;
        for (float x : v.values) norm_sq += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-6);

        auto again = p.embed(text);
        CHECK(again.values == v.values);  // bitwise reproducible
    }

    index::HashNgramProvider q(384, 1);
    CHECK(q.model_id() == "hash-ngram3/v1/d384/s1");
    CHECK(q.embed("waterproof boots").values != p.embed("waterproof boots").values);

    CHECK_THROWS_AS(index::HashNgramProvider(0, 0), ConfigError);
}

TEST_CASE("checked embed rejects empty text") {
    index::HashNgramProvider p(64, 0);
    CHECK_THROWS_WITH_AS(index::embed("", p), "cannot embed empty text", DataError);
    auto v = index::embed("ok", p);
    CHECK(v.values.size() == 64);
}

TEST_CASE("build_index validates inputs") {
    index::HashNgramProvider p(64, 0);
    std::vector<corpus::DocumentSegment> none;
    CHECK_THROWS_AS(index::build_index("q1", none, p), DataError);

    std::vector<corpus::DocumentSegment> dup = {seg("d1", "one"), seg("d1", "two")};
    CHECK_THROWS_WITH_AS(index::build_index("q1", dup, p), "duplicate doc_id \"d1\"", DataError);

    std::vector<corpus::DocumentSegment> ok = {seg("d1", "one"), seg("d2", "two")};
    auto idx = index::build_index("q1", ok, p);
    CHECK(idx.query_id() == "q1");
    CHECK(idx.size() == 2);
    CHECK(idx.dim() == 64);
    CHECK(idx.model_id() == p.model_id());
    CHECK(idx.format_version() == index::kIndexFormatVersion);
}

TEST_CASE("similarity search returns self as nearest with near-zero distance") {
    index::HashNgramProvider p(128, 0);
    std::vector<corpus::DocumentSegment> segments = {
        seg("d1", "alpine hiking boots with waterproof liners"),
        seg("d2", "vacuum insulated coffee bottle for commuting"),
        seg("d3", "low light houseplants for apartments")};
    auto idx = index::build_index("q1", segments, p);

    for (const auto& s : segments) {
        auto hits = idx.similarity_search_with_score(index::embed(s.text, p), 1);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].segment.doc_id == s.doc_id);
        CHECK(hits[0].distance <= 1e-6);
        CHECK(hits[0].distance >= 0.0);
    }
}

TEST_CASE("similarity search rejects model and dim mismatches") {
    index::HashNgramProvider p(64, 0);
    std::vector<corpus::DocumentSegment> segments = {seg("d1", "one"), seg("d2", "two")};
    auto idx = index::build_index("q1", segments, p);

    index::HashNgramProvider other(64, 9);
    CHECK_THROWS_AS(idx.similarity_search_with_score(index::embed("one", other), 1), DataError);

    index::EmbeddingVector bad;
    bad.model_id = p.model_id();
    bad.values = {1.0f, 0.0f};  // wrong dim
    CHECK_THROWS_AS(idx.similarity_search_with_score(bad, 1), DataError);

    // n caps at size; n = 0 yields nothing.
    auto all = idx.similarity_search_with_score(index::embed("one", p), 99);
    CHECK(all.size() == 2);
    CHECK(idx.similarity_search_with_score(index::embed("one", p), 0).empty());
}

// Brute-force cosine ranking oracle, mirrored in the acceptance gate at a
// larger scale. Ordering must match bitwise.
TEST_CASE("similarity search equals brute-force ranking on random corpora") {
    std::mt19937_64 rng(20240);
    index::HashNgramProvider p(96, 5);
    for (int iter = 0; iter < 30; ++iter) {
        auto count = 2 + util::uniform_below(rng, 29);
        std::vector<corpus::DocumentSegment> segments;
        for (std::uint64_t d = 0; d < count; ++d) {
            std::string text;
            auto words = 1 + util::uniform_below(rng, 10);
            for (std::uint64_t w = 0; w < words; ++w) {
                if (w) text += ' ';
                text += "word" + std::to_string(util::uniform_below(rng, 40));
            }
            segments.push_back(seg("d" + std::to_string(d), text));
        }
        auto idx = index::build_index("q", segments, p);
        auto query = index::embed("word" + std::to_string(util::uniform_below(rng, 40)), p);

        struct Row {
            std::size_t i;
            double dist;
        };
        std::vector<Row> oracle;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            double dot = 0.0;
            for (std::size_t k = 0; k < query.values.size(); ++k) {
                dot += static_cast<double>(query.values[k]) *
                       static_cast<double>(idx.vectors()[i][k]);
            }
            double dist = 1.0 - dot;
            if (dist < 0.0) dist = 0.0;
            if (dist > 2.0) dist = 2.0;
            oracle.push_back({i, dist});
        }
        std::stable_sort(oracle.begin(), oracle.end(),
                         [](const Row& a, const Row& b) { return a.dist < b.dist; });

        auto n = 1 + util::uniform_below(rng, count);
        auto hits = idx.similarity_search_with_score(query, n);
        REQUIRE(hits.size() == std::min<std::size_t>(n, segments.size()));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            REQUIRE(hits[i].entry_index == oracle[i].i);
            REQUIRE(hits[i].distance == oracle[i].dist);  // bitwise
            REQUIRE(hits[i].segment.doc_id == segments[oracle[i].i].doc_id);
        }
    }
}

TEST_CASE("DocumentIndex constructor validates shapes") {
    std::vector<corpus::DocumentSegment> segments = {seg("d1", "one")};
    std::vector<std::vector<float>> rows = {{1.0f, 0.0f}};
    CHECK_NOTHROW(index::DocumentIndex("q", segments, rows, "m"));
    CHECK_THROWS_AS(index::DocumentIndex("", segments, rows, "m"), DataError);
    CHECK_THROWS_AS(index::DocumentIndex("q", {}, {}, "m"), DataError);
    CHECK_THROWS_AS(index::DocumentIndex("q", segments, {}, "m"), DataError);
    CHECK_THROWS_AS(index::DocumentIndex("q", segments, rows, ""), DataError);
    std::vector<std::vector<float>> ragged = {{1.0f, 0.0f}, {1.0f}};
    auto two = two_doc_corpus();
    CHECK_THROWS_AS(index::DocumentIndex("q", two, ragged, "m"), DataError);
}
