#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "navads/corpus.hpp"
#include "navads/errors.hpp"
#include "navads/util.hpp"

using namespace navads;
using corpus::NormalizePolicy;

static std::string norm(std::string_view s) {
    return corpus::normalize_text(s, NormalizePolicy::generation_preprocess);
}

TEST_CASE("normalize_text frozen oracle") {
    // Curly quotes become ASCII, repeated punctuation collapses, whitespace
    // runs shrink to one space, case folds.
    CHECK(norm("Hello,,  \xe2\x80\x9cWorld\xe2\x80\x9d!!") == "hello, \"world\"!");
}

TEST_CASE("normalize_text maps unicode punctuation to ASCII") {
    CHECK(norm("it\xe2\x80\x99s") == "it's");            // right single quote
    CHECK(norm("\xe2\x80\x98q\xe2\x80\x99") == "'q'");   // single quote pair
    CHECK(norm("a\xe2\x80\x94""b") == "a-b");            // em-dash
    CHECK(norm("a\xe2\x80\x93""b") == "a-b");            // en-dash
    CHECK(norm("\xe2\x88\x92""5") == "-5");              // minus sign
    CHECK(norm("\xc2\xabq\xc2\xbb") == "\"q\"");         // guillemets
    CHECK(norm("T\xc3\xa9l\xc3\xa9") == "t\xc3\xa9l\xc3\xa9");  // other UTF-8 preserved
}

TEST_CASE("normalize_text collapses runs and trims") {
    CHECK(norm("  lots   of\t\tspace  ") == "lots of space");
    CHECK(norm("wait...") == "wait.");
    CHECK(norm("really?\?!") == "really?!");  // only identical neighbors collapse
    CHECK(norm("A--B\xe2\x80\x94-C") == "a-b-c");
    CHECK(norm("") == "");
    CHECK(norm(" \t ") == "");
}

TEST_CASE("normalize_text is idempotent and preserve is identity") {
    std::mt19937_64 rng(3) ;
    const std::string alphabet = "aB \t.?!,\"'";
    for (int iter = 0; iter < 400; ++iter) {
        std::string text;
        auto len = util::uniform_below(rng, 30);
        for (std::uint64_t i = 0; i < len; ++i) {
            text += alphabet[util::uniform_below(rng, alphabet.size())];
        }
        if (util::uniform_below(rng, 4) == 0) text += "\xe2\x80\x9c\xe2\x80\x9d\xe2\x80\x94";
        auto once = norm(text);
        CHECK(norm(once) == once);
        CHECK(corpus::normalize_text(text, NormalizePolicy::preserve) == text);
    }
}

TEST_CASE("generation dataset parses records and optional blocks") {
    std::istringstream in(R"({"id": "q1", "query": "boots", "item": "TrailX", "qualities": ["light"], "segments": [{"doc_id": "d1", "text": "alpha", "edu_value": 1.5, "bm25_score": 3.25}]}

{"id": "q2", "query": "plants", "segments": []}
)");
    auto records = corpus::parse_generation_dataset(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].query_id == "q1");
    CHECK(records[0].query == "boots");
    REQUIRE(records[0].item.has_value());
    CHECK(records[0].item->item == "TrailX");
    REQUIRE(records[0].item->qualities.size() == 1);
    CHECK(records[0].item->qualities[0] == "light");
    REQUIRE(records[0].segments.size() == 1);
    CHECK(records[0].segments[0].doc_id == "d1");
    CHECK(records[0].segments[0].edu_value == 1.5);
    REQUIRE(records[0].segments[0].bm25_score.has_value());
    CHECK(*records[0].segments[0].bm25_score == 3.25);
    CHECK_FALSE(records[1].item.has_value());
    CHECK(records[1].segments.empty());
}

TEST_CASE("generation dataset rejects malformed lines with line numbers") {
    auto expect_parse_error = [](const std::string& payload, const std::string& needle) {
        std::istringstream in(payload);
        try {
            corpus::parse_generation_dataset(in);
            FAIL_CHECK("expected ParseError for: " << payload);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_parse_error("{\"id\": \"q1\", \"query\": \"x\"}\nnot json\n", "line 2");
    expect_parse_error("{\"id\": \"q1\"}\n", "query");
    expect_parse_error("{\"query\": \"x\"}\n", "id");
    expect_parse_error("{\"id\": \"q1\", \"query\": \"x\", \"qualities\": [\"a\"]}\n",
                       "qualities present without item");
    expect_parse_error(
        "{\"id\": \"q1\", \"query\": \"x\"}\n{\"id\": \"q1\", \"query\": \"y\"}\n",
        "duplicate query_id \"q1\"");
    expect_parse_error("{\"id\": \"q1\", \"query\": \"x\", \"segments\": [{\"doc_id\": \"d\", "
                       "\"text\": \"t\", \"edu_value\": -1}]}\n",
                       "edu_value");
    expect_parse_error("{\"id\": \"q1\", \"query\": \"x\", \"segments\": [{\"doc_id\": \"d\", "
                       "\"text\": \"\", \"edu_value\": 1}]}\n",
                       "text");
}

TEST_CASE("detection dataset parses optional query and label") {
    std::istringstream in(R"({"id": "r1", "query": "q", "responseText": "resp", "label": 1}
{"id": "r2", "responseText": "other"}
)");
    auto examples = corpus::parse_detection_dataset(in);
    REQUIRE(examples.size() == 2);
    CHECK(examples[0].example_id == "r1");
    REQUIRE(examples[0].query.has_value());
    CHECK(*examples[0].query == "q");
    REQUIRE(examples[0].label.has_value());
    CHECK(*examples[0].label == 1);
    CHECK_FALSE(examples[1].query.has_value());
    CHECK_FALSE(examples[1].label.has_value());
}

TEST_CASE("detection dataset rejects out-of-domain labels") {
    auto expect_parse_error = [](const std::string& payload, const std::string& needle) {
        std::istringstream in(payload);
        try {
            corpus::parse_detection_dataset(in);
            FAIL_CHECK("expected ParseError for: " << payload);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_parse_error("{\"id\": \"r1\", \"responseText\": \"x\", \"label\": 2}\n",
                       "label out of domain");
    expect_parse_error("{\"id\": \"r1\", \"responseText\": \"x\", \"label\": 0.5}\n",
                       "label out of domain");
    expect_parse_error("{\"id\": \"r1\", \"responseText\": \"\"}\n", "responseText");
    expect_parse_error("{\"id\": \"r1\", \"responseText\": \"x\"}\n"
                       "{\"id\": \"r1\", \"responseText\": \"y\"}\n",
                       "duplicate id \"r1\"");
}

TEST_CASE("datasets round trip through write and parse") {
    std::ifstream in(NAVADS_TEST_DATA_DIR "/gen_small.jsonl");
    REQUIRE(in.good());
    auto records = corpus::parse_generation_dataset(in);
    REQUIRE(records.size() == 3);

    std::ostringstream out;
    corpus::write_generation_dataset(records, out);
    std::istringstream back(out.str());
    auto reparsed = corpus::parse_generation_dataset(back);
    REQUIRE(reparsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(reparsed[i].query_id == records[i].query_id);
        CHECK(reparsed[i].query == records[i].query);
        CHECK(reparsed[i].item.has_value() == records[i].item.has_value());
        REQUIRE(reparsed[i].segments.size() == records[i].segments.size());
        for (std::size_t s = 0; s < records[i].segments.size(); ++s) {
            CHECK(reparsed[i].segments[s].doc_id == records[i].segments[s].doc_id);
            CHECK(reparsed[i].segments[s].text == records[i].segments[s].text);
            CHECK(reparsed[i].segments[s].edu_value == records[i].segments[s].edu_value);
            CHECK(reparsed[i].segments[s].bm25_score == records[i].segments[s].bm25_score);
        }
    }

    // Writing twice yields identical bytes; order and formatting are stable.
    std::ostringstream out2;
    corpus::write_generation_dataset(records, out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("detection dataset round trips") {
    std::ifstream in(NAVADS_TEST_DATA_DIR "/detect_small.jsonl");
    REQUIRE(in.good());
    auto examples = corpus::parse_detection_dataset(in);
    REQUIRE(examples.size() == 10);

    std::ostringstream out;
    corpus::write_detection_dataset(examples, out);
    std::istringstream back(out.str());
    auto reparsed = corpus::parse_detection_dataset(back);
    REQUIRE(reparsed.size() == examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        CHECK(reparsed[i].example_id == examples[i].example_id);
        CHECK(reparsed[i].query == examples[i].query);
        CHECK(reparsed[i].response == examples[i].response);
        CHECK(reparsed[i].label == examples[i].label);
    }
}

TEST_CASE("segment json round trip preserves the bm25 flag") {
    corpus::DocumentSegment seg;
    seg.doc_id = "d1";
    seg.text = "body";
    seg.edu_value = 2.25;
    auto j = corpus::segment_to_json(seg);
    CHECK_FALSE(j.contains("bm25_score"));
    auto back = corpus::segment_from_json(j);
    CHECK_FALSE(back.bm25_score.has_value());

    seg.bm25_score = 0.0;
    auto j2 = corpus::segment_to_json(seg);
    REQUIRE(j2.contains("bm25_score"));
    auto back2 = corpus::segment_from_json(j2);
    REQUIRE(back2.bm25_score.has_value());
    CHECK(*back2.bm25_score == 0.0);
}
