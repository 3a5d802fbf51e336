#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "navads/errors.hpp"
#include "navads/preference.hpp"

namespace fs = std::filesystem;
using namespace navads;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

preference::CandidateResponse cand(std::string text, std::size_t gi, double det) {
    preference::CandidateResponse c;
    c.text = std::move(text);
    c.gen_index = gi;
    c.detectability = det;
    return c;
}

corpus::QueryRecord load_record(const std::string& id) {
    std::ifstream in(NAVADS_TEST_DATA_DIR "/gen_small.jsonl");
    REQUIRE(in.good());
    for (auto& rec : corpus::parse_generation_dataset(in)) {
        if (rec.query_id == id) return rec;
    }
    FAIL("record not found: " << id);
    return {};
}

// Fully scripted backend: generation prompts return the scripted texts,
// the subtlety judge echoes the last [overtness=...] marker, the fluency
// judge answers from a text fragment -> score table.
struct ScriptedClient final : gateway::TextClient {
    std::vector<std::string> generations;
    std::vector<std::pair<std::string, std::string>> fluency_rules;  // fragment -> score
    int generation_calls = 0;

    std::vector<std::string> complete(std::string_view prompt, const gateway::SamplingConfig&,
                                      std::size_t n) override {
        if (prompt.starts_with("You are a Subtlety Judge")) {
            auto pos = prompt.rfind("[overtness=");
            std::string score = "0.5";
            if (pos != std::string_view::npos) {
                auto end = prompt.find(']', pos);
                score = std::string(prompt.substr(pos + 11, end - pos - 11));
            }
            return {"{\"score\": " + score + "}"};
        }
        if (prompt.starts_with("You are a fluency judge")) {
            for (const auto& [fragment, score] : fluency_rules) {
                if (prompt.find(fragment) != std::string_view::npos) {
                    return {"{\"score\": " + score + "}"};
                }
            }
            return {"{\"score\": 0.0}"};
        }
        ++generation_calls;
        std::vector<std::string> out = generations;
        out.resize(n);  // scripted sets always match n_candidates in these tests
        return out;
    }
};

preference::PairLoopDeps make_deps(gateway::TextClient& client,
                                   const prompts::TemplateSet& templates,
                                   const index::EmbeddingProvider& embedder,
                                   const fs::path& cache_root) {
    cache::CacheConfig cache_cfg;
    cache_cfg.root_dir = cache_root;
    retrieval::RetrievalConfig retrieval_cfg;
    retrieval_cfg.k = 2;
    retrieval_cfg.context_budget = 500;
    return preference::PairLoopDeps{client,        templates,
                                    embedder,      std::move(cache_cfg),
                                    retrieval_cfg, gateway::SamplingConfig{}};
}

}  // namespace

TEST_CASE("select_pair picks the extremes") {
    std::vector<preference::CandidateResponse> cands = {cand("low", 0, 0.1), cand("high", 1, 0.9),
                                                        cand("mid", 2, 0.5)};
    auto pair = preference::select_pair("the prompt", cands, 0.0);
    REQUIRE(pair.has_value());
    CHECK(pair->prompt == "the prompt");
    CHECK(pair->chosen == "low");
    CHECK(pair->rejected == "high");
    CHECK(pair->chosen_score == 0.1);
    CHECK(pair->rejected_score == 0.9);
}

TEST_CASE("select_pair breaks ties toward the lowest gen_index") {
    std::vector<preference::CandidateResponse> mins = {cand("first-min", 0, 0.2),
                                                       cand("second-min", 1, 0.2),
                                                       cand("max", 2, 0.8)};
    auto pair = preference::select_pair("p", mins, 0.0);
    REQUIRE(pair.has_value());
    CHECK(pair->chosen == "first-min");
    CHECK(pair->rejected == "max");

    std::vector<preference::CandidateResponse> maxes = {cand("min", 0, 0.2),
                                                        cand("first-max", 1, 0.8),
                                                        cand("second-max", 2, 0.8)};
    auto pair2 = preference::select_pair("p", maxes, 0.0);
    REQUIRE(pair2.has_value());
    CHECK(pair2->rejected == "first-max");
}

TEST_CASE("select_pair returns none when the gap is not strictly above min_gap") {
    std::vector<preference::CandidateResponse> flat = {cand("a", 0, 0.4), cand("b", 1, 0.4)};
    CHECK_FALSE(preference::select_pair("p", flat, 0.0).has_value());

    std::vector<preference::CandidateResponse> spread = {cand("a", 0, 0.3), cand("b", 1, 0.6)};
    CHECK_FALSE(preference::select_pair("p", spread, 0.3).has_value());
    CHECK(preference::select_pair("p", spread, 0.29).has_value());
}

TEST_CASE("select_pair validates its inputs") {
    std::vector<preference::CandidateResponse> one = {cand("only", 0, 0.5)};
    CHECK_THROWS_WITH_AS(preference::select_pair("p", one, 0.0),
                         "need at least 2 candidates to form a pair", DataError);

    std::vector<preference::CandidateResponse> unscored = {cand("a", 0, 0.5), cand("b", 3, 0.5)};
    unscored[1].detectability.reset();
    CHECK_THROWS_WITH_AS(preference::select_pair("p", unscored, 0.0),
                         "unscored candidate at gen_index 3", DataError);
}

TEST_CASE("pair loop config validation") {
    preference::PairLoopConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.n_candidates = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.min_gap = -0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_rounds = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.target_pairs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("run_pair_loop selects extremes from scripted candidates") {
    TempDir dir("navads_pref_scripted");
    ScriptedClient client;
    client.generations = {"covert answer [overtness=0.1000]", "overt answer [overtness=0.9000]",
                          "middling answer [overtness=0.5000]"};
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q1");

    preference::PairLoopConfig cfg;
    cfg.n_candidates = 3;
    auto result = preference::run_pair_loop(record, cfg, deps);
    REQUIRE(result.pairs.size() == 1);
    CHECK(result.rounds_used == 1);
    REQUIRE(result.rounds.size() == 1);
    CHECK(result.rounds[0].generated == 3);
    CHECK(result.rounds[0].scored == 3);
    CHECK(result.rounds[0].pair_emitted);
    CHECK(result.diagnostic.empty());

    const auto& pair = result.pairs[0];
    CHECK(pair.chosen == "covert answer [overtness=0.1000]");
    CHECK(pair.rejected == "overt answer [overtness=0.9000]");
    CHECK(pair.chosen_score == 0.1);
    CHECK(pair.rejected_score == 0.9);
    // The pair's prompt is the full rendered generation prompt.
    CHECK(pair.prompt.find("## Context:") != std::string::npos);
    CHECK(pair.prompt.find("TrailX Pro") != std::string::npos);
}

TEST_CASE("run_pair_loop skips empty completions") {
    TempDir dir("navads_pref_empty");
    ScriptedClient client;
    client.generations = {"covert [overtness=0.2000]", "", "overt [overtness=0.7000]"};
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q1");

    preference::PairLoopConfig cfg;
    cfg.n_candidates = 3;
    auto result = preference::run_pair_loop(record, cfg, deps);
    REQUIRE(result.pairs.size() == 1);
    CHECK(result.rounds[0].generated == 3);
    CHECK(result.rounds[0].scored == 2);
    CHECK(result.pairs[0].chosen_score == 0.2);
    CHECK(result.pairs[0].rejected_score == 0.7);
}

TEST_CASE("fluency filter drops disfluent candidates before pairing") {
    TempDir dir("navads_pref_fluency");
    ScriptedClient client;
    client.generations = {"covert [overtness=0.1000]", "clumsy overt [overtness=0.9000]",
                          "smooth overt [overtness=0.6000]"};
    client.fluency_rules = {{"clumsy", "0.9"}, {"smooth", "0.2"}, {"covert", "0.1"}};
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q1");

    preference::PairLoopConfig cfg;
    cfg.n_candidates = 3;
    cfg.fluency_filter = true;
    cfg.fluency_max = 0.5;
    auto result = preference::run_pair_loop(record, cfg, deps);
    REQUIRE(result.pairs.size() == 1);
    CHECK(result.rounds[0].scored == 2);  // the clumsy candidate is gone
    CHECK(result.pairs[0].rejected == "smooth overt [overtness=0.6000]");
    CHECK(result.pairs[0].rejected_score == 0.6);
}

TEST_CASE("run_pair_loop exhausts rounds and reports a diagnostic") {
    TempDir dir("navads_pref_nogap");
    ScriptedClient client;
    client.generations = {"same [overtness=0.5000]", "also same [overtness=0.5000]"};
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q1");

    preference::PairLoopConfig cfg;
    cfg.n_candidates = 2;
    cfg.max_rounds = 3;
    auto result = preference::run_pair_loop(record, cfg, deps);
    CHECK(result.pairs.empty());
    CHECK(result.rounds_used == 3);
    CHECK(result.rounds.size() == 3);
    CHECK(result.diagnostic.find("q1") != std::string::npos);
    CHECK(result.diagnostic.find("no pair with score gap above") != std::string::npos);
    CHECK(client.generation_calls == 3);
}

TEST_CASE("run_pair_loop requires an item") {
    TempDir dir("navads_pref_noitem");
    ScriptedClient client;
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q3");  // no item in the fixture

    CHECK_THROWS_WITH_AS(preference::run_pair_loop(record, {}, deps),
                         "item required for pair construction", DataError);
}

TEST_CASE("gateway failures are tagged with the round number") {
    struct FailingClient final : gateway::TextClient {
        std::vector<std::string> complete(std::string_view, const gateway::SamplingConfig&,
                                          std::size_t) override {
            throw GatewayError("endpoint down", 5);
        }
    };
    TempDir dir("navads_pref_gwfail");
    FailingClient client;
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto deps = make_deps(client, templates, embedder, dir.path);
    auto record = load_record("q1");

    try {
        preference::run_pair_loop(record, {}, deps);
        FAIL_CHECK("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(std::string(e.what()) == "round 1: endpoint down");
        CHECK(e.attempts() == 5);
    }
}

TEST_CASE("mock pair loops always order chosen below rejected") {
    auto templates = prompts::load_templates(NAVADS_TEMPLATES_DIR);
    index::HashNgramProvider embedder(48, 0);
    auto record = load_record("q1");

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TempDir dir("navads_pref_mock_" + std::to_string(seed));
        gateway::MockClient client(seed);
        auto deps = make_deps(client, templates, embedder, dir.path);
        preference::PairLoopConfig cfg;
        cfg.n_candidates = 4;
        auto result = preference::run_pair_loop(record, cfg, deps);
        for (const auto& pair : result.pairs) {
            REQUIRE(pair.chosen_score < pair.rejected_score);
            REQUIRE(pair.chosen != pair.rejected);
        }
        // Same seed, fresh state: byte-identical outcome.
        TempDir dir2("navads_pref_mock2_" + std::to_string(seed));
        gateway::MockClient client2(seed);
        auto deps2 = make_deps(client2, templates, embedder, dir2.path);
        auto result2 = preference::run_pair_loop(record, cfg, deps2);
        REQUIRE(result2.pairs.size() == result.pairs.size());
        for (std::size_t i = 0; i < result.pairs.size(); ++i) {
            CHECK(result2.pairs[i].prompt == result.pairs[i].prompt);
            CHECK(result2.pairs[i].chosen == result.pairs[i].chosen);
            CHECK(result2.pairs[i].rejected == result.pairs[i].rejected);
            CHECK(result2.pairs[i].chosen_score == result.pairs[i].chosen_score);
            CHECK(result2.pairs[i].rejected_score == result.pairs[i].rejected_score);
        }
    }
}

TEST_CASE("orpo export and parse round trip") {
    std::vector<preference::PreferencePair> pairs(2);
    pairs[0].prompt = "prompt with\nnewline and \"quotes\"";
    pairs[0].chosen = "covert text";
    pairs[0].rejected = "overt text";
    pairs[0].chosen_score = 0.1;
    pairs[0].rejected_score = 0.9;
    pairs[1].prompt = "unicode \xe2\x80\x94 prompt";
    pairs[1].chosen = "second chosen";
    pairs[1].rejected = "second rejected";

    std::ostringstream out;
    CHECK(preference::export_orpo(pairs, out) == 2);
    auto lines = out.str();
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);

    std::istringstream in(lines);
    auto back = preference::parse_orpo(in);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].prompt == pairs[i].prompt);
        CHECK(back[i].chosen == pairs[i].chosen);
        CHECK(back[i].rejected == pairs[i].rejected);
    }

    // Scores are not part of the export format.
    CHECK(back[0].chosen_score == 0.0);
    CHECK(back[0].rejected_score == 0.0);
    CHECK(lines.find("score") == std::string::npos);
}

TEST_CASE("orpo export reports sink failures") {
    std::vector<preference::PreferencePair> pairs(1);
    pairs[0].prompt = "p";
    pairs[0].chosen = "c";
    pairs[0].rejected = "r";

    std::ostringstream out;
    out.setstate(std::ios::badbit);
    try {
        preference::export_orpo(pairs, out);
        FAIL_CHECK("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("sink write failure") != std::string::npos);
        CHECK(std::string(e.what()).find("0 pair(s)") != std::string::npos);
    }
}

TEST_CASE("orpo parse rejects incomplete records") {
    auto expect_parse_error = [](const std::string& payload) {
        std::istringstream in(payload);
        CHECK_THROWS_AS(preference::parse_orpo(in), ParseError);
    };
    expect_parse_error("{\"prompt\": \"p\", \"chosen\": \"c\"}\n");
    expect_parse_error("{\"prompt\": \"p\", \"chosen\": \"c\", \"rejected\": 3}\n");
    expect_parse_error("not json\n");
}
