#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "navads/cag_cache.hpp"
#include "navads/corpus.hpp"
#include "navads/llm_gateway.hpp"
#include "navads/prompts.hpp"
#include "navads/retrieval.hpp"

namespace navads::preference {

// One generated completion with its judge scores. gen_index is the
// generation order within a round and stays unique after filtering.
struct CandidateResponse {
    std::string text;
    std::size_t gen_index = 0;
    std::optional<double> detectability;  // [0,1], lower = more covert
    std::optional<double> fluency;        // [0,1], lower = more fluent
};

struct PreferencePair {
    std::string prompt;  // the full rendered generation prompt, context included
    std::string chosen;
    std::string rejected;
    double chosen_score = 0.0;
    double rejected_score = 0.0;
};

struct PairLoopConfig {
    std::size_t n_candidates = 4;  // per round, >= 2
    double min_gap = 0.0;          // required rejected - chosen, strict
    std::size_t max_rounds = 4;
    std::size_t target_pairs = 1;
    bool fluency_filter = false;  // drop candidates whose fluency score exceeds fluency_max
    double fluency_max = 0.5;

    void validate() const;  // throws ConfigError
};

// Extreme pair: chosen = minimum detectability, rejected = maximum, ties
// to the lowest gen_index on both sides. Returns nullopt when the score
// gap is not strictly above min_gap. Throws DataError on fewer than two
// candidates or any unscored one.
std::optional<PreferencePair> select_pair(std::string_view prompt,
                                          std::span<const CandidateResponse> candidates,
                                          double min_gap);

struct RoundStats {
    std::size_t round = 0;  // 1-based
    std::size_t generated = 0;
    std::size_t scored = 0;  // candidates surviving empty/fluency filtering
    bool pair_emitted = false;
};

struct PairLoopResult {
    std::vector<PreferencePair> pairs;
    std::size_t rounds_used = 0;
    std::vector<RoundStats> rounds;
    std::string diagnostic;  // set when the loop ends with zero pairs
};

// Everything run_pair_loop needs from the surrounding pipeline. Members
// are non-owning; keep them alive for the call.
struct PairLoopDeps {
    gateway::TextClient& client;
    const prompts::TemplateSet& templates;
    const index::EmbeddingProvider& embedder;
    cache::CacheConfig cache_cfg;
    retrieval::RetrievalConfig retrieval_cfg;
    gateway::SamplingConfig sampling;
};

// One query through the loop: context assembly (cache + retrieval), prompt
// render, then rounds of generate -> judge -> select_pair until
// target_pairs or max_rounds. Rounds are independent; gateway errors
// propagate tagged with the round number. Ending with zero pairs is not an
// error; the result carries a diagnostic instead.
PairLoopResult run_pair_loop(const corpus::QueryRecord& record, const PairLoopConfig& cfg,
                             const PairLoopDeps& deps);

// One JSONL record per pair: {"prompt", "chosen", "rejected"}, order
// preserved. Returns the count written; a sink failure raises DataError
// naming how many pairs made it out.
std::size_t export_orpo(std::span<const PreferencePair> pairs, std::ostream& out);

// Inverse of export_orpo on the three text fields (scores are not part of
// the format and come back as 0).
std::vector<PreferencePair> parse_orpo(std::istream& in);

}  // namespace navads::preference
