#include "navads/preference.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "navads/errors.hpp"

namespace navads::preference {

using nlohmann::json;
using nlohmann::ordered_json;

void PairLoopConfig::validate() const {
    if (n_candidates < 2) throw ConfigError("n_candidates must be >= 2");
    if (min_gap < 0.0) throw ConfigError("min_gap must be >= 0");
    if (max_rounds == 0) throw ConfigError("max_rounds must be positive");
    if (target_pairs == 0) throw ConfigError("target_pairs must be positive");
    if (fluency_max < 0.0 || fluency_max > 1.0) throw ConfigError("fluency_max must be in [0,1]");
}

std::optional<PreferencePair> select_pair(std::string_view prompt,
                                          std::span<const CandidateResponse> candidates,
                                          double min_gap) {
    if (candidates.size() < 2) throw DataError("need at least 2 candidates to form a pair");
    for (const auto& c : candidates) {
        if (!c.detectability) {
            throw DataError("unscored candidate at gen_index " + std::to_string(c.gen_index));
        }
    }
    const CandidateResponse* chosen = &candidates[0];
    const CandidateResponse* rejected = &candidates[0];
    for (const auto& c : candidates) {
        double s = *c.detectability;
        if (s < *chosen->detectability ||
            (s == *chosen->detectability && c.gen_index < chosen->gen_index)) {
            chosen = &c;
        }
        if (s > *rejected->detectability ||
            (s == *rejected->detectability && c.gen_index < rejected->gen_index)) {
            rejected = &c;
        }
    }
    double gap = *rejected->detectability - *chosen->detectability;
    if (gap <= min_gap) return std::nullopt;
    PreferencePair pair;
    pair.prompt = std::string(prompt);
    pair.chosen = chosen->text;
    pair.rejected = rejected->text;
    pair.chosen_score = *chosen->detectability;
    pair.rejected_score = *rejected->detectability;
    return pair;
}

PairLoopResult run_pair_loop(const corpus::QueryRecord& record, const PairLoopConfig& cfg,
                             const PairLoopDeps& deps) {
    cfg.validate();
    if (!record.item) throw DataError("item required for pair construction");

    auto idx = cache::load_or_build(deps.cache_cfg, record.query_id, record.segments,
                                    deps.embedder.model_id(), [&] {
                                        return index::build_index(record.query_id, record.segments,
                                                                  deps.embedder);
                                    });
    auto query_vec = index::embed(record.query, deps.embedder);
    auto ctx = retrieval::retrieve_context(idx, query_vec, deps.retrieval_cfg);
    std::string prompt = prompts::render_generation(deps.templates, ctx.context_text, record.item);

    PairLoopResult result;
    for (std::size_t round = 1; round <= cfg.max_rounds && result.pairs.size() < cfg.target_pairs;
         ++round) {
        RoundStats stats;
        stats.round = round;
        result.rounds_used = round;
        try {
            auto completions = gateway::generate(prompt, deps.sampling, cfg.n_candidates,
                                                 deps.client);
            stats.generated = completions.size();

            std::vector<CandidateResponse> scored;
            for (std::size_t i = 0; i < completions.size(); ++i) {
                if (completions[i].empty()) continue;
                CandidateResponse cand;
                cand.text = std::move(completions[i]);
                cand.gen_index = i;
                cand.detectability = gateway::judge_detectability(deps.templates, ctx.context_text,
                                                                  cand.text, *record.item,
                                                                  deps.client)
                                         .score;
                if (cfg.fluency_filter) {
                    cand.fluency = gateway::judge_fluency(deps.templates, ctx.context_text,
                                                          cand.text, deps.client)
                                       .score;
                    if (*cand.fluency > cfg.fluency_max) continue;
                }
                scored.push_back(std::move(cand));
            }
            stats.scored = scored.size();

            if (scored.size() >= 2) {
                if (auto pair = select_pair(prompt, scored, cfg.min_gap)) {
                    result.pairs.push_back(std::move(*pair));
                    stats.pair_emitted = true;
                }
            }
        } catch (const GatewayError& e) {
            throw GatewayError("round " + std::to_string(round) + ": " + e.what(), e.attempts());
        }
        result.rounds.push_back(stats);
    }

    if (result.pairs.empty()) {
        result.diagnostic = "no pair with score gap above " + std::to_string(cfg.min_gap) +
                            " after " + std::to_string(result.rounds_used) + " round(s) for query \"" +
                            record.query_id + "\"";
    }
    return result;
}

std::size_t export_orpo(std::span<const PreferencePair> pairs, std::ostream& out) {
    std::size_t written = 0;
    for (const auto& pair : pairs) {
        ordered_json j;
        j["prompt"] = pair.prompt;
        j["chosen"] = pair.chosen;
        j["rejected"] = pair.rejected;
        out << j.dump() << '\n';
        if (!out) {
            throw DataError("sink write failure after " + std::to_string(written) + " pair(s)");
        }
        ++written;
    }
    out.flush();
    if (!out) throw DataError("sink write failure after " + std::to_string(written) + " pair(s)");
    return written;
}

std::vector<PreferencePair> parse_orpo(std::istream& in) {
    std::vector<PreferencePair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
        }
        PreferencePair pair;
        for (const char* key : {"prompt", "chosen", "rejected"}) {
            if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
                throw ParseError(lineno, std::string("missing string field \"") + key + "\"");
            }
        }
        pair.prompt = j["prompt"].get<std::string>();
        pair.chosen = j["chosen"].get<std::string>();
        pair.rejected = j["rejected"].get<std::string>();
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace navads::preference
