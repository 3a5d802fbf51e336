#include "navads/retrieval.hpp"

#include <algorithm>

#include "navads/errors.hpp"
#include "navads/util.hpp"

namespace navads::retrieval {

double combined_score(double distance, double edu_value) {
    return distance + (2.0 - std::max(2.0, edu_value));
}

std::vector<RankedPick> rerank(std::span<const index::ScoredSegment> candidates, std::size_t k) {
    std::vector<RankedPick> picks;
    picks.reserve(candidates.size());
    for (const auto& cand : candidates) {
        picks.push_back(RankedPick{cand.segment, cand.distance,
                                   combined_score(cand.distance, cand.segment.edu_value)});
    }
    std::stable_sort(picks.begin(), picks.end(), [](const RankedPick& a, const RankedPick& b) {
        return a.combined < b.combined;
    });
    if (picks.size() > k) picks.resize(k);
    return picks;
}

RetrievedContext retrieve_context(const index::DocumentIndex& idx,
                                  const index::EmbeddingVector& query_vec,
                                  const RetrievalConfig& cfg) {
    if (cfg.k == 0) throw ConfigError("retrieval k must be positive");
    if (cfg.context_budget == 0) throw ConfigError("context budget must be positive");

    std::size_t prefetch = std::min(cfg.k * 2, idx.size());
    auto candidates = idx.similarity_search_with_score(query_vec, prefetch);
    auto ranked = rerank(candidates, cfg.k);

    RetrievedContext out;
    out.query_id = idx.query_id();
    for (const auto& pick : ranked) {
        std::size_t tokens = util::count_tokens(pick.segment.text);
        if (out.budget_used + tokens <= cfg.context_budget) {
            if (!out.context_text.empty()) out.context_text += "\n\n";
            out.context_text += pick.segment.text;
            out.budget_used += tokens;
            out.picks.push_back(pick);
            continue;
        }
        if (cfg.budget_policy == BudgetPolicy::drop_whole_segment) continue;
        // truncate_last: take what still fits of this segment, then stop.
        std::size_t remaining = cfg.context_budget - out.budget_used;
        if (remaining > 0) {
            std::string_view cut = util::truncate_tokens(pick.segment.text, remaining);
            if (!cut.empty()) {
                if (!out.context_text.empty()) out.context_text += "\n\n";
                out.context_text += cut;
                out.budget_used += remaining;
                out.picks.push_back(pick);
            }
        }
        break;
    }
    if (out.picks.empty()) {
        throw DataError("context budget exhausted: no retrieved segment fits");
    }
    return out;
}

}  // namespace navads::retrieval
