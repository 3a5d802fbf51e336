#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "navads/index.hpp"

namespace navads::retrieval {

// distance + (2 - max(2, edu_value)). Ranked ascending, so a segment with
// edu_value above 2 moves ahead of equally-near low-quality ones.
double combined_score(double distance, double edu_value);

struct RankedPick {
    corpus::DocumentSegment segment;
    double distance = 0.0;
    double combined = 0.0;
};

// Stable re-rank of nearest-neighbor candidates by ascending combined
// score, keeping at most k.
std::vector<RankedPick> rerank(std::span<const index::ScoredSegment> candidates, std::size_t k);

enum class BudgetPolicy {
    drop_whole_segment,  // skip any segment that would overflow, keep trying later ones
    truncate_last,       // cut the first overflowing segment at a token boundary, then stop
};

struct RetrievalConfig {
    std::size_t k = 4;
    std::size_t context_budget = 4000;  // whitespace tokens across included segments
    BudgetPolicy budget_policy = BudgetPolicy::drop_whole_segment;
};

struct RetrievedContext {
    std::string query_id;
    // Picks that made it into the context, in rank order. Segments keep
    // their full text even when context_text holds a truncated copy.
    std::vector<RankedPick> picks;
    std::string context_text;  // pick texts joined by one blank line
    std::size_t budget_used = 0;
};

// Nearest-neighbor search over-fetching 2k candidates, combined-score
// re-rank to k, then budget assembly. Throws DataError when not a single
// segment fits the budget.
RetrievedContext retrieve_context(const index::DocumentIndex& idx,
                                  const index::EmbeddingVector& query_vec,
                                  const RetrievalConfig& cfg);

}  // namespace navads::retrieval
