#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "navads/corpus.hpp"
#include "navads/llm_gateway.hpp"

namespace navads::metrics {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Per-class scalar metrics. A metric whose denominator is empty holds 0
// with its defined flag cleared; it never goes NaN. fnr is computed as
// 1 - recall, so fnr + recall == 1 holds bitwise whenever fn + tp > 0.
struct BasicMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fnr = 0.0;
    double accuracy = 0.0;
    bool precision_defined = false;
    bool recall_defined = false;
    bool f1_defined = false;
    bool fnr_defined = false;
    bool accuracy_defined = false;
    ConfusionCounts counts;
};

// Throws DataError("empty evaluation") when every count is zero.
BasicMetrics basic_metrics(const ConfusionCounts& c);

// 2PR/(P+R); 0 when the denominator vanishes.
double f1_from_pr(double precision, double recall);

// (fnr + precision + (1 - recall)) / 3. Inputs are taken as reported
// scalars; each must lie in [0,1].
double stealth_score(double fnr, double precision, double recall);

// Binary cross-entropy -[y log p + (1-y) log(1-p)] with p = y_hat clamped
// to [eps, 1-eps]. y must be 0 or 1; y_hat must lie in [0,1].
double bce(int y, double y_hat, double eps = 1e-12);

// d(bce)/d(y_hat) = -y/p + (1-y)/(1-p), same clamping.
double bce_gradient(int y, double y_hat, double eps = 1e-12);

struct OrpoTerms {
    double lm_loss = 0.0;        // >= 0
    double chosen_score = 0.0;   // log-odds style ranking inputs
    double rejected_score = 0.0;
    double lambda = 0.5;
    double margin = 1.0;
};

// lm_loss + lambda * max(0, margin - (chosen_score - rejected_score)).
// Equals lm_loss exactly once the score gap reaches the margin.
double orpo_objective(const OrpoTerms& t);

enum class AggregateMode {
    macro,  // unweighted mean of per-class metrics (zero-denominator zeros included)
    micro,  // metrics of the summed confusion counts
};

BasicMetrics aggregate(std::span<const BasicMetrics> per_class, AggregateMode mode);

enum class PredictionMode {
    threshold,  // predict 1 when probability >= 0.5
    argmax,     // logits (no_ad, ad); tie predicts 0
};

struct EvalConfig {
    PredictionMode mode = PredictionMode::threshold;
    std::optional<std::size_t> sample_n;  // uniform sample without replacement
    std::uint64_t seed = 0;
};

struct MetricsReport {
    BasicMetrics positive;  // class 1 = ad, the headline metrics
    BasicMetrics negative;  // class 0 = no ad
    BasicMetrics macro;
    BasicMetrics micro;
    std::optional<double> stealth;  // set when fnr/precision/recall are all defined
    std::size_t evaluated = 0;
};

// Seeded sample (when sample_n is set), per-mode prediction from the score
// provider, then confusion metrics. Every sampled example must carry a
// label and the score shape the mode needs; violations raise one DataError
// listing all offending ids.
MetricsReport evaluate_detector(std::span<const corpus::DetectionExample> examples,
                                const gateway::OfflineScoreProvider& scores,
                                const EvalConfig& cfg);

nlohmann::ordered_json basic_to_json(const BasicMetrics& m);
nlohmann::ordered_json report_to_json(const MetricsReport& report);

}  // namespace navads::metrics
