#include "navads/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "navads/errors.hpp"
#include "navads/util.hpp"

namespace navads::metrics {

using nlohmann::ordered_json;

BasicMetrics basic_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw DataError("empty evaluation");
    BasicMetrics m;
    m.counts = c;
    if (c.tp + c.fp > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        m.precision_defined = true;
    }
    if (c.tp + c.fn > 0) {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        m.recall_defined = true;
        // By construction, not re-derived from fn/(fn+tp): keeps
        // fnr + recall == 1 bitwise.
        m.fnr = 1.0 - m.recall;
        m.fnr_defined = true;
    }
    if (m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0) {
        m.f1 = f1_from_pr(m.precision, m.recall);
        m.f1_defined = true;
    }
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.accuracy_defined = true;
    return m;
}

double f1_from_pr(double precision, double recall) {
    double denom = precision + recall;
    if (denom == 0.0) return 0.0;
    return 2.0 * precision * recall / denom;
}

double stealth_score(double fnr, double precision, double recall) {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError(std::string(name) + " must be in [0,1]");
        }
    };
    check(fnr, "fnr");
    check(precision, "precision");
    check(recall, "recall");
    return (fnr + precision + (1.0 - recall)) / 3.0;
}

namespace {

double clamped_prob(int y, double y_hat, double eps) {
    if (y != 0 && y != 1) throw DataError("y must be 0 or 1");
    if (!(y_hat >= 0.0 && y_hat <= 1.0)) throw DataError("y_hat must be in [0,1]");
    if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("eps must be in (0, 0.5)");
    return std::clamp(y_hat, eps, 1.0 - eps);
}

}  // namespace

double bce(int y, double y_hat, double eps) {
    double p = clamped_prob(y, y_hat, eps);
    return -(static_cast<double>(y) * std::log(p) +
             (1.0 - static_cast<double>(y)) * std::log(1.0 - p));
}

double bce_gradient(int y, double y_hat, double eps) {
    double p = clamped_prob(y, y_hat, eps);
    return -static_cast<double>(y) / p + (1.0 - static_cast<double>(y)) / (1.0 - p);
}

double orpo_objective(const OrpoTerms& t) {
    if (t.lm_loss < 0.0) throw DataError("lm_loss must be >= 0");
    if (t.lambda < 0.0) throw DataError("lambda must be >= 0");
    double rank = std::max(0.0, t.margin - (t.chosen_score - t.rejected_score));
    return t.lm_loss + t.lambda * rank;
}

BasicMetrics aggregate(std::span<const BasicMetrics> per_class, AggregateMode mode) {
    if (per_class.empty()) throw DataError("nothing to aggregate");
    if (mode == AggregateMode::micro) {
        ConfusionCounts pooled;
        for (const auto& m : per_class) {
            pooled.tp += m.counts.tp;
            pooled.fp += m.counts.fp;
            pooled.fn += m.counts.fn;
            pooled.tn += m.counts.tn;
        }
        return basic_metrics(pooled);
    }
    // Macro: unweighted mean; a metric undefined in any class keeps its 0
    // contribution and clears the aggregate's defined flag.
    BasicMetrics out;
    double n = static_cast<double>(per_class.size());
    out.precision_defined = out.recall_defined = out.f1_defined = out.fnr_defined =
        out.accuracy_defined = true;
    for (const auto& m : per_class) {
        out.precision += m.precision / n;
        out.recall += m.recall / n;
        out.f1 += m.f1 / n;
        out.fnr += m.fnr / n;
        out.accuracy += m.accuracy / n;
        out.precision_defined &= m.precision_defined;
        out.recall_defined &= m.recall_defined;
        out.f1_defined &= m.f1_defined;
        out.fnr_defined &= m.fnr_defined;
        out.accuracy_defined &= m.accuracy_defined;
    }
    return out;
}

MetricsReport evaluate_detector(std::span<const corpus::DetectionExample> examples,
                                const gateway::OfflineScoreProvider& scores,
                                const EvalConfig& cfg) {
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t take = examples.size();
    if (cfg.sample_n) {
        if (*cfg.sample_n > examples.size()) {
            throw DataError("sample_n " + std::to_string(*cfg.sample_n) +
                            " exceeds dataset size " + std::to_string(examples.size()));
        }
        take = *cfg.sample_n;
        if (take < examples.size()) {
            // Partial Fisher-Yates: the first `take` slots are a uniform
            // sample without replacement.
            std::mt19937_64 rng(cfg.seed);
            for (std::size_t i = 0; i < take; ++i) {
                std::size_t j = i + static_cast<std::size_t>(
                                        util::uniform_below(rng, examples.size() - i));
                std::swap(order[i], order[j]);
            }
        }
    }

    std::vector<std::string> missing_label;
    std::vector<std::string> missing_score;
    for (std::size_t i = 0; i < take; ++i) {
        const auto& ex = examples[order[i]];
        if (!ex.label) missing_label.push_back(ex.example_id);
        if (!scores.contains(ex.example_id)) {
            missing_score.push_back(ex.example_id);
            continue;
        }
        const auto& rec = scores.get(ex.example_id);
        if (cfg.mode == PredictionMode::threshold ? !rec.score : !rec.logits) {
            missing_score.push_back(ex.example_id);
        }
    }
    if (!missing_label.empty() || !missing_score.empty()) {
        auto join = [](const std::vector<std::string>& ids) {
            std::string out;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (i > 0) out += ", ";
                out += ids[i];
            }
            return out;
        };
        std::string msg;
        if (!missing_label.empty()) msg += "missing label for: " + join(missing_label);
        if (!missing_score.empty()) {
            if (!msg.empty()) msg += "; ";
            msg += (cfg.mode == PredictionMode::threshold ? "missing score for: "
                                                          : "missing logits for: ") +
                   join(missing_score);
        }
        throw DataError(msg);
    }

    ConfusionCounts counts;
    for (std::size_t i = 0; i < take; ++i) {
        const auto& ex = examples[order[i]];
        const auto& rec = scores.get(ex.example_id);
        int pred;
        if (cfg.mode == PredictionMode::threshold) {
            pred = *rec.score >= 0.5 ? 1 : 0;
        } else {
            pred = (*rec.logits)[1] > (*rec.logits)[0] ? 1 : 0;
        }
        if (*ex.label == 1) {
            pred == 1 ? ++counts.tp : ++counts.fn;
        } else {
            pred == 1 ? ++counts.fp : ++counts.tn;
        }
    }

    MetricsReport report;
    report.evaluated = take;
    report.positive = basic_metrics(counts);
    report.negative = basic_metrics(
        ConfusionCounts{.tp = counts.tn, .fp = counts.fn, .fn = counts.fp, .tn = counts.tp});
    const BasicMetrics per_class[] = {report.positive, report.negative};
    report.macro = aggregate(per_class, AggregateMode::macro);
    report.micro = aggregate(per_class, AggregateMode::micro);
    if (report.positive.fnr_defined && report.positive.precision_defined &&
        report.positive.recall_defined) {
        report.stealth = stealth_score(report.positive.fnr, report.positive.precision,
                                       report.positive.recall);
    }
    return report;
}

nlohmann::ordered_json basic_to_json(const BasicMetrics& m) {
    ordered_json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["fnr"] = m.fnr;
    j["accuracy"] = m.accuracy;
    ordered_json undefined = ordered_json::array();
    if (!m.precision_defined) undefined.push_back("precision");
    if (!m.recall_defined) undefined.push_back("recall");
    if (!m.f1_defined) undefined.push_back("f1");
    if (!m.fnr_defined) undefined.push_back("fnr");
    if (!m.accuracy_defined) undefined.push_back("accuracy");
    j["undefined"] = undefined;
    if (m.counts.total() > 0) {
        j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn},
                       {"tn", m.counts.tn}};
    }
    return j;
}

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
    ordered_json j = basic_to_json(report.positive);
    if (report.stealth) j["stealth"] = *report.stealth;
    j["evaluated"] = report.evaluated;
    j["per_class"] = {{"ad", basic_to_json(report.positive)},
                      {"no_ad", basic_to_json(report.negative)}};
    j["macro"] = basic_to_json(report.macro);
    j["micro"] = basic_to_json(report.micro);
    return j;
}

}  // namespace navads::metrics
