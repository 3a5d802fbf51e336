#include "navads/index.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "navads/errors.hpp"
#include "navads/util.hpp"

namespace navads::index {

CorpusStats compute_corpus_stats(std::span<const corpus::DocumentSegment> segments) {
    CorpusStats stats;
    stats.doc_count = segments.size();
    std::size_t total_len = 0;
    for (const auto& seg : segments) {
        auto tokens = util::whitespace_tokens(seg.text);
        total_len += tokens.size();
        std::unordered_set<std::string_view> unique(tokens.begin(), tokens.end());
        for (auto term : unique) ++stats.doc_frequency[std::string(term)];
    }
    if (stats.doc_count > 0) {
        stats.avg_doc_len = static_cast<double>(total_len) / static_cast<double>(stats.doc_count);
    }
    return stats;
}

double bm25_idf(const CorpusStats& stats, std::string_view term) {
    auto it = stats.doc_frequency.find(std::string(term));
    double df = it == stats.doc_frequency.end() ? 0.0 : static_cast<double>(it->second);
    double n = static_cast<double>(stats.doc_count);
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double bm25_score(std::string_view query, std::string_view doc_text, const CorpusStats& stats,
                  const Bm25Params& params) {
    if (stats.doc_count == 0 || stats.avg_doc_len <= 0.0) return 0.0;
    auto doc_tokens = util::whitespace_tokens(doc_text);
    std::unordered_map<std::string_view, std::size_t> tf;
    for (auto t : doc_tokens) ++tf[t];
    double len_ratio = static_cast<double>(doc_tokens.size()) / stats.avg_doc_len;
    double score = 0.0;
    for (auto term : util::whitespace_tokens(query)) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        double f = static_cast<double>(it->second);
        double denom = f + params.k1 * (1.0 - params.b + params.b * len_ratio);
        score += bm25_idf(stats, term) * f * (params.k1 + 1.0) / denom;
    }
    return score;
}

void annotate_bm25(std::string_view query, std::vector<corpus::DocumentSegment>& segments,
                   const Bm25Params& params) {
    CorpusStats stats = compute_corpus_stats(segments);
    for (auto& seg : segments) seg.bm25_score = bm25_score(query, seg.text, stats, params);
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
    if (text.empty()) throw DataError("cannot embed empty text");
    return provider.embed(text);
}

HashNgramProvider::HashNgramProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("embedding dim must be positive");
    model_id_ = "hash-ngram3/v1/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
}

EmbeddingVector HashNgramProvider::embed(std::string_view text) const {
    auto gram_hash = [this](std::string_view gram) {
        util::Fnv1a64 h;
        h.update_u64(seed_);
        h.update(gram);
        return h.digest();
    };

    std::vector<double> acc(dim_, 0.0);
    auto add = [&](std::uint64_t h) {
        double sign = (h >> 63) ? -1.0 : 1.0;
        acc[static_cast<std::size_t>(h % dim_)] += sign;
    };
    if (text.size() < 3) {
        add(gram_hash(text));
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i) add(gram_hash(text.substr(i, 3)));
    }

    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    if (norm_sq == 0.0) {
        // Signed counts cancelled completely; fall back to a single spike
        // so the vector stays unit-normalizable.
        acc[static_cast<std::size_t>(gram_hash(text) % dim_)] = 1.0;
        norm_sq = 1.0;
    }

    EmbeddingVector out;
    out.model_id = model_id_;
    out.values.resize(dim_);
    double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < dim_; ++i) {
        out.values[i] = static_cast<float>(acc[i] * inv);
    }
    // One refinement pass over the rounded floats tightens the float32
    // norm to well under 1e-6.
    double res = 0.0;
    for (float v : out.values) res += static_cast<double>(v) * static_cast<double>(v);
    double fix = 1.0 / std::sqrt(res);
    for (auto& v : out.values) v = static_cast<float>(static_cast<double>(v) * fix);
    return out;
}

DocumentIndex::DocumentIndex(std::string query_id, std::vector<corpus::DocumentSegment> segments,
                             std::vector<std::vector<float>> vectors, std::string model_id)
    : query_id_(std::move(query_id)),
      segments_(std::move(segments)),
      vectors_(std::move(vectors)),
      model_id_(std::move(model_id)) {
    if (query_id_.empty()) throw DataError("index query_id must be non-empty");
    if (segments_.empty()) throw DataError("nothing to index");
    if (segments_.size() != vectors_.size()) {
        throw DataError("segment/vector count mismatch");
    }
    if (model_id_.empty()) throw DataError("index model_id must be non-empty");
    dim_ = vectors_.front().size();
    if (dim_ == 0) throw DataError("index vectors must be non-empty");
    for (const auto& row : vectors_) {
        if (row.size() != dim_) throw DataError("index vectors must share one dimension");
    }
}

std::vector<ScoredSegment> DocumentIndex::similarity_search_with_score(
    const EmbeddingVector& query, std::size_t n) const {
    if (query.model_id != model_id_) {
        throw DataError("embedding model mismatch: query \"" + query.model_id + "\" vs index \"" +
                        model_id_ + "\"");
    }
    if (query.values.size() != dim_) {
        throw DataError("embedding dimension mismatch: query " +
                        std::to_string(query.values.size()) + " vs index " + std::to_string(dim_));
    }
    std::vector<ScoredSegment> scored;
    scored.reserve(segments_.size());
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        double dot = 0.0;
        const auto& row = vectors_[i];
        for (std::size_t d = 0; d < dim_; ++d) {
            dot += static_cast<double>(row[d]) * static_cast<double>(query.values[d]);
        }
        double distance = std::clamp(1.0 - dot, 0.0, 2.0);
        scored.push_back(ScoredSegment{segments_[i], distance, i});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredSegment& a, const ScoredSegment& b) {
                         return a.distance < b.distance;
                     });
    if (scored.size() > n) scored.resize(n);
    return scored;
}

DocumentIndex build_index(std::string_view query_id,
                          std::span<const corpus::DocumentSegment> segments,
                          const EmbeddingProvider& provider) {
    if (segments.empty()) throw DataError("nothing to index");
    std::unordered_set<std::string> seen;
    std::vector<corpus::DocumentSegment> copy;
    std::vector<std::vector<float>> vectors;
    copy.reserve(segments.size());
    vectors.reserve(segments.size());
    for (const auto& seg : segments) {
        if (!seen.insert(seg.doc_id).second) {
            throw DataError("duplicate doc_id \"" + seg.doc_id + "\"");
        }
        copy.push_back(seg);
        vectors.push_back(embed(seg.text, provider).values);
    }
    return DocumentIndex(std::string(query_id), std::move(copy), std::move(vectors),
                         provider.model_id());
}

}  // namespace navads::index
