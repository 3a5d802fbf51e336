#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "navads/corpus.hpp"

namespace navads::index {

// Version of the in-memory/persisted index structure. Bumped on any
// incompatible layout change; the cache refuses entries from other versions.
inline constexpr int kIndexFormatVersion = 1;

// Okapi BM25 with the conventional k1/b defaults. Term frequencies come
// from whitespace tokenization of the raw text.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct CorpusStats {
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
    std::unordered_map<std::string, std::size_t> doc_frequency;
};

CorpusStats compute_corpus_stats(std::span<const corpus::DocumentSegment> segments);

// IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1). Unseen terms get df = 0.
double bm25_idf(const CorpusStats& stats, std::string_view term);

// Sum over query term occurrences of IDF * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avglen)).
double bm25_score(std::string_view query, std::string_view doc_text, const CorpusStats& stats,
                  const Bm25Params& params = {});

// Fills segment.bm25_score for every segment against the given query.
void annotate_bm25(std::string_view query, std::vector<corpus::DocumentSegment>& segments,
                   const Bm25Params& params = {});

// Dense embedding as produced by an embedding backend: float32 storage,
// tagged with the model that produced it. Vectors are unit-normalized.
struct EmbeddingVector {
    std::vector<float> values;
    std::string model_id;
};

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string model_id() const = 0;
};

// Checked embedding entry point: rejects empty text, then delegates to the
// provider. All pipeline call sites go through here.
EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

// Deterministic local embedder: hashed character 3-grams folded into a
// fixed number of signed buckets, then unit-normalized. Stands in for a
// sentence-embedding model while keeping runs reproducible offline.
class HashNgramProvider final : public EmbeddingProvider {
  public:
    explicit HashNgramProvider(std::size_t dim = 384, std::uint64_t seed = 0);

    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const override { return dim_; }
    std::string model_id() const override { return model_id_; }

  private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::string model_id_;
};

struct ScoredSegment {
    corpus::DocumentSegment segment;
    double distance = 0.0;       // 1 - cosine similarity, in [0, 2]
    std::size_t entry_index = 0;
};

// In-memory dense index over one query's document segments. Row i of the
// vector table is the embedding of segment i; all rows share one model_id
// and dim.
class DocumentIndex {
  public:
    DocumentIndex() = default;

    // Reassembles an index from already-computed vectors (cache loads).
    // Validates shape agreement between segments and vectors.
    DocumentIndex(std::string query_id, std::vector<corpus::DocumentSegment> segments,
                  std::vector<std::vector<float>> vectors, std::string model_id);

    std::size_t size() const { return segments_.size(); }
    std::size_t dim() const { return dim_; }
    int format_version() const { return format_version_; }
    const std::string& query_id() const { return query_id_; }
    const std::string& model_id() const { return model_id_; }
    const std::vector<corpus::DocumentSegment>& segments() const { return segments_; }
    const std::vector<std::vector<float>>& vectors() const { return vectors_; }

    // Nearest segments by ascending distance (1 - cosine). Ties keep
    // insertion order. n is capped at size(). The query vector must match
    // dim and model_id.
    std::vector<ScoredSegment> similarity_search_with_score(const EmbeddingVector& query,
                                                            std::size_t n) const;

  private:
    std::string query_id_;
    std::vector<corpus::DocumentSegment> segments_;
    std::vector<std::vector<float>> vectors_;
    std::string model_id_;
    std::size_t dim_ = 0;
    int format_version_ = kIndexFormatVersion;
};

// Embeds every segment with the provider. Throws DataError on an empty
// segment list or duplicate doc_id.
DocumentIndex build_index(std::string_view query_id,
                          std::span<const corpus::DocumentSegment> segments,
                          const EmbeddingProvider& provider);

}  // namespace navads::index
