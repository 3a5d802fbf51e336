#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "navads/index.hpp"

namespace navads::cache {

struct CacheConfig {
    std::filesystem::path root_dir;
    int format_version = index::kIndexFormatVersion;
    // Receives human-readable notices (corrupt entry rebuilt, persist
    // failed). Never called on a clean hit or a silent staleness rebuild.
    std::function<void(const std::string&)> on_warning;
};

struct CacheMeta {
    int format_version = 0;
    std::string model_id;
    std::size_t dim = 0;
    std::size_t count = 0;
    std::string segment_digest;
};

// Order-sensitive digest over doc_id, text, edu_value, and bm25_score of
// every segment. Used both as the staleness key and as an integrity check
// on a loaded entry.
std::string segment_digest(std::span<const corpus::DocumentSegment> segments);

// Directory holding one query's entry: <root>/<percent-encoded query_id>.
std::filesystem::path entry_dir(const CacheConfig& cfg, std::string_view query_id);

// Writes meta.json, vectors.bin, and segments.jsonl into a staging
// directory, fsyncs, then renames it into place under the index's
// query_id. Replacing an existing entry is atomic. Throws CacheError on
// I/O failure.
void persist(const CacheConfig& cfg, const index::DocumentIndex& idx);

// Loads an entry. Returns nullopt when none exists; throws CacheError when
// an entry is present but unreadable (bad JSON, version mismatch, shape or
// digest disagreement, truncated blob). On success fills meta_out if given.
std::optional<index::DocumentIndex> load(const CacheConfig& cfg, std::string_view query_id,
                                         CacheMeta* meta_out = nullptr);

// Cache-first lookup. A hit must match the expected model and the digest
// of `segments`; a stale entry is rebuilt silently, a corrupt one is
// rebuilt with a warning. The fresh index is persisted back; if persisting
// fails the in-memory index is still returned, with a warning.
index::DocumentIndex load_or_build(const CacheConfig& cfg, std::string_view query_id,
                                   std::span<const corpus::DocumentSegment> segments,
                                   const std::string& expected_model_id,
                                   const std::function<index::DocumentIndex()>& builder);

}  // namespace navads::cache
