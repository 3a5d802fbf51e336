#include "navads/cag_cache.hpp"

#include <fcntl.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "navads/errors.hpp"
#include "navads/util.hpp"

#ifndef RENAME_EXCHANGE
#define RENAME_EXCHANGE (1 << 1)
#endif

namespace navads::cache {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kMetaFile[] = "meta.json";
constexpr char kVectorsFile[] = "vectors.bin";
constexpr char kSegmentsFile[] = "segments.jsonl";

void warn(const CacheConfig& cfg, const std::string& msg) {
    if (cfg.on_warning) cfg.on_warning(msg);
}

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_u64_le(const std::string& in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]))
             << (8 * i);
    }
    return v;
}

std::string encode_vectors(const index::DocumentIndex& idx) {
    std::string blob;
    blob.reserve(16 + idx.size() * idx.dim() * 4);
    append_u64_le(blob, idx.size());
    append_u64_le(blob, idx.dim());
    for (const auto& row : idx.vectors()) {
        for (float f : row) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
            for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
        }
    }
    return blob;
}

std::vector<std::vector<float>> decode_vectors(const std::string& blob, std::size_t want_count,
                                               std::size_t want_dim) {
    if (blob.size() < 16) throw CacheError("vectors.bin truncated header");
    std::uint64_t count = read_u64_le(blob, 0);
    std::uint64_t dim = read_u64_le(blob, 8);
    if (count != want_count || dim != want_dim) {
        throw CacheError("vectors.bin header disagrees with meta.json");
    }
    std::size_t expected = 16 + static_cast<std::size_t>(count) * static_cast<std::size_t>(dim) * 4;
    if (blob.size() != expected) {
        throw CacheError("vectors.bin has " + std::to_string(blob.size()) + " bytes, expected " +
                         std::to_string(expected));
    }
    std::vector<std::vector<float>> rows(count);
    std::size_t off = 16;
    for (auto& row : rows) {
        row.resize(dim);
        for (auto& f : row) {
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) {
                bits |= static_cast<std::uint32_t>(
                            static_cast<unsigned char>(blob[off + static_cast<std::size_t>(i)]))
                        << (8 * i);
            }
            f = std::bit_cast<float>(bits);
            off += 4;
        }
    }
    return rows;
}

CacheMeta parse_meta(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CacheError(std::string("meta.json is malformed: ") + e.what());
    }
    if (!j.is_object()) throw CacheError("meta.json must hold an object");
    CacheMeta meta;
    auto get = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) throw CacheError(std::string("meta.json missing \"") + key + "\"");
        return *it;
    };
    const json& ver = get("format_version");
    if (!ver.is_number_integer()) throw CacheError("meta.json format_version must be an integer");
    meta.format_version = ver.get<int>();
    const json& model = get("model_id");
    if (!model.is_string()) throw CacheError("meta.json model_id must be a string");
    meta.model_id = model.get<std::string>();
    const json& dim = get("dim");
    if (!dim.is_number_unsigned() && !dim.is_number_integer()) {
        throw CacheError("meta.json dim must be an integer");
    }
    meta.dim = dim.get<std::size_t>();
    const json& count = get("count");
    if (!count.is_number_unsigned() && !count.is_number_integer()) {
        throw CacheError("meta.json count must be an integer");
    }
    meta.count = count.get<std::size_t>();
    const json& digest = get("segment_digest");
    if (!digest.is_string()) throw CacheError("meta.json segment_digest must be a string");
    meta.segment_digest = digest.get<std::string>();
    return meta;
}

std::vector<corpus::DocumentSegment> parse_segment_lines(const std::string& text) {
    std::vector<corpus::DocumentSegment> segments;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            segments.push_back(corpus::segment_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw CacheError("segments.jsonl line " + std::to_string(lineno) +
                             " is malformed: " + e.what());
        } catch (const DataError& e) {
            throw CacheError("segments.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return segments;
}

std::string read_entry_file(const fs::path& dir, const char* name) {
    fs::path p = dir / name;
    std::error_code ec;
    if (!fs::exists(p, ec)) throw CacheError(std::string("missing ") + name);
    try {
        return util::read_text_file(p);
    } catch (const Error& e) {
        throw CacheError(e.what());
    }
}

// Swaps/renames the staged directory into place. The replace path prefers
// renameat2(RENAME_EXCHANGE); older kernels fall back to a two-step rename
// through a trash name.
void move_into_place(const fs::path& root, const fs::path& staged, const fs::path& entry) {
    std::error_code ec;
    if (fs::exists(entry, ec)) {
        if (::syscall(SYS_renameat2, AT_FDCWD, staged.c_str(), AT_FDCWD, entry.c_str(),
                      RENAME_EXCHANGE) == 0) {
            fs::remove_all(staged, ec);  // now holds the displaced entry
            return;
        }
        fs::path trash = entry;
        trash += ".trash";
        fs::remove_all(trash, ec);
        if (std::rename(entry.c_str(), trash.c_str()) != 0) {
            throw CacheError("cannot displace existing entry " + entry.string() + ": " +
                             std::strerror(errno));
        }
        if (std::rename(staged.c_str(), entry.c_str()) != 0) {
            int err = errno;
            std::rename(trash.c_str(), entry.c_str());  // restore the old entry
            throw CacheError("cannot move staged entry into " + entry.string() + ": " +
                             std::strerror(err));
        }
        fs::remove_all(trash, ec);
    } else if (std::rename(staged.c_str(), entry.c_str()) != 0) {
        throw CacheError("cannot move staged entry into " + entry.string() + ": " +
                         std::strerror(errno));
    }
    util::fsync_dir(root);
}

}  // namespace

std::string segment_digest(std::span<const corpus::DocumentSegment> segments) {
    util::Fnv1a64 h;
    for (const auto& seg : segments) {
        h.update(seg.doc_id).update("\x1f");
        h.update(seg.text).update("\x1f");
        h.update_f64(seg.edu_value);
        if (seg.bm25_score) {
            h.update("\x01").update_f64(*seg.bm25_score);
        } else {
            h.update(std::string_view("\x00", 1));
        }
        h.update("\x1e");
    }
    return util::to_hex(h.digest());
}

std::filesystem::path entry_dir(const CacheConfig& cfg, std::string_view query_id) {
    return cfg.root_dir / util::percent_encode(query_id);
}

void persist(const CacheConfig& cfg, const index::DocumentIndex& idx) {
    std::error_code ec;
    fs::create_directories(cfg.root_dir, ec);
    if (ec) throw CacheError("cannot create cache root " + cfg.root_dir.string() + ": " + ec.message());

    fs::path entry = entry_dir(cfg, idx.query_id());
    fs::path staged = entry;
    staged += ".staging-" + std::to_string(::getpid());
    fs::remove_all(staged, ec);
    fs::create_directories(staged, ec);
    if (ec) throw CacheError("cannot create staging dir " + staged.string() + ": " + ec.message());

    try {
        ordered_json meta;
        meta["format_version"] = cfg.format_version;
        meta["model_id"] = idx.model_id();
        meta["dim"] = idx.dim();
        meta["count"] = idx.size();
        meta["segment_digest"] = segment_digest(idx.segments());
        util::write_file_sync(staged / kMetaFile, meta.dump() + "\n");

        std::ostringstream seg_lines;
        for (const auto& seg : idx.segments()) {
            seg_lines << corpus::segment_to_json(seg).dump() << '\n';
        }
        util::write_file_sync(staged / kSegmentsFile, seg_lines.str());
        util::write_file_sync(staged / kVectorsFile, encode_vectors(idx));
        util::fsync_dir(staged);
    } catch (const Error& e) {
        fs::remove_all(staged, ec);
        throw CacheError(e.what());
    }

    try {
        move_into_place(cfg.root_dir, staged, entry);
    } catch (const CacheError&) {
        fs::remove_all(staged, ec);
        throw;
    }
}

std::optional<index::DocumentIndex> load(const CacheConfig& cfg, std::string_view query_id,
                                         CacheMeta* meta_out) {
    fs::path entry = entry_dir(cfg, query_id);
    std::error_code ec;
    if (!fs::exists(entry, ec)) return std::nullopt;

    CacheMeta meta = parse_meta(read_entry_file(entry, kMetaFile));
    if (meta.format_version != cfg.format_version) {
        throw CacheError("cache format version " + std::to_string(meta.format_version) +
                         ", expected " + std::to_string(cfg.format_version));
    }
    if (meta.count == 0) throw CacheError("cache entry declares zero segments");
    if (meta.dim == 0) throw CacheError("cache entry declares zero dimension");
    if (meta.model_id.empty()) throw CacheError("cache entry has empty model_id");

    auto segments = parse_segment_lines(read_entry_file(entry, kSegmentsFile));
    if (segments.size() != meta.count) {
        throw CacheError("segments.jsonl holds " + std::to_string(segments.size()) +
                         " segments, meta.json declares " + std::to_string(meta.count));
    }
    if (segment_digest(segments) != meta.segment_digest) {
        throw CacheError("segment digest mismatch");
    }

    auto vectors = decode_vectors(read_entry_file(entry, kVectorsFile), meta.count, meta.dim);
    if (meta_out) *meta_out = meta;
    try {
        return index::DocumentIndex(std::string(query_id), std::move(segments), std::move(vectors),
                                    meta.model_id);
    } catch (const DataError& e) {
        throw CacheError(e.what());
    }
}

index::DocumentIndex load_or_build(const CacheConfig& cfg, std::string_view query_id,
                                   std::span<const corpus::DocumentSegment> segments,
                                   const std::string& expected_model_id,
                                   const std::function<index::DocumentIndex()>& builder) {
    std::string want_digest = segment_digest(segments);
    try {
        CacheMeta meta;
        auto hit = load(cfg, query_id, &meta);
        if (hit && meta.model_id == expected_model_id && meta.segment_digest == want_digest) {
            return std::move(*hit);
        }
        // Absent or stale (model/segments changed): rebuild without noise.
    } catch (const CacheError& e) {
        warn(cfg, "cache entry for \"" + std::string(query_id) + "\" is unreadable (" + e.what() +
                      "); rebuilding");
    }

    index::DocumentIndex idx = builder();
    if (idx.model_id() != expected_model_id) {
        throw ConfigError("builder produced model \"" + idx.model_id() + "\", expected \"" +
                          expected_model_id + "\"");
    }
    if (idx.query_id() != query_id) {
        throw ConfigError("builder produced query_id \"" + idx.query_id() + "\", expected \"" +
                          std::string(query_id) + "\"");
    }
    try {
        persist(cfg, idx);
    } catch (const CacheError& e) {
        warn(cfg, "cannot persist cache entry for \"" + std::string(query_id) + "\" (" + e.what() +
                      "); continuing with the in-memory index");
    }
    return idx;
}

}  // namespace navads::cache
