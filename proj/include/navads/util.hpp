#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace navads::util {

// Whitespace-delimited tokens (space, tab, CR, LF). Views into `text`.
std::vector<std::string_view> whitespace_tokens(std::string_view text);

std::size_t count_tokens(std::string_view text);

// Prefix of `text` ending at the last byte of its n-th token (trailing
// whitespace excluded). n >= token count returns the trimmed full text.
std::string_view truncate_tokens(std::string_view text, std::size_t n);

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Incremental FNV-1a 64. Not cryptographic; used for cache fingerprints and
// the deterministic mock/test providers.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view bytes);
    Fnv1a64& update_u64(std::uint64_t v);  // little-endian bytes
    Fnv1a64& update_f64(double v);         // IEEE bit pattern, little-endian
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = kFnvOffset;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::string to_hex(std::uint64_t v);  // 16 lowercase hex digits

// Percent-encodes everything outside [A-Za-z0-9_-] (uppercase hex), so any
// id maps to a single safe path component.
std::string percent_encode(std::string_view s);

// "0.8125" from ten-thousandths (8125). Locale-independent.
std::string format_fixed4(int ten_thousandths);

std::string read_text_file(const std::filesystem::path& path);  // throws Error

// write + fsync (no atomicity; callers rename). Throws Error.
void write_file_sync(const std::filesystem::path& path, std::string_view bytes);

void fsync_dir(const std::filesystem::path& dir);

// Uniform integer in [0, n) by rejection; portable across platforms, unlike
// std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

}  // namespace navads::util
