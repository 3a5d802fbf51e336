#include "navads/util.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "navads/errors.hpp"

namespace navads::util {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i < text.size()) ++n;
        while (i < text.size() && !is_space(text[i])) ++i;
    }
    return n;
}

std::string_view truncate_tokens(std::string_view text, std::size_t n) {
    if (n == 0) return text.substr(0, 0);
    std::size_t seen = 0;
    std::size_t i = 0;
    std::size_t end = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) {
            ++seen;
            end = i;
            if (seen == n) break;
        }
    }
    return text.substr(0, end);
}

Fnv1a64& Fnv1a64::update(std::string_view bytes) {
    for (unsigned char c : bytes) {
        h_ ^= c;
        h_ *= kFnvPrime;
    }
    return *this;
}

Fnv1a64& Fnv1a64::update_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h_ ^= static_cast<unsigned char>(v >> (8 * i));
        h_ *= kFnvPrime;
    }
    return *this;
}

Fnv1a64& Fnv1a64::update_f64(double v) {
    return update_u64(std::bit_cast<std::uint64_t>(v));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    return Fnv1a64{}.update(bytes).digest();
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string percent_encode(std::string_view s) {
    static const char* digits = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        bool safe = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (safe) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xF]);
        }
    }
    return out;
}

std::string format_fixed4(int ten_thousandths) {
    if (ten_thousandths < 0) throw Error("format_fixed4: negative value");
    int whole = ten_thousandths / 10000;
    int frac = ten_thousandths % 10000;
    std::string out = std::to_string(whole);
    out.push_back('.');
    out.push_back(static_cast<char>('0' + frac / 1000));
    out.push_back(static_cast<char>('0' + frac / 100 % 10));
    out.push_back(static_cast<char>('0' + frac / 10 % 10));
    out.push_back(static_cast<char>('0' + frac % 10));
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error("read failed: " + path.string());
    return ss.str();
}

void write_file_sync(const std::filesystem::path& path, std::string_view bytes) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("cannot create file " + path.string() + ": " + std::strerror(errno));
    const char* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            throw Error("write failed for " + path.string() + ": " + std::strerror(err));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        int err = errno;
        ::close(fd);
        throw Error("fsync failed for " + path.string() + ": " + std::strerror(err));
    }
    ::close(fd);
}

void fsync_dir(const std::filesystem::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;  // best effort; some filesystems refuse
    ::fsync(fd);
    ::close(fd);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw Error("uniform_below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace navads::util
