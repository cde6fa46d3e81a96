// Shared low-level helpers: UTF-8 iteration, whitespace handling, a
// deterministic RNG, and an order-preserving parallel map.
#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace docforge::util {

// ---------------------------------------------------------------------------
// UTF-8

// Decodes the codepoint starting at byte offset `i` and advances `i`.
// Invalid sequences decode as the raw lead byte so iteration always makes
// progress and never throws; distance math stays well defined on junk input.
inline char32_t utf8_next(std::string_view s, size_t& i) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) { ++i; return b0; }
    size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return b0; }
    if (i + len > s.size()) { ++i; return b0; }
    for (size_t k = 1; k < len; ++k) {
        const unsigned char bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0) != 0x80) { ++i; return b0; }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) out.push_back(utf8_next(s, i));
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) { out.push_back(static_cast<char>(cp)); }
    else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(const std::u32string& s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) utf8_append(out, cp);
    return out;
}

// ---------------------------------------------------------------------------
// Whitespace

// Unicode whitespace, matched by codepoint. Everything here collapses to a
// single ASCII space before text comparison.
inline bool is_space_cp(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000: case 0xFEFF:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200B;
    }
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Collapses whitespace runs to single spaces and trims both ends.
inline std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    size_t i = 0;
    while (i < s.size()) {
        const size_t at = i;
        const char32_t cp = utf8_next(s, i);
        if (is_space_cp(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.append(s.substr(at, i - at));
        }
    }
    return out;
}

inline std::string rtrim(std::string_view s) {
    size_t e = s.size();
    while (e > 0 && is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(0, e));
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline bool is_blank(std::string_view s) {
    size_t i = 0;
    while (i < s.size())
        if (!is_space_cp(utf8_next(s, i))) return false;
    return true;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    if (s.empty()) return lines;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '\n') {
            std::string_view line = s.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    // "a\nb\n" is two lines, not three
    if (!lines.empty() && lines.back().empty() && !s.empty() && s.back() == '\n')
        lines.pop_back();
    return lines;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// splitmix64 core. std::uniform_*_distribution is implementation-defined, so
// every draw that must reproduce across platforms goes through this class.
class SeededRng {
  public:
    explicit SeededRng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n); n must be nonzero. Multiply-shift, slight modulo
    // bias is irrelevant at our scales and keeps the draw branch-free.
    size_t uniform_index(size_t n) {
        return static_cast<size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

  private:
    uint64_t state_;
};

// Stable 64-bit hash (FNV-1a), used to derive per-sample RNG streams from
// (global seed, sample id) independent of processing order.
inline uint64_t fnv1a(std::string_view s, uint64_t seed = 0xCBF29CE484222325ull) {
    uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline uint64_t derive_stream(uint64_t global_seed, std::string_view sample_id) {
    uint64_t h = fnv1a(sample_id);
    // mix the global seed through one splitmix round so nearby seeds diverge
    uint64_t z = global_seed + 0x9E3779B97F4A7C15ull * (h | 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Order-preserving parallel map
//
// Runs fn(i) for i in [0, n) on `workers` threads. Results land in a
// pre-sized vector, so output order never depends on scheduling. Exceptions
// are captured and rethrown on the calling thread after join.
template <typename Result>
std::vector<Result> parallel_map_ordered(size_t n, unsigned workers,
                                         const std::function<Result(size_t)>& fn) {
    std::vector<Result> results(n);
    if (n == 0) return results;
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = workers > n ? static_cast<unsigned>(n) : workers;
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
    return results;
}

}  // namespace docforge::util
