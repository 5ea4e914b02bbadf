#pragma once
//
// Shared vocabulary types for the nci library: calendar dates, error
// hierarchy, deterministic random streams and number formatting.
//

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nci {

/// Error category; maps one-to-one onto the CLI exit codes.
enum class ErrorKind { input = 1, numerical = 2, config = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
};

/// Malformed input row; carries the 1-based line number.
struct ParseError : InputError {
    ParseError(std::size_t line, const std::string& w)
        : InputError("line " + std::to_string(line) + ": " + w), line(line), detail(w) {}
    std::size_t line;
    std::string detail;
};

struct ConflictError : InputError {
    using InputError::InputError;
};

struct IntegrityError : InputError {
    using InputError::InputError;
};

struct ValidationError : InputError {
    using InputError::InputError;
};

struct AlignmentError : InputError {
    using InputError::InputError;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct EmptyBucketError : NumericalError {
    using NumericalError::NumericalError;
};

struct DegenerateVarianceError : NumericalError {
    using NumericalError::NumericalError;
};

struct CollinearityError : NumericalError {
    using NumericalError::NumericalError;
};

struct DomainError : NumericalError {
    using NumericalError::NumericalError;
};

inline std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// ---------------------------------------------------------------------------
// Calendar dates (UTC days)
// ---------------------------------------------------------------------------

class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days d) : days_(d) {}
    Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                            std::chrono::day{d}}) {}

    /// Parses `YYYY-MM-DD`; nullopt on anything else.
    static std::optional<Date> parse(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-')
            return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        for (std::size_t i : {0, 1, 2, 3}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            y = y * 10 + (s[i] - '0');
        }
        for (std::size_t i : {5, 6}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            m = m * 10 + unsigned(s[i] - '0');
        }
        for (std::size_t i : {8, 9}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            d = d * 10 + unsigned(s[i] - '0');
        }
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date{std::chrono::sys_days{ymd}};
    }

    std::string str() const {
        std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()));
        return buf;
    }

    std::chrono::sys_days days() const { return days_; }
    Date next() const { return Date{days_ + std::chrono::days{1}}; }
    bool is_weekday() const {
        auto wd = std::chrono::weekday{days_}.c_encoding();
        return wd != 0 && wd != 6;
    }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Parses an RFC 3339 timestamp and returns the UTC calendar day it falls on.
inline std::optional<Date> parse_rfc3339_day(std::string_view s) {
    // YYYY-MM-DD[Tt ]HH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    if (s.size() < 20) return std::nullopt;
    auto date = Date::parse(s.substr(0, 10));
    if (!date || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (i >= s.size() || s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto hh = digits(11, 2), mm = digits(14, 2), ss = digits(17, 2);
    if (!hh || !mm || !ss || s[13] != ':' || s[16] != ':' || *hh > 23 || *mm > 59 || *ss > 60)
        return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return std::nullopt;
    }
    if (pos >= s.size()) return std::nullopt;
    int offset_min = 0;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        if (pos + 1 != s.size()) return std::nullopt;
    } else if (s[pos] == '+' || s[pos] == '-') {
        auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
        if (!oh || !om || s[pos + 3] != ':' || pos + 6 != s.size()) return std::nullopt;
        offset_min = (*oh * 60 + *om) * (s[pos] == '+' ? 1 : -1);
    } else {
        return std::nullopt;
    }
    // local time minus offset = UTC
    long minutes = long(*hh) * 60 + *mm - offset_min;
    auto day = date->days() + std::chrono::days{minutes >= 0 ? minutes / 1440
                                                             : -((-minutes + 1439) / 1440)};
    return Date{day};
}

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Independent stream for (seed, index); schedule-independent by construction.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index = 0) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index),
                      std::uint32_t(index >> 32), 0x6e6369u};
    return Rng{seq};
}

/// Uniform integer in [0, n) by rejection; portable across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = Rng::max() - (Rng::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

/// FNV-1a, used for config fingerprints in output headers.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace nci
