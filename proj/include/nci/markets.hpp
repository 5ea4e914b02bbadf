#pragma once
//
// Market data ingestion and the two volatility indicators:
//
//   daily volatility       (H_t - L_t) / (0.5 (C_t + C_{t-1}))
//   historical volatility  sqrt( (1/w) sum_{trailing w} log(C_t / C_{t-1})^2 )
//
// The historical form is the uncentered second moment of log returns, with
// no mean subtraction and no annualization.
//

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "nci/core.hpp"
#include "nci/csv.hpp"
#include "nci/series.hpp"

namespace nci {

struct OhlcvBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0, volume = 0;
};

struct OhlcvSeries {
    std::string symbol;
    std::vector<OhlcvBar> bars;
};

namespace detail {

inline std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Checks the bar invariants; returns an empty string when valid.
inline std::string bar_violation(const OhlcvBar& b) {
    if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0)) return "prices must be positive";
    if (b.high < b.low) return "high < low";
    if (b.low > std::min(b.open, b.close)) return "low above open/close";
    if (b.high < std::max(b.open, b.close)) return "high below open/close";
    if (b.volume < 0) return "negative volume";
    return {};
}

inline OhlcvSeries read_ohlcv(std::istream& in, std::string symbol) {
    OhlcvSeries s{std::move(symbol), {}};
    csv::Reader reader(in);
    reader.expect_header({"date", "open", "high", "low", "close", "volume"});
    while (auto row = reader.next()) {
        const auto line = reader.line();
        if (row->size() != 6) throw ParseError(line, "expected 6 fields");
        auto date = Date::parse((*row)[0]);
        if (!date) throw ParseError(line, "bad date `" + (*row)[0] + "`");
        OhlcvBar bar{*date};
        double* fields[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume};
        for (std::size_t k = 0; k < 5; ++k) {
            auto v = detail::parse_number((*row)[k + 1]);
            if (!v) throw ParseError(line, "bad number `" + (*row)[k + 1] + "`");
            *fields[k] = *v;
        }
        if (auto why = bar_violation(bar); !why.empty()) throw ParseError(line, why);
        if (!s.bars.empty() && !(s.bars.back().date < bar.date))
            throw ParseError(line, "date " + bar.date.str() + " not after " + s.bars.back().date.str());
        s.bars.push_back(bar);
    }
    return s;
}

inline OhlcvSeries load_ohlcv(const std::string& path, std::string symbol = {}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open market file `" + path + "`");
    try {
        return read_ohlcv(in, symbol.empty() ? path : std::move(symbol));
    } catch (const ParseError& e) {
        throw ParseError(e.line, path + ": " + e.detail);
    }
}

/// Range over the mean of consecutive closes; first date missing.
inline IndexSeries daily_volatility(const OhlcvSeries& s) {
    if (s.bars.size() < 2) throw ValidationError("daily volatility needs at least 2 bars");
    IndexSeries out(s.symbol + ":daily_vol");
    out.push(s.bars[0].date, std::nullopt);
    for (std::size_t t = 1; t < s.bars.size(); ++t) {
        const auto& b = s.bars[t];
        out.push(b.date, (b.high - b.low) / (0.5 * (b.close + s.bars[t - 1].close)));
    }
    return out;
}

/// Trailing-window RMS of close-to-close log returns; first `window` dates
/// missing.
inline IndexSeries historical_volatility(const OhlcvSeries& s, std::size_t window = 21) {
    if (window < 2) throw ValidationError("historical volatility window must be >= 2");
    if (s.bars.size() < window + 1)
        throw ValidationError("historical volatility needs at least window + 1 = " +
                              std::to_string(window + 1) + " bars");
    std::vector<double> r2(s.bars.size(), 0.0);
    for (std::size_t t = 1; t < s.bars.size(); ++t) {
        const double r = std::log(s.bars[t].close / s.bars[t - 1].close);
        r2[t] = r * r;
    }
    IndexSeries out(s.symbol + ":hist_vol");
    for (std::size_t t = 0; t < s.bars.size(); ++t) {
        if (t < window) {
            out.push(s.bars[t].date, std::nullopt);
            continue;
        }
        // summed afresh per window; a running sum drifts
        double acc = 0.0;
        for (std::size_t k = t + 1 - window; k <= t; ++k) acc += r2[k];
        out.push(s.bars[t].date, std::sqrt(acc / double(window)));
    }
    return out;
}

inline IndexSeries volume_series(const OhlcvSeries& s) {
    IndexSeries out(s.symbol + ":volume");
    for (const auto& b : s.bars) out.push(b.date, b.volume);
    return out;
}

inline IndexSeries close_series(const OhlcvSeries& s) {
    IndexSeries out(s.symbol + ":close");
    for (const auto& b : s.bars) out.push(b.date, b.close);
    return out;
}

/// Two-column `date,value` series; an empty value is a missing point.
inline IndexSeries read_index_series(std::istream& in, std::string name) {
    IndexSeries s(name);
    csv::Reader reader(in);
    reader.expect_header({"date", "value"});
    while (auto row = reader.next()) {
        const auto line = reader.line();
        if (row->size() != 2) throw ParseError(line, "expected 2 fields");
        auto date = Date::parse((*row)[0]);
        if (!date) throw ParseError(line, "bad date `" + (*row)[0] + "`");
        std::optional<double> value;
        if (!trim((*row)[1]).empty()) {
            value = detail::parse_number((*row)[1]);
            if (!value) throw ParseError(line, "bad value `" + (*row)[1] + "`");
        }
        if (s.size() && !(s.points().back().date < *date))
            throw ParseError(line, "date " + date->str() + " not after " + s.points().back().date.str());
        s.push(*date, value);
    }
    return s;
}

inline IndexSeries load_index_series(const std::string& path, std::string name) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open series file `" + path + "`");
    return read_index_series(in, std::move(name));
}

inline void write_index_series(std::ostream& out, const IndexSeries& s) {
    out << "date,value\n";
    for (const auto& p : s.points())
        out << p.date.str() << ',' << (p.value ? format_double(*p.value) : "") << '\n';
}

}  // namespace nci
