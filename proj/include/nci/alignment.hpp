#pragma once
//
// Joins series on different calendars (daily news, working-day markets)
// into one frame without interpolation: rows with any missing value drop.
//

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nci/core.hpp"
#include "nci/csv.hpp"
#include "nci/series.hpp"

namespace nci {

enum class AlignPolicy { intersect, market_calendar };

inline AlignPolicy parse_align_policy(const std::string& s) {
    if (s == "intersect") return AlignPolicy::intersect;
    if (s == "market-calendar") return AlignPolicy::market_calendar;
    throw ConfigError("unknown alignment policy `" + s + "` (intersect|market-calendar)");
}

struct AlignmentReport {
    std::size_t candidates = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::map<std::string, std::size_t> missing_by_series;  // candidate dates each series lacked
};

class AlignedFrame {
public:
    AlignedFrame() = default;

    AlignedFrame(std::vector<Date> dates, std::vector<std::string> names,
                 std::vector<std::vector<double>> columns)
        : dates_(std::move(dates)), names_(std::move(names)), columns_(std::move(columns)) {
        if (names_.size() != columns_.size()) throw ValidationError("frame: names/columns mismatch");
        for (std::size_t i = 1; i < dates_.size(); ++i)
            if (!(dates_[i - 1] < dates_[i])) throw ValidationError("frame: dates not strictly increasing");
        std::set<std::string> seen;
        for (std::size_t c = 0; c < names_.size(); ++c) {
            if (!seen.insert(names_[c]).second) throw ValidationError("frame: duplicate column `" + names_[c] + "`");
            if (columns_[c].size() != dates_.size())
                throw ValidationError("frame: column `" + names_[c] + "` length mismatch");
            for (double v : columns_[c])
                if (!std::isfinite(v)) throw ValidationError("frame: non-finite value in `" + names_[c] + "`");
        }
    }

    std::size_t rows() const { return dates_.size(); }
    const std::vector<Date>& dates() const { return dates_; }
    const std::vector<std::string>& names() const { return names_; }

    bool has(const std::string& name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    std::span<const double> column(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw ValidationError("frame has no column `" + name + "`");
        return columns_[std::size_t(it - names_.begin())];
    }

    std::vector<IndexSeries> to_series() const {
        std::vector<IndexSeries> out;
        for (std::size_t c = 0; c < names_.size(); ++c) {
            IndexSeries s(names_[c]);
            for (std::size_t i = 0; i < dates_.size(); ++i) s.push(dates_[i], columns_[c][i]);
            out.push_back(std::move(s));
        }
        return out;
    }

    const AlignmentReport& report() const { return report_; }
    void set_report(AlignmentReport r) { report_ = std::move(r); }

    friend bool operator==(const AlignedFrame& a, const AlignedFrame& b) {
        return a.dates_ == b.dates_ && a.names_ == b.names_ && a.columns_ == b.columns_;
    }

private:
    std::vector<Date> dates_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    AlignmentReport report_;
};

/// `intersect` keeps dates on which every series has a value; candidates are
/// the union of all dates. `market-calendar` restricts candidates to the
/// first series' dates. Rows with any missing value are dropped.
inline AlignedFrame align(const std::vector<IndexSeries>& series, AlignPolicy policy) {
    if (series.size() < 2) throw ValidationError("alignment needs at least 2 series");

    std::vector<std::map<Date, double>> present(series.size());
    for (std::size_t s = 0; s < series.size(); ++s)
        for (const auto& p : series[s].points())
            if (p.value) present[s].emplace(p.date, *p.value);

    std::set<Date> candidates;
    if (policy == AlignPolicy::market_calendar) {
        for (const auto& p : series[0].points()) candidates.insert(p.date);
    } else {
        for (const auto& s : series)
            for (const auto& p : s.points()) candidates.insert(p.date);
    }

    AlignmentReport report;
    report.candidates = candidates.size();
    std::vector<Date> kept;
    for (const auto& d : candidates) {
        bool ok = true;
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (!present[s].count(d)) {
                ok = false;
                ++report.missing_by_series[series[s].name()];
            }
        }
        if (ok) kept.push_back(d);
    }
    report.kept = kept.size();
    report.dropped = report.candidates - report.kept;

    if (kept.empty()) {
        // first series whose values empty the running intersection
        std::set<Date> running;
        for (const auto& [d, v] : present[0]) running.insert(d);
        if (running.empty())
            throw AlignmentError("alignment empty: `" + series[0].name() + "` has no values");
        for (std::size_t s = 1; s < series.size(); ++s) {
            std::set<Date> next;
            for (const auto& d : running)
                if (present[s].count(d)) next.insert(d);
            if (next.empty())
                throw AlignmentError("alignment empty: `" + series[s].name() +
                                     "` shares no dated values with `" + series[0].name() + "`" +
                                     (s > 1 ? " and the " + std::to_string(s - 1) + " series before it" : ""));
            running = std::move(next);
        }
        throw AlignmentError("alignment empty");
    }

    std::vector<std::string> names;
    std::vector<std::vector<double>> cols(series.size());
    for (std::size_t s = 0; s < series.size(); ++s) {
        names.push_back(series[s].name());
        cols[s].reserve(kept.size());
        for (const auto& d : kept) cols[s].push_back(present[s].at(d));
    }
    AlignedFrame frame(std::move(kept), std::move(names), std::move(cols));
    frame.set_report(std::move(report));
    return frame;
}

/// First differences of natural logs; one element shorter than the input.
inline std::vector<double> diff_log(std::span<const double> column) {
    for (double v : column)
        if (!(v > 0)) throw DomainError("diff_log needs strictly positive values");
    std::vector<double> out;
    if (column.size() < 2) return out;
    out.reserve(column.size() - 1);
    for (std::size_t i = 1; i < column.size(); ++i) out.push_back(std::log(column[i]) - std::log(column[i - 1]));
    return out;
}

/// Frame with `name` replaced by its log differences and the first row
/// dropped from every column.
inline AlignedFrame diff_log(const AlignedFrame& frame, const std::string& name) {
    if (frame.rows() < 2) throw ValidationError("diff_log needs at least 2 rows");
    auto transformed = diff_log(frame.column(name));
    std::vector<Date> dates(frame.dates().begin() + 1, frame.dates().end());
    std::vector<std::vector<double>> cols;
    for (const auto& n : frame.names()) {
        if (n == name) {
            cols.push_back(transformed);
        } else {
            auto c = frame.column(n);
            cols.emplace_back(c.begin() + 1, c.end());
        }
    }
    return AlignedFrame(std::move(dates), frame.names(), std::move(cols));
}

inline void write_frame(std::ostream& out, const AlignedFrame& frame) {
    std::vector<std::string> header{"date"};
    header.insert(header.end(), frame.names().begin(), frame.names().end());
    csv::write_row(out, header);
    std::vector<std::span<const double>> cols;
    for (const auto& n : frame.names()) cols.push_back(frame.column(n));
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        std::vector<std::string> row{frame.dates()[i].str()};
        for (auto c : cols) row.push_back(format_double(c[i]));
        csv::write_row(out, row);
    }
}

}  // namespace nci
