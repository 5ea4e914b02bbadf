#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nci/core.hpp"

namespace nci {

struct SeriesPoint {
    Date date;
    std::optional<double> value;  // nullopt = missing

    friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

/// Date-indexed named scalar series; dates strictly increasing, present
/// values finite.
class IndexSeries {
public:
    IndexSeries() = default;
    explicit IndexSeries(std::string name) : name_(std::move(name)) {}
    IndexSeries(std::string name, std::vector<SeriesPoint> points) : name_(std::move(name)) {
        for (auto& p : points) push(p.date, p.value);
    }

    void push(Date d, std::optional<double> v) {
        if (!points_.empty() && !(points_.back().date < d))
            throw ValidationError("series `" + name_ + "`: date " + d.str() +
                                  " does not follow " + points_.back().date.str());
        if (v && !std::isfinite(*v))
            throw ValidationError("series `" + name_ + "`: non-finite value at " + d.str());
        points_.push_back({d, v});
    }

    const std::string& name() const { return name_; }
    void rename(std::string n) { name_ = std::move(n); }
    const std::vector<SeriesPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const SeriesPoint& operator[](std::size_t i) const { return points_[i]; }

    std::size_t present_count() const {
        std::size_t c = 0;
        for (auto& p : points_) c += p.value.has_value();
        return c;
    }

    friend bool operator==(const IndexSeries&, const IndexSeries&) = default;

private:
    std::string name_;
    std::vector<SeriesPoint> points_;
};

}  // namespace nci
