#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "nci/alignment.hpp"

using namespace nci;

namespace {

Date day(int offset) {
    auto d = *Date::parse("2011-01-01");
    for (int i = 0; i < offset; ++i) d = d.next();
    return d;
}

IndexSeries on_days(const std::string& name, const std::vector<int>& offsets, double base = 1.0) {
    IndexSeries s(name);
    for (int o : offsets) s.push(day(o), base + o);
    return s;
}

}  // namespace

TEST(Align, IntersectFixture) {
    auto f = align({on_days("A", {1, 2, 3}), on_days("B", {2, 3, 4})}, AlignPolicy::intersect);
    ASSERT_EQ(f.rows(), 2u);
    EXPECT_EQ(f.dates()[0], day(2));
    EXPECT_EQ(f.dates()[1], day(3));
    EXPECT_EQ(f.report().candidates, 4u);
    EXPECT_EQ(f.report().dropped, 2u);
    EXPECT_EQ(f.report().missing_by_series.at("A"), 1u);
    EXPECT_EQ(f.report().missing_by_series.at("B"), 1u);
}

TEST(Align, IdenticalCalendarsKeepEverything) {
    std::vector<int> all{0, 1, 2, 3, 4, 5};
    auto f = align({on_days("A", all), on_days("B", all, 10)}, AlignPolicy::intersect);
    EXPECT_EQ(f.rows(), all.size());
    EXPECT_EQ(f.report().dropped, 0u);
}

TEST(Align, MissingValuesDropRows) {
    auto a = on_days("A", {0, 1, 2});
    IndexSeries b("B");
    b.push(day(0), 1.0);
    b.push(day(1), std::nullopt);
    b.push(day(2), 3.0);
    auto f = align({a, b}, AlignPolicy::intersect);
    EXPECT_EQ(f.rows(), 2u);
    EXPECT_EQ(f.column("B")[1], 3.0);
}

TEST(Align, MarketCalendarNewsVersusWorkingDays) {
    // 640 consecutive days of news, 439 working days of market
    std::vector<int> news, market;
    for (int i = 0; i < 640; ++i) news.push_back(i);
    for (int i = 0; market.size() < 439; ++i)
        if (day(i).is_weekday()) market.push_back(i);
    auto f = align({on_days("market", market), on_days("nci", news)}, AlignPolicy::market_calendar);
    EXPECT_LE(f.rows(), 439u);
    EXPECT_EQ(f.report().candidates, 439u);
    EXPECT_EQ(f.rows() + f.report().dropped, f.report().candidates);
    for (auto& d : f.dates()) EXPECT_TRUE(d.is_weekday());
}

TEST(Align, PropertiesOnRandomCalendars) {
    std::mt19937_64 rng(2);
    std::bernoulli_distribution keep(0.7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<IndexSeries> in;
        std::vector<std::set<Date>> present;
        for (int s = 0; s < 3; ++s) {
            IndexSeries x("s" + std::to_string(s));
            std::set<Date> p;
            for (int i = 0; i < 80; ++i)
                if (keep(rng)) {
                    bool missing = !keep(rng);
                    x.push(day(i), missing ? std::nullopt : std::optional<double>(i * 1.5 + s));
                    if (!missing) p.insert(day(i));
                }
            in.push_back(x);
            present.push_back(p);
        }
        for (auto policy : {AlignPolicy::intersect, AlignPolicy::market_calendar}) {
            AlignedFrame f;
            try {
                f = align(in, policy);
            } catch (const AlignmentError&) {
                continue;
            }
            EXPECT_EQ(f.rows() + f.report().dropped, f.report().candidates);
            for (auto& d : f.dates())
                for (auto& p : present) EXPECT_TRUE(p.count(d));
            auto again = align(f.to_series(), policy);
            EXPECT_EQ(again, f);
        }
    }
}

TEST(Align, EmptyIntersectionNamesBindingSeries) {
    try {
        align({on_days("A", {0, 1}), on_days("B", {1, 2}), on_days("C", {5, 6})}, AlignPolicy::intersect);
        FAIL();
    } catch (const AlignmentError& e) {
        EXPECT_NE(std::string(e.what()).find("`C`"), std::string::npos) << e.what();
    }
}

TEST(Align, NeedsTwoSeries) {
    EXPECT_THROW(align({on_days("A", {1})}, AlignPolicy::intersect), ValidationError);
}

TEST(Align, PolicyParsing) {
    EXPECT_EQ(parse_align_policy("intersect"), AlignPolicy::intersect);
    EXPECT_EQ(parse_align_policy("market-calendar"), AlignPolicy::market_calendar);
    EXPECT_THROW(parse_align_policy("ffill"), ConfigError);
}

TEST(DiffLog, ConstantAndGeometric) {
    std::vector<double> c(10, 7.0), g;
    for (int i = 0; i < 10; ++i) g.push_back(3.0 * std::pow(1.1, i));
    for (double v : diff_log(c)) EXPECT_EQ(v, 0.0);
    auto dg = diff_log(g);
    ASSERT_EQ(dg.size(), 9u);
    for (double v : dg) EXPECT_NEAR(v, std::log(1.1), 1e-14);
}

TEST(DiffLog, MatchesElementwiseOracle) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 1000.0);
    std::vector<double> x(200);
    for (auto& v : x) v = u(rng);
    auto d = diff_log(x);
    for (std::size_t i = 1; i < x.size(); ++i) EXPECT_NEAR(d[i - 1], std::log(x[i] / x[i - 1]), 1e-13);
}

TEST(DiffLog, NonPositiveIsDomainError) {
    std::vector<double> x{1.0, 0.0, 2.0};
    EXPECT_THROW(diff_log(x), DomainError);
}

TEST(DiffLog, FrameDropsFirstRow) {
    auto f = align({on_days("A", {0, 1, 2, 3}), on_days("B", {0, 1, 2, 3}, 5)}, AlignPolicy::intersect);
    auto g = diff_log(f, "A");
    ASSERT_EQ(g.rows(), 3u);
    EXPECT_EQ(g.dates()[0], day(1));
    EXPECT_NEAR(g.column("A")[0], std::log(2.0 / 1.0), 1e-15);
    EXPECT_EQ(g.column("B")[0], 6.0);
}

TEST(WriteFrame, Layout) {
    auto f = align({on_days("A", {0, 1}), on_days("B", {0, 1}, 0.5)}, AlignPolicy::intersect);
    std::ostringstream out;
    write_frame(out, f);
    EXPECT_EQ(out.str(), "date,A,B\n2011-01-01,1,0.5\n2011-01-02,2,1.5\n");
}
