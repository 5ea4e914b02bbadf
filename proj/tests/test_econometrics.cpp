#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "nci/econometrics.hpp"
#include "oracles.hpp"

using namespace nci;

namespace {

AlignedFrame frame_of(const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
    std::vector<Date> dates;
    auto d = Date(2011, 1, 1);
    for (std::size_t i = 0; i < cols[0].second.size(); ++i, d = d.next()) dates.push_back(d);
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    for (auto& [n, v] : cols) {
        names.push_back(n);
        values.push_back(v);
    }
    return AlignedFrame(dates, names, values);
}

using oracle::planted_system;

}  // namespace

// ---------------------------------------------------------------------------

TEST(Pearson, Fixtures) {
    std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4}, neg{-1, -2, -3, -4};
    EXPECT_DOUBLE_EQ(pearson(x, x), 1.0);
    EXPECT_DOUBLE_EQ(pearson(x, neg), -1.0);
    EXPECT_NEAR(pearson(x, y), 0.8, 1e-15);
}

TEST(Pearson, SymmetryAndAffineMaps) {
    std::mt19937_64 rng(1);
    auto x = oracle::white_noise(rng, 100), y = oracle::white_noise(rng, 100);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.5 * x[i];
    const double r = pearson(x, y);
    EXPECT_EQ(r, pearson(y, x));
    std::vector<double> pos, negm;
    for (double v : y) pos.push_back(3.0 * v + 7.0), negm.push_back(-2.0 * v + 1.0);
    EXPECT_NEAR(pearson(x, pos), r, 1e-12);
    EXPECT_NEAR(pearson(x, negm), -r, 1e-12);
}

TEST(Pearson, Errors) {
    std::vector<double> c{2, 2, 2, 2}, x{1, 2, 3, 4}, s{1, 2};
    EXPECT_THROW(pearson(c, x), DegenerateVarianceError);
    EXPECT_THROW(pearson(s, s), ValidationError);
    EXPECT_THROW(pearson(x, s), ValidationError);
}

TEST(Permutation, PerfectCorrelationLongVector) {
    std::mt19937_64 rng(2);
    auto x = oracle::white_noise(rng, 50);
    auto cell = permutation_pvalue(x, x, 999, 17);
    EXPECT_DOUBLE_EQ(cell.p_value, 1.0 / 1000.0);
    EXPECT_DOUBLE_EQ(cell.r, 1.0);
    EXPECT_EQ(cell.n_obs, 50u);
    EXPECT_EQ(cell.n_permutations, 999u);
}

TEST(Permutation, AgreesWithExhaustiveEnumeration) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> x = oracle::white_noise(rng, 5), y = oracle::white_noise(rng, 5);
        if (trial == 0) y = x;
        const double robs = std::abs(pearson(x, y));
        std::array<int, 5> perm{0, 1, 2, 3, 4};
        int extreme = 0, total = 0;
        do {
            std::vector<double> yp;
            for (int i : perm) yp.push_back(y[std::size_t(i)]);
            extreme += std::abs(pearson(x, yp)) >= robs - 1e-12;
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        ASSERT_EQ(total, 120);
        const double exact = double(extreme) / 120.0;
        const std::size_t n_perm = 20000;
        auto cell = permutation_pvalue(x, y, n_perm, 100 + trial);
        const double se = std::sqrt(exact * (1 - exact) / double(n_perm));
        EXPECT_NEAR(cell.p_value, exact, 4 * se + 1.0 / double(n_perm)) << "trial " << trial;
    }
}

TEST(Permutation, DeterministicUnderSeed) {
    std::mt19937_64 rng(4);
    auto x = oracle::white_noise(rng, 30), y = oracle::white_noise(rng, 30);
    EXPECT_EQ(permutation_pvalue(x, y, 499, 9).p_value, permutation_pvalue(x, y, 499, 9).p_value);
}

TEST(Permutation, CalibratedUnderIndependence) {
    std::mt19937_64 rng(5);
    int rej05 = 0, rej01 = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        auto x = oracle::white_noise(rng, 30), y = oracle::white_noise(rng, 30);
        double p = permutation_pvalue(x, y, 999, std::uint64_t(t)).p_value;
        rej05 += p <= 0.05;
        rej01 += p <= 0.01;
    }
    const double r05 = rej05 / double(trials), r01 = rej01 / double(trials);
    EXPECT_GE(r05, 0.03);
    EXPECT_LE(r05, 0.07);
    EXPECT_LE(r01, 0.03);
}

TEST(Permutation, RejectsFewPermutations) {
    std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    EXPECT_THROW(permutation_pvalue(x, y, 99, 1), ValidationError);
}

TEST(Permutation, CorrelationMatrixCells) {
    std::mt19937_64 rng(6);
    auto f = frame_of({{"a", oracle::white_noise(rng, 40)}, {"b", oracle::white_noise(rng, 40)}});
    auto cells = correlation_matrix(f, 199, 1);
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[1].x_name, "a");
    EXPECT_EQ(cells[1].y_name, "b");
    EXPECT_DOUBLE_EQ(cells[0].r, 1.0);
    EXPECT_EQ(cells[1].r, cells[2].r);
}

// ---------------------------------------------------------------------------

TEST(Adf, CriticalValueSurface) {
    EXPECT_NEAR(adf_critical_value(0.05, 100), -2.8906, 5e-4);
    EXPECT_NEAR(adf_critical_value(0.01, 100), -3.4975, 5e-4);
    EXPECT_NEAR(adf_critical_value(0.05, 1000000000), -2.86154, 1e-6);
    EXPECT_THROW(adf_critical_value(0.2, 100), ValidationError);
}

TEST(Adf, StatisticMatchesNormalEquationsOracle) {
    std::mt19937_64 rng(7);
    auto x = oracle::cumsum(oracle::white_noise(rng, 200));
    const std::size_t max_lag = 4;
    auto res = adf_unit_root(x, max_lag);
    // rebuild the chosen regression independently
    std::vector<std::vector<double>> z;
    std::vector<double> y;
    for (std::size_t t = max_lag + 1; t < x.size(); ++t) {
        std::vector<double> row{1.0, x[t - 1]};
        for (std::size_t i = 1; i <= res.lag; ++i) row.push_back(x[t - i] - x[t - i - 1]);
        z.push_back(row);
        y.push_back(x[t] - x[t - 1]);
    }
    auto fit = oracle::normal_equations(z, y);
    const double s2 = fit.ssr / double(z.size() - z[0].size());
    EXPECT_NEAR(res.statistic, fit.beta[1] / std::sqrt(s2 * fit.xtx_inv[1][1]), 1e-8);
    EXPECT_EQ(res.n_obs, z.size());
}

TEST(Adf, RandomWalksRarelyReject) {
    std::mt19937_64 rng(8);
    int kept = 0;
    for (int r = 0; r < 200; ++r) {
        auto x = oracle::cumsum(oracle::white_noise(rng, 500));
        kept += !adf_unit_root(x, default_adf_lag(500)).reject_unit_root;
    }
    EXPECT_GE(kept, 180);
}

TEST(Adf, WhiteNoiseRejects) {
    std::mt19937_64 rng(9);
    int rejected = 0;
    for (int r = 0; r < 200; ++r)
        rejected += adf_unit_root(oracle::white_noise(rng, 500), default_adf_lag(500)).reject_unit_root;
    EXPECT_GE(rejected, 180);
}

TEST(Adf, Errors) {
    std::vector<double> ramp(100), constant(100, 3.0);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = double(i);
    EXPECT_THROW(adf_unit_root(difference(ramp), 2), DegenerateVarianceError);
    EXPECT_THROW(adf_unit_root(constant, 2), DegenerateVarianceError);
    std::mt19937_64 rng(1);
    auto x = oracle::white_noise(rng, 30);
    EXPECT_THROW(adf_unit_root(x, 12), ValidationError);
    EXPECT_THROW(adf_unit_root(std::vector<double>(x.begin(), x.begin() + 19), 0), ValidationError);
}

TEST(IntegrationOrder, MonteCarlo) {
    std::mt19937_64 rng(10);
    std::array<int, 3> hits{0, 0, 0};
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        auto e = oracle::white_noise(rng, 500);
        hits[0] += integration_order(e, 2).d == 0;
        hits[1] += integration_order(oracle::cumsum(e), 2).d == 1;
        auto i2 = integration_order(oracle::cumsum(oracle::cumsum(e)), 2);
        hits[2] += i2.d == 2 && !i2.capped;
    }
    for (int d = 0; d < 3; ++d) EXPECT_GE(hits[std::size_t(d)], 90) << "d=" << d;
}

TEST(IntegrationOrder, CappedFlag) {
    std::mt19937_64 rng(11);
    int capped = 0;
    for (int r = 0; r < 20; ++r) {
        auto x = oracle::cumsum(oracle::cumsum(oracle::cumsum(oracle::white_noise(rng, 400))));
        auto res = integration_order(x, 1);
        EXPECT_EQ(res.d, 1);
        capped += res.capped;
    }
    EXPECT_GE(capped, 16);
    EXPECT_THROW(integration_order(std::vector<double>(50, 1.0), 3), ValidationError);
}

TEST(IntegrationOrder, TopDownOrdering) {
    // white noise rejects at every order, so its order is 0
    std::mt19937_64 rng(12);
    auto e = oracle::white_noise(rng, 300);
    auto res = integration_order(e, 2);
    EXPECT_EQ(res.d, 0);
    EXPECT_FALSE(res.capped);
}

// ---------------------------------------------------------------------------

TEST(VarLag, RecoversLagTwo) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z(0, 1);
    int hits = 0;
    for (int r = 0; r < 100; ++r) {
        std::vector<double> x(1100), y(1100);
        for (std::size_t t = 2; t < x.size(); ++t) {
            x[t] = 0.2 * x[t - 1] - 0.6 * x[t - 2] + 0.3 * y[t - 2] + z(rng);
            y[t] = 0.1 * y[t - 1] - 0.6 * y[t - 2] + 0.3 * x[t - 2] + z(rng);
        }
        x.erase(x.begin(), x.begin() + 100);
        y.erase(y.begin(), y.begin() + 100);
        hits += select_var_lag(x, y, 8, LagCriterion::aic) == 2;
    }
    EXPECT_GE(hits, 80);
}

TEST(VarLag, WhiteNoiseFavoursOne) {
    std::mt19937_64 rng(13);
    std::array<int, 6> counts{};
    for (int r = 0; r < 100; ++r) {
        auto x = oracle::white_noise(rng, 300), y = oracle::white_noise(rng, 300);
        ++counts[select_var_lag(x, y, 5)];
    }
    EXPECT_EQ(std::max_element(counts.begin(), counts.end()) - counts.begin(), 1);
}

TEST(VarLag, CriterionMatchesOracle) {
    std::mt19937_64 rng(14);
    auto [x, y] = planted_system(rng, 200);
    const std::size_t p_max = 4, n = x.size();
    const double t = double(n - p_max);
    for (auto crit : {LagCriterion::aic, LagCriterion::bic}) {
        std::size_t best = 0;
        double best_v = 1e300;
        for (std::size_t p = 1; p <= p_max; ++p) {
            std::vector<std::vector<double>> z;
            std::vector<double> ya, yb;
            for (std::size_t s = p_max; s < n; ++s) {
                std::vector<double> row{1.0};
                for (std::size_t l = 1; l <= p; ++l) row.push_back(x[s - l]), row.push_back(y[s - l]);
                z.push_back(row);
                ya.push_back(x[s]);
                yb.push_back(y[s]);
            }
            auto fa = oracle::normal_equations(z, ya), fb = oracle::normal_equations(z, yb);
            double s12 = 0;
            for (std::size_t r = 0; r < z.size(); ++r) {
                double ea = ya[r], eb = yb[r];
                for (std::size_t i = 0; i < z[r].size(); ++i) ea -= z[r][i] * fa.beta[i], eb -= z[r][i] * fb.beta[i];
                s12 += ea * eb;
            }
            const double det = (fa.ssr / t) * (fb.ssr / t) - (s12 / t) * (s12 / t);
            const double pen = crit == LagCriterion::aic ? 2.0 : std::log(t);
            const double v = std::log(det) + pen * double(4 * p) / t;
            if (v < best_v) best_v = v, best = p;
        }
        EXPECT_EQ(select_var_lag(x, y, p_max, crit), best);
    }
}

TEST(VarLag, EdgeCases) {
    std::mt19937_64 rng(15);
    auto x = oracle::white_noise(rng, 40), y = oracle::white_noise(rng, 40);
    EXPECT_EQ(select_var_lag(x, y, 1), 1u);
    EXPECT_THROW(select_var_lag(x, y, 10), ValidationError);
    EXPECT_THROW(select_var_lag(x, y, 0), ValidationError);
    EXPECT_EQ(parse_lag_criterion("bic"), LagCriterion::bic);
    EXPECT_THROW(parse_lag_criterion("hqc"), ConfigError);
}

TEST(VarModel, Shapes) {
    std::mt19937_64 rng(16);
    auto [x, y] = planted_system(rng, 300);
    auto m = fit_var(x, y, 3, 3, "x", "y");
    EXPECT_EQ(m.coef.size(), 3u);
    EXPECT_EQ(m.n_obs_effective, 297u);
    EXPECT_NEAR(m.coef[0](1, 0), 0.8, 0.2);
    EXPECT_NEAR(m.residual_cov(0, 1), m.residual_cov(1, 0), 1e-15);
    EXPECT_GT(m.residual_cov.determinant(), 0.0);
}

// ---------------------------------------------------------------------------

TEST(TodaYamamoto, WaldMatchesIndependentOracle) {
    std::mt19937_64 rng(17);
    auto [x, y] = planted_system(rng, 300);
    x = oracle::cumsum(x);  // force d >= 1 so augmentation lags exist
    auto res = toda_yamamoto(x, y, "x", "y");
    ASSERT_GE(res.d, 1);
    const std::size_t lags = res.p + std::size_t(res.d), n = x.size();
    std::vector<std::vector<double>> z;
    std::vector<double> target;
    for (std::size_t t = lags; t < n; ++t) {
        std::vector<double> row{1.0};
        for (std::size_t l = 1; l <= lags; ++l) row.push_back(x[t - l]), row.push_back(y[t - l]);
        z.push_back(row);
        target.push_back(y[t]);
    }
    auto fit = oracle::normal_equations(z, target);
    const double s2 = fit.ssr / double(z.size() - z[0].size());
    // Wald on x lags 1..p via Gauss-Jordan on the restricted covariance block
    const std::size_t q = res.p;
    std::vector<std::vector<double>> v(q, std::vector<double>(q + 1));
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < q; ++j) v[i][j] = s2 * fit.xtx_inv[1 + 2 * i][1 + 2 * j];
        v[i][q] = fit.beta[1 + 2 * i];
    }
    for (std::size_t c = 0; c < q; ++c) {
        for (std::size_t r = 0; r < q; ++r)
            if (r != c) {
                double f = v[r][c] / v[c][c];
                for (std::size_t j = c; j <= q; ++j) v[r][j] -= f * v[c][j];
            }
    }
    double wald = 0;
    for (std::size_t i = 0; i < q; ++i) wald += fit.beta[1 + 2 * i] * v[i][q] / v[i][i];
    EXPECT_NEAR(res.x_to_y.wald_stat, wald, 1e-6 * std::max(1.0, wald));
    EXPECT_NEAR(res.x_to_y.p_value, oracle::chi2_survival(wald, int(q)), 1e-9);
    EXPECT_EQ(res.x_to_y.restrictions, res.p);
    EXPECT_EQ(res.x_to_y.d_max, res.d);
    EXPECT_EQ(res.x_to_y.f_df2, z.size() - z[0].size());
    EXPECT_NEAR(res.x_to_y.f_stat, res.x_to_y.wald_stat / double(q), 1e-12);
}

TEST(TodaYamamoto, PowerAndSizeOnPlantedSystem) {
    std::mt19937_64 rng(18);
    int forward = 0, backward = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        auto [x, y] = planted_system(rng, 1000);
        auto res = toda_yamamoto(x, y, "x", "y");
        forward += res.x_to_y.p_value < 0.01;
        backward += res.y_to_x.p_value < 0.05;
        EXPECT_EQ(res.x_to_y.restrictions, res.p);
    }
    EXPECT_GE(forward, 190);
    EXPECT_LE(backward, 20);
}

TEST(TodaYamamoto, IndependentRandomWalksNotSpurious) {
    std::mt19937_64 rng(19);
    int spurious = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        auto x = oracle::cumsum(oracle::white_noise(rng, 500));
        auto y = oracle::cumsum(oracle::white_noise(rng, 500));
        auto res = toda_yamamoto(x, y, "x", "y");
        spurious += res.x_to_y.p_value < 0.05 || res.y_to_x.p_value < 0.05;
    }
    EXPECT_LE(spurious, 2 * runs / 10);  // two directions, each at most 10%
}

TEST(TodaYamamoto, DirectionalRatesOnRandomWalks) {
    std::mt19937_64 rng(20);
    int xy = 0, yx = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        auto x = oracle::cumsum(oracle::white_noise(rng, 500));
        auto y = oracle::cumsum(oracle::white_noise(rng, 500));
        auto res = toda_yamamoto(x, y, "x", "y");
        xy += res.x_to_y.p_value < 0.05;
        yx += res.y_to_x.p_value < 0.05;
    }
    EXPECT_LE(xy, runs / 10);
    EXPECT_LE(yx, runs / 10);
}

TEST(TodaYamamoto, ShiftedCopyIsOverwhelming) {
    std::mt19937_64 rng(21);
    auto e = oracle::white_noise(rng, 301);
    std::vector<double> x(e.begin() + 1, e.end()), y(e.begin(), e.end() - 1);  // y_t = x_{t-1}
    auto res = toda_yamamoto(x, y, "x", "y");
    EXPECT_LT(res.x_to_y.p_value, 0.01);
    EXPECT_GT(res.x_to_y.wald_stat, 1e6);
    EXPECT_EQ(res.x_to_y.significance, Significance::at_01);
}

TEST(TodaYamamoto, WaldInvariantUnderRescaling) {
    std::mt19937_64 rng(22);
    auto [x, y] = planted_system(rng, 400);
    auto base = toda_yamamoto(x, y, "x", "y");
    for (double c : {1e-3, 7.5, 1e4}) {
        std::vector<double> xs, ys;
        for (double v : x) xs.push_back(c * v);
        for (double v : y) ys.push_back(v / c);
        auto res = toda_yamamoto(xs, ys, "x", "y");
        EXPECT_EQ(res.p, base.p);
        EXPECT_NEAR(res.x_to_y.wald_stat, base.x_to_y.wald_stat, 1e-8 * base.x_to_y.wald_stat);
        EXPECT_NEAR(res.y_to_x.wald_stat, base.y_to_x.wald_stat, 1e-8 * std::max(1.0, base.y_to_x.wald_stat));
    }
}

TEST(TodaYamamoto, Errors) {
    std::mt19937_64 rng(23);
    auto x = oracle::white_noise(rng, 100);
    std::vector<double> c(100, 1.0);
    try {
        toda_yamamoto(x, c, "x", "flat");
        FAIL();
    } catch (const CollinearityError& e) {
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
    auto shortx = oracle::white_noise(rng, 29), shorty = oracle::white_noise(rng, 29);
    EXPECT_THROW(toda_yamamoto(shortx, shorty, "x", "y"), ValidationError);
}

TEST(TodaYamamoto, DirectionPattern) {
    TodaYamamotoResult r;
    r.x_to_y.p_value = 0.001;
    r.y_to_x.p_value = 0.03;
    EXPECT_EQ(direction(r, 0.01), Direction::x_to_y);
    EXPECT_EQ(direction(r, 0.05), Direction::bidirectional);
    r.x_to_y.p_value = 0.2;
    EXPECT_EQ(direction(r, 0.05), Direction::y_to_x);
    EXPECT_EQ(direction(r, 0.01), Direction::none);
    EXPECT_STREQ(to_string(significance_of(0.005)), "0.01");
    EXPECT_STREQ(to_string(significance_of(0.02)), "0.05");
    EXPECT_STREQ(to_string(significance_of(0.5)), "none");
}

TEST(GcMatrix, CardinalityAndErrorIsolation) {
    std::mt19937_64 rng(24);
    auto [x, y] = planted_system(rng, 400);
    auto w = oracle::white_noise(rng, 400);
    auto f = frame_of({{"x", x}, {"y", y}, {"w", w}, {"flat", std::vector<double>(400, 2.0)}});
    auto ok = gc_matrix(f, {{"x", "y"}, {"w", "y"}});
    EXPECT_EQ(ok.results.size(), 4u);
    EXPECT_TRUE(ok.errors.empty());
    auto mixed = gc_matrix(f, {{"x", "y"}, {"x", "flat"}, {"w", "x"}});
    EXPECT_EQ(mixed.results.size(), 4u);
    ASSERT_EQ(mixed.errors.size(), 1u);
    EXPECT_EQ(mixed.errors[0].y_name, "flat");
    EXPECT_EQ(mixed.results.size() + 2 * mixed.errors.size(), 6u);
    EXPECT_THROW(gc_matrix(f, {{"x", "nope"}}), ValidationError);
}

TEST(GcMatrix, RecoversPlantedDirection) {
    std::mt19937_64 rng(25);
    int matched = 0;
    for (int r = 0; r < 20; ++r) {
        auto [x, y] = planted_system(rng, 1000);
        auto f = frame_of({{"x", x}, {"y", y}});
        auto b = gc_matrix(f, {{"x", "y"}});
        ASSERT_EQ(b.results.size(), 2u);
        matched += b.results[0].cause == "x" && b.results[0].p_value < 0.01 && b.results[1].p_value >= 0.05;
    }
    EXPECT_GE(matched, 17);
}
