#pragma once
//
// Correlation with permutation p-values, augmented Dickey-Fuller unit-root
// test, bivariate VAR lag selection and the Toda-Yamamoto Granger-causality
// procedure (VAR in levels with p + d lags, Wald test on the first p lags of
// the candidate cause only).
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "nci/alignment.hpp"
#include "nci/core.hpp"

namespace nci {

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

namespace detail {

struct Centered {
    std::vector<double> values;
    double sum_sq = 0.0;
};

inline Centered center(std::span<const double> x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    Centered c;
    c.values.reserve(x.size());
    for (double v : x) {
        c.values.push_back(v - mean);
        c.sum_sq += (v - mean) * (v - mean);
    }
    return c;
}

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
    if (x.size() < 3) throw ValidationError("correlation needs at least 3 observations");
}

}  // namespace detail

/// Product-moment correlation. Throws DegenerateVarianceError when either
/// input is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    auto cx = detail::center(x), cy = detail::center(y);
    if (cx.sum_sq == 0.0 || cy.sum_sq == 0.0)
        throw DegenerateVarianceError("correlation undefined: zero variance");
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += cx.values[i] * cy.values[i];
    return std::clamp(sxy / std::sqrt(cx.sum_sq * cy.sum_sq), -1.0, 1.0);
}

struct CorrelationCell {
    std::string x_name, y_name;
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n_obs = 0;
    std::size_t n_permutations = 0;
};

/// Two-sided permutation p-value, (1 + #{|r_perm| >= |r_obs|}) / (n_perm + 1),
/// shuffling y only.
inline CorrelationCell permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                          std::size_t n_perm, std::uint64_t seed) {
    detail::check_pair(x, y);
    if (n_perm < 100) throw ValidationError("permutation test needs n_perm >= 100");
    auto cx = detail::center(x), cy = detail::center(y);
    if (cx.sum_sq == 0.0 || cy.sum_sq == 0.0)
        throw DegenerateVarianceError("correlation undefined: zero variance");
    const double denom = std::sqrt(cx.sum_sq * cy.sum_sq);
    auto corr = [&](const std::vector<double>& ys) {
        double s = 0.0;
        for (std::size_t i = 0; i < ys.size(); ++i) s += cx.values[i] * ys[i];
        return s / denom;
    };
    const double observed = std::abs(corr(cy.values));

    auto rng = make_stream(seed);
    std::vector<double> shuffled = cy.values;
    std::size_t extreme = 0;
    for (std::size_t k = 0; k < n_perm; ++k) {
        for (std::size_t i = shuffled.size() - 1; i > 0; --i)
            std::swap(shuffled[i], shuffled[uniform_below(rng, i + 1)]);
        if (std::abs(corr(shuffled)) >= observed - 1e-12) ++extreme;
    }

    CorrelationCell cell;
    cell.r = pearson(x, y);
    cell.p_value = double(1 + extreme) / double(n_perm + 1);
    cell.n_obs = x.size();
    cell.n_permutations = n_perm;
    return cell;
}

/// Every ordered pair of frame columns, diagonal included. Cell (i, j) uses
/// seed + i * ncols + j.
inline std::vector<CorrelationCell> correlation_matrix(const AlignedFrame& frame, std::size_t n_perm,
                                                       std::uint64_t seed) {
    std::vector<CorrelationCell> cells;
    const auto& names = frame.names();
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j) {
            auto cell = permutation_pvalue(frame.column(names[i]), frame.column(names[j]), n_perm,
                                           seed + i * names.size() + j);
            cell.x_name = names[i];
            cell.y_name = names[j];
            cells.push_back(std::move(cell));
        }
    return cells;
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct OlsFit {
    Eigen::MatrixXd beta;       // k x equations
    Eigen::MatrixXd residuals;  // T x equations
    Eigen::MatrixXd xtx_inv;    // (X^T X)^{-1}
    std::size_t n = 0, k = 0;
};

/// OLS by column-pivoted QR. Rank deficiency raises CollinearityError naming
/// the dependent regressors.
inline OlsFit ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  const std::vector<std::string>& column_names) {
    const auto k = x.cols();
    if (x.rows() <= k) throw ValidationError("regression has no residual degrees of freedom");
    // unit-norm columns so the rank threshold is scale free
    Eigen::VectorXd scale = x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < k; ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < k; ++j) {
            const auto c = std::size_t(perm(j));
            names += (names.empty() ? "" : ", ") + (c < column_names.size() ? column_names[c] : std::to_string(c));
        }
        throw CollinearityError("singular regressor matrix; dependent regressors: " + names);
    }
    OlsFit fit;
    fit.n = std::size_t(x.rows());
    fit.k = std::size_t(k);
    fit.beta = scale.cwiseInverse().asDiagonal() * qr.solve(y);
    fit.residuals = y - x * fit.beta;
    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd cov_scaled = qr.colsPermutation() * (rinv * rinv.transpose()) *
                                 qr.colsPermutation().transpose();
    fit.xtx_inv = scale.cwiseInverse().asDiagonal() * cov_scaled * scale.cwiseInverse().asDiagonal();
    return fit;
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller
// ---------------------------------------------------------------------------

/// Constant-only Dickey-Fuller critical values from the MacKinnon response
/// surface cv(T) = b_inf + b1/T + b2/T^2 + b3/T^3.
inline double adf_critical_value(double alpha, std::size_t t_obs) {
    struct Row {
        double alpha, b_inf, b1, b2, b3;
    };
    static constexpr Row table[] = {
        {0.01, -3.43035, -6.5393, -16.786, -79.433},
        {0.05, -2.86154, -2.8903, -4.234, -40.040},
        {0.10, -2.56677, -1.5384, -2.809, 0.0},
    };
    for (const auto& r : table)
        if (std::abs(r.alpha - alpha) < 1e-12) {
            const double t = double(t_obs);
            return r.b_inf + r.b1 / t + r.b2 / (t * t) + r.b3 / (t * t * t);
        }
    throw ValidationError("ADF critical values tabulated only for alpha in {0.01, 0.05, 0.10}");
}

struct AdfResult {
    double statistic = 0.0;
    std::size_t lag = 0;        // augmentation lags chosen by AIC
    std::size_t n_obs = 0;      // effective regression sample
    double critical_value = 0.0;  // 5%
    bool reject_unit_root = false;
};

/// Default augmentation cap, trunc((n - 1)^(1/3)).
inline std::size_t default_adf_lag(std::size_t n) {
    return n < 2 ? 0 : std::size_t(std::cbrt(double(n - 1)));
}

/// ADF regression dx_t = a + g x_{t-1} + sum_{i<=l} phi_i dx_{t-i} with a
/// constant and no trend; l <= max_lag minimizes AIC on the common sample.
inline AdfResult adf_unit_root(std::span<const double> x, std::size_t max_lag) {
    const auto n = x.size();
    if (n < 20) throw ValidationError("ADF needs at least 20 observations");
    const auto t_obs = n - 1 - max_lag;
    if (n < max_lag + 1 || t_obs < max_lag + 2 + 10)
        throw ValidationError("series of length " + std::to_string(n) + " too short for ADF max_lag " +
                              std::to_string(max_lag));
    {
        auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        if (*lo == *hi) throw DegenerateVarianceError("ADF undefined: series has zero variance");
    }
    std::vector<double> dx(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) dx[t] = x[t] - x[t - 1];
    const std::size_t first = max_lag + 1;  // first usable t

    auto design = [&](std::size_t lags) {
        const auto rows = Eigen::Index(t_obs);
        Eigen::MatrixXd z(rows, Eigen::Index(2 + lags));
        Eigen::VectorXd y(rows);
        for (std::size_t r = 0; r < t_obs; ++r) {
            const auto t = first + r;
            y(Eigen::Index(r)) = dx[t];
            z(Eigen::Index(r), 0) = 1.0;
            z(Eigen::Index(r), 1) = x[t - 1];
            for (std::size_t i = 1; i <= lags; ++i) z(Eigen::Index(r), Eigen::Index(1 + i)) = dx[t - i];
        }
        return std::pair{z, y};
    };
    auto names = [](std::size_t lags) {
        std::vector<std::string> v{"const", "level lag 1"};
        for (std::size_t i = 1; i <= lags; ++i) v.push_back("diff lag " + std::to_string(i));
        return v;
    };

    std::size_t best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l <= max_lag; ++l) {
        auto [z, y] = design(l);
        auto fit = ols(z, y, names(l));
        const double ssr = fit.residuals.squaredNorm();
        if (ssr <= 0.0) throw DegenerateVarianceError("ADF regression fits exactly; series is deterministic");
        const double aic = double(t_obs) * std::log(ssr / double(t_obs)) + 2.0 * double(fit.k);
        if (aic < best_aic - 1e-12) {
            best_aic = aic;
            best = l;
        }
    }

    auto [z, y] = design(best);
    auto fit = ols(z, y, names(best));
    const double ssr = fit.residuals.squaredNorm();
    const double sigma2 = ssr / double(fit.n - fit.k);
    const double se = std::sqrt(sigma2 * fit.xtx_inv(1, 1));
    if (!(se > 0.0)) throw DegenerateVarianceError("ADF regression has zero residual variance");

    AdfResult res;
    res.statistic = fit.beta(1, 0) / se;
    res.lag = best;
    res.n_obs = t_obs;
    res.critical_value = adf_critical_value(0.05, t_obs);
    res.reject_unit_root = res.statistic < res.critical_value;
    return res;
}

struct IntegrationOrder {
    int d = 0;
    bool capped = false;  // no difference up to d_cap rejected a unit root
};

inline std::vector<double> difference(std::span<const double> x) {
    std::vector<double> out;
    for (std::size_t t = 1; t < x.size(); ++t) out.push_back(x[t] - x[t - 1]);
    return out;
}

/// Smallest d <= d_cap such that every difference of order d .. d_cap
/// rejects a unit root at 5% (top-down, so a spurious rejection of an
/// undifferenced I(2) series cannot end the search early). Capped when even
/// the d_cap-th difference keeps its unit root.
inline IntegrationOrder integration_order(std::span<const double> x, int d_cap,
                                          std::optional<std::size_t> max_lag = std::nullopt) {
    if (d_cap < 1 || d_cap > 2) throw ValidationError("d_cap must be 1 or 2");
    std::vector<bool> rejects;
    std::vector<double> cur(x.begin(), x.end());
    for (int d = 0; d <= d_cap; ++d) {
        if (d > 0) cur = difference(cur);
        rejects.push_back(adf_unit_root(cur, max_lag.value_or(default_adf_lag(cur.size()))).reject_unit_root);
    }
    if (!rejects[std::size_t(d_cap)]) return {d_cap, true};
    int d = d_cap;
    while (d > 0 && rejects[std::size_t(d - 1)]) --d;
    return {d, false};
}

// ---------------------------------------------------------------------------
// Bivariate VAR
// ---------------------------------------------------------------------------

enum class LagCriterion { aic, bic };

inline LagCriterion parse_lag_criterion(const std::string& s) {
    if (s == "aic") return LagCriterion::aic;
    if (s == "bic") return LagCriterion::bic;
    throw ConfigError("unknown lag criterion `" + s + "` (aic|bic)");
}

struct VarModel {
    std::vector<std::string> names;          // two variables
    std::size_t p = 0;                       // lag order
    Eigen::Vector2d intercept;
    std::vector<Eigen::Matrix2d> coef;       // coef[l](i, j): effect of var j at lag l+1 on var i
    Eigen::Matrix2d residual_cov;            // ML estimate, SSCP / T
    std::size_t n_obs_effective = 0;
    OlsFit fit;                              // shared design, one column per equation
    std::vector<std::string> regressors;
};

/// Fits VAR(p) with intercept by equation-wise OLS on t = start .. n-1.
inline VarModel fit_var(std::span<const double> y1, std::span<const double> y2, std::size_t p,
                        std::size_t start, const std::string& name1 = "y1",
                        const std::string& name2 = "y2") {
    if (p < 1) throw ValidationError("VAR lag order must be >= 1");
    if (start < p) throw ValidationError("VAR sample start precedes available lags");
    const auto n = y1.size();
    if (y2.size() != n) throw ValidationError("VAR variables differ in length");
    if (n <= start) throw ValidationError("VAR sample is empty");
    const auto t_obs = n - start;
    const auto k = 1 + 2 * p;
    const auto rows = Eigen::Index(t_obs);
    Eigen::MatrixXd z(rows, Eigen::Index(k));
    Eigen::MatrixXd y(rows, 2);
    for (std::size_t r = 0; r < t_obs; ++r) {
        const auto t = start + r;
        y(Eigen::Index(r), 0) = y1[t];
        y(Eigen::Index(r), 1) = y2[t];
        z(Eigen::Index(r), 0) = 1.0;
        for (std::size_t l = 1; l <= p; ++l) {
            z(Eigen::Index(r), Eigen::Index(2 * l - 1)) = y1[t - l];
            z(Eigen::Index(r), Eigen::Index(2 * l)) = y2[t - l];
        }
    }
    VarModel m;
    m.names = {name1, name2};
    m.p = p;
    m.regressors.push_back("const");
    for (std::size_t l = 1; l <= p; ++l) {
        m.regressors.push_back(name1 + " lag " + std::to_string(l));
        m.regressors.push_back(name2 + " lag " + std::to_string(l));
    }
    m.fit = ols(z, y, m.regressors);
    m.n_obs_effective = t_obs;
    m.intercept = m.fit.beta.row(0).transpose();
    for (std::size_t l = 1; l <= p; ++l) {
        Eigen::Matrix2d c;
        for (int eq = 0; eq < 2; ++eq) {
            c(eq, 0) = m.fit.beta(Eigen::Index(2 * l - 1), eq);
            c(eq, 1) = m.fit.beta(Eigen::Index(2 * l), eq);
        }
        m.coef.push_back(c);
    }
    m.residual_cov = (m.fit.residuals.transpose() * m.fit.residuals) / double(t_obs);
    return m;
}

/// Smallest-criterion lag in [1, p_max], all candidates fitted on the common
/// sample that drops the first p_max observations.
inline std::size_t select_var_lag(std::span<const double> y1, std::span<const double> y2,
                                  std::size_t p_max, LagCriterion criterion = LagCriterion::aic) {
    if (p_max < 1) throw ValidationError("p_max must be >= 1");
    const auto n = y1.size();
    if (n < p_max + 1 + 2 * p_max + 10)
        throw ValidationError("insufficient observations (" + std::to_string(n) + ") for p_max " +
                              std::to_string(p_max));
    if (p_max == 1) return 1;
    const double t = double(n - p_max);
    std::optional<std::size_t> best;
    double best_value = std::numeric_limits<double>::infinity();
    std::string first_error;
    for (std::size_t p = 1; p <= p_max; ++p) {
        std::optional<VarModel> m;
        try {
            m = fit_var(y1, y2, p, p_max);
        } catch (const CollinearityError& e) {
            // a collinear candidate is ineligible; deeper lags stay collinear
            if (first_error.empty()) first_error = e.what();
            break;
        }
        const double det = m->residual_cov.determinant();
        const double penalty = criterion == LagCriterion::aic ? 2.0 : std::log(t);
        const double value = (det > 0.0 ? std::log(det) : -std::numeric_limits<double>::infinity()) +
                             penalty * double(p * 4) / t;
        if (!best || value < best_value - 1e-12) {
            best_value = value;
            best = p;
        }
    }
    if (!best) throw CollinearityError(first_error);
    return *best;
}

inline std::size_t select_var_lag(const AlignedFrame& frame, const std::pair<std::string, std::string>& vars,
                                  std::size_t p_max, LagCriterion criterion = LagCriterion::aic) {
    return select_var_lag(frame.column(vars.first), frame.column(vars.second), p_max, criterion);
}

// ---------------------------------------------------------------------------
// Toda-Yamamoto
// ---------------------------------------------------------------------------

enum class Significance { none, at_05, at_01 };

inline const char* to_string(Significance s) {
    switch (s) {
        case Significance::at_01: return "0.01";
        case Significance::at_05: return "0.05";
        default: return "none";
    }
}

struct GcResult {
    std::string cause, effect;
    std::size_t p_var = 0;     // selected lag, also the restriction count
    int d_max = 0;             // maximal integration order
    double wald_stat = 0.0;    // chi-square form
    double p_value = 1.0;
    double f_stat = 0.0;       // small-sample form, (p, T - k) degrees of freedom
    double f_p_value = 1.0;
    std::size_t f_df2 = 0;
    std::size_t restrictions = 0;
    Significance significance = Significance::none;
};

struct GcSettings {
    std::size_t p_max = 10;
    int d_cap = 2;
    LagCriterion criterion = LagCriterion::aic;
    std::optional<std::size_t> adf_max_lag;  // default trunc((n-1)^(1/3))
};

inline Significance significance_of(double p_value) {
    if (p_value < 0.01) return Significance::at_01;
    if (p_value < 0.05) return Significance::at_05;
    return Significance::none;
}

/// Wald test that lags 1..p of variable `cause` (0 or 1) are absent from the
/// equation of the other variable in `model`.
inline GcResult wald_exclusion(const VarModel& model, int cause, std::size_t p) {
    const int effect = 1 - cause;
    const auto& fit = model.fit;
    const double ssr = fit.residuals.col(effect).squaredNorm();
    const auto df2 = fit.n - fit.k;
    const double sigma2 = ssr / double(df2);
    std::vector<Eigen::Index> idx;
    for (std::size_t l = 1; l <= p; ++l) idx.push_back(Eigen::Index(2 * l - 1 + cause));
    const auto q = Eigen::Index(idx.size());
    Eigen::VectorXd b(q);
    Eigen::MatrixXd v(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        b(i) = fit.beta(idx[std::size_t(i)], effect);
        for (Eigen::Index j = 0; j < q; ++j) v(i, j) = sigma2 * fit.xtx_inv(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    GcResult g;
    g.cause = model.names[std::size_t(cause)];
    g.effect = model.names[std::size_t(effect)];
    g.p_var = p;
    g.restrictions = p;
    if (sigma2 > 0.0)
        g.wald_stat = std::max(0.0, b.dot(v.ldlt().solve(b)));
    else  // exact fit
        g.wald_stat = b.isZero(0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    namespace bm = boost::math;
    g.f_stat = g.wald_stat / double(p);
    g.f_df2 = df2;
    if (std::isfinite(g.wald_stat)) {
        g.p_value = bm::cdf(bm::complement(bm::chi_squared(double(p)), g.wald_stat));
        g.f_p_value = bm::cdf(bm::complement(bm::fisher_f(double(p), double(df2)), g.f_stat));
    } else {
        g.p_value = g.f_p_value = 0.0;
    }
    g.significance = significance_of(g.p_value);
    return g;
}

struct TodaYamamotoResult {
    GcResult x_to_y, y_to_x;
    std::size_t p = 0;
    int d = 0;
};

inline TodaYamamotoResult toda_yamamoto(std::span<const double> x, std::span<const double> y,
                                        const std::string& x_name, const std::string& y_name,
                                        const GcSettings& settings = {}) {
    if (x.size() != y.size()) throw ValidationError("Granger inputs differ in length");
    if (x.size() < 30) throw ValidationError("Toda-Yamamoto needs at least 30 observations");
    for (auto [col, name] : {std::pair{x, x_name}, std::pair{y, y_name}}) {
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (*lo == *hi)
            throw CollinearityError("`" + name + "` is constant; all of its lags are collinear with the intercept");
    }
    const int d = std::max(integration_order(x, settings.d_cap, settings.adf_max_lag).d,
                           integration_order(y, settings.d_cap, settings.adf_max_lag).d);
    // shrink p_max when the sample cannot carry it
    std::size_t p_max = settings.p_max;
    while (p_max > 1 && x.size() < p_max + 1 + 2 * p_max + 10 + std::size_t(d)) --p_max;
    const auto p = select_var_lag(x, y, p_max, settings.criterion);
    const auto lags = p + std::size_t(d);
    auto model = fit_var(x, y, lags, lags, x_name, y_name);
    TodaYamamotoResult res;
    res.p = p;
    res.d = d;
    res.x_to_y = wald_exclusion(model, 0, p);
    res.y_to_x = wald_exclusion(model, 1, p);
    res.x_to_y.d_max = res.y_to_x.d_max = d;
    return res;
}

inline TodaYamamotoResult toda_yamamoto(const AlignedFrame& frame, const std::string& x_name,
                                        const std::string& y_name, const GcSettings& settings = {}) {
    return toda_yamamoto(frame.column(x_name), frame.column(y_name), x_name, y_name, settings);
}

enum class Direction { none, x_to_y, y_to_x, bidirectional };

/// Direction pattern at significance level `alpha`.
inline Direction direction(const TodaYamamotoResult& r, double alpha) {
    const bool xy = r.x_to_y.p_value < alpha, yx = r.y_to_x.p_value < alpha;
    if (xy && yx) return Direction::bidirectional;
    if (xy) return Direction::x_to_y;
    if (yx) return Direction::y_to_x;
    return Direction::none;
}

struct PairError {
    std::string x_name, y_name, message;
};

struct GcBatch {
    std::vector<GcResult> results;
    std::vector<PairError> errors;
};

/// Runs toda_yamamoto for each pair; a failing pair is recorded and skipped.
inline GcBatch gc_matrix(const AlignedFrame& frame,
                         const std::vector<std::pair<std::string, std::string>>& pairs,
                         const GcSettings& settings = {}) {
    for (const auto& [a, b] : pairs)
        for (const auto& n : {a, b})
            if (!frame.has(n)) throw ValidationError("frame has no column `" + n + "`");
    GcBatch batch;
    for (const auto& [a, b] : pairs) {
        try {
            auto r = toda_yamamoto(frame, a, b, settings);
            batch.results.push_back(std::move(r.x_to_y));
            batch.results.push_back(std::move(r.y_to_x));
        } catch (const Error& e) {
            batch.errors.push_back({a, b, e.what()});
        }
    }
    return batch;
}

}  // namespace nci
