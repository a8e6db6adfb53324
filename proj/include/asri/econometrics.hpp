#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/core/error.hpp"
#include "asri/core/linalg.hpp"
#include "asri/core/stats.hpp"

namespace asri::econ {

using linalg::Matrix;
using linalg::OlsFit;
using Json = nlohmann::json;

namespace detail {
inline void require_nonconstant(std::span<const double> y, const char* who) {
    require(!y.empty(), ErrorKind::insufficient_data, std::string(who) + ": empty series");
    for (double v : y)
        if (v != y[0]) return;
    fail(ErrorKind::degenerate, std::string(who) + ": constant series");
}

// Piecewise log-linear interpolation of p over (statistic, p) anchors sorted by statistic.
inline double interp_log_p(double stat, const std::vector<std::pair<double, double>>& a) {
    if (stat <= a.front().first) {
        const double slope = (std::log(a[1].second) - std::log(a[0].second)) / (a[1].first - a[0].first);
        return std::max(1e-12, std::exp(std::log(a[0].second) + slope * (stat - a[0].first)));
    }
    for (std::size_t i = 1; i < a.size(); ++i)
        if (stat <= a[i].first) {
            const double w = (stat - a[i - 1].first) / (a[i].first - a[i - 1].first);
            return std::exp(std::log(a[i - 1].second) + w * (std::log(a[i].second) - std::log(a[i - 1].second)));
        }
    return a.back().second;
}
}  // namespace detail

// --- unit roots ---------------------------------------------------------------

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int lag = 0;
    std::size_t nobs = 0;
    double cv1 = 0.0, cv5 = 0.0, cv10 = 0.0;
    [[nodiscard]] bool reject(double level = 0.05) const {
        if (level >= 0.10) return statistic < cv10;
        if (level >= 0.05) return statistic < cv5;
        return statistic < cv1;
    }
};

// Finite-sample critical values for the intercept-only Dickey-Fuller regression.
inline std::array<double, 3> adf_critical_values(std::size_t nobs) {
    const double t = double(nobs);
    return {-3.43035 - 6.5393 / t - 16.786 / (t * t) - 79.433 / (t * t * t),
            -2.86154 - 2.8903 / t - 4.234 / (t * t) - 40.040 / (t * t * t),
            -2.56677 - 1.5384 / t - 2.809 / (t * t)};
}

inline double adf_p_value(double stat, std::size_t nobs) {
    const auto cv = adf_critical_values(nobs);
    // lower tail from the finite-sample values, upper tail from asymptotic quantiles
    static const std::vector<std::pair<double, double>> upper{{-0.44, 0.90}, {-0.07, 0.95}, {0.23, 0.975}, {0.60, 0.99}};
    std::vector<std::pair<double, double>> a{{cv[0], 0.01}, {cv[1], 0.05}, {cv[2], 0.10}};
    a.insert(a.end(), upper.begin(), upper.end());
    if (stat >= a.back().first) return std::min(1.0, 0.99 + (stat - 0.60) * 0.005);
    return detail::interp_log_p(stat, a);
}

inline AdfResult adf_test(std::span<const double> y, int max_lag = -1) {
    detail::require_nonconstant(y, "ADF");
    const std::size_t n = y.size();
    if (max_lag < 0) max_lag = int(std::floor(12.0 * std::pow(double(n) / 100.0, 0.25)));
    require(n > std::size_t(max_lag) + 10, ErrorKind::insufficient_data, "ADF: series too short for the lag order");
    std::vector<double> dy(n - 1);
    for (std::size_t t = 1; t < n; ++t) dy[t - 1] = y[t] - y[t - 1];

    auto fit_lag = [&](int p, std::size_t first) {
        // rows: dy index i from `first` to n-2; regress dy[i] on 1, y[i], dy[i-1..i-p]
        const std::size_t rows = dy.size() - first;
        Matrix X(rows, std::size_t(2 + p));
        std::vector<double> z(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t i = first + r;
            X(r, 0) = 1.0;
            X(r, 1) = y[i];
            for (int k = 1; k <= p; ++k) X(r, std::size_t(1 + k)) = dy[i - std::size_t(k)];
            z[r] = dy[i];
        }
        return linalg::ols(X, z);
    };

    int best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= max_lag; ++p) {
        const auto f = fit_lag(p, std::size_t(max_lag));
        if (f.aic < best_aic - 1e-12) {
            best_aic = f.aic;
            best = p;
        }
    }
    const auto f = fit_lag(best, std::size_t(best));
    AdfResult r;
    r.lag = best;
    r.nobs = f.n;
    r.statistic = f.coef[1] / f.se[1];
    const auto cv = adf_critical_values(f.n);
    r.cv1 = cv[0];
    r.cv5 = cv[1];
    r.cv10 = cv[2];
    r.p_value = adf_p_value(r.statistic, f.n);
    return r;
}

struct KpssResult {
    double statistic = 0.0;
    double p_value = 0.0;  // interpolated and clipped to [0.01, 0.10]
    int bandwidth = 0;
    bool stationary_5 = true;
    bool stationary_1 = true;
};

inline constexpr double kKpssCv10 = 0.347, kKpssCv5 = 0.463, kKpssCv25 = 0.574, kKpssCv1 = 0.739;

// automatic: Hobijn-Franses-Ooms data-driven lag; schwert_short: int(4 (n/100)^(1/4)).
enum class KpssBandwidth { automatic, schwert_short };

// Level-stationarity KPSS, Bartlett kernel.

inline KpssResult kpss_test(std::span<const double> y, KpssBandwidth rule = KpssBandwidth::automatic) {
    const std::size_t n = y.size();
    require(n >= 30, ErrorKind::insufficient_data, "KPSS needs at least 30 observations");
    const double m = stats::mean(y);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = y[i] - m;
    const double nn = double(n);

    // bandwidth (Hobijn, Franses and Ooms)
    const std::size_t covlags = std::size_t(std::pow(nn, 2.0 / 9.0));
    double s0 = 0.0, s1 = 0.0;
    for (double v : e) s0 += v * v;
    s0 /= nn;
    for (std::size_t i = 1; i <= covlags; ++i) {
        double prod = 0.0;
        for (std::size_t t = i; t < n; ++t) prod += e[t] * e[t - i];
        prod /= nn / 2.0;
        s0 += prod;
        s1 += double(i) * prod;
    }
    int lags = 0;
    if (s0 != 0.0) {
        const double shat = s1 / s0;
        const double gamma = 1.1447 * std::pow(shat * shat, 1.0 / 3.0);
        lags = int(gamma * std::pow(nn, 1.0 / 3.0));
    }
    if (rule == KpssBandwidth::schwert_short) lags = int(4.0 * std::pow(nn / 100.0, 0.25));
    lags = std::min(lags, int(n) - 1);

    double lr = 0.0;
    for (double v : e) lr += v * v;
    for (int j = 1; j <= lags; ++j) {
        double g = 0.0;
        for (std::size_t t = std::size_t(j); t < n; ++t) g += e[t] * e[t - std::size_t(j)];
        lr += 2.0 * (1.0 - double(j) / double(lags + 1)) * g;
    }
    lr /= nn;
    KpssResult r;
    r.bandwidth = lags;
    if (!(lr > 0)) fail(ErrorKind::degenerate, "KPSS: zero long-run variance");
    double s = 0.0, eta = 0.0;
    for (double v : e) {
        s += v;
        eta += s * s;
    }
    r.statistic = eta / (nn * nn * lr);
    const double cv[4] = {kKpssCv10, kKpssCv5, kKpssCv25, kKpssCv1};
    const double pv[4] = {0.10, 0.05, 0.025, 0.01};
    if (r.statistic <= cv[0]) r.p_value = 0.10;
    else if (r.statistic >= cv[3]) r.p_value = 0.01;
    else
        for (int i = 1; i < 4; ++i)
            if (r.statistic <= cv[i]) {
                const double w = (r.statistic - cv[i - 1]) / (cv[i] - cv[i - 1]);
                r.p_value = pv[i - 1] + w * (pv[i] - pv[i - 1]);
                break;
            }
    r.stationary_5 = r.statistic < kKpssCv5;
    r.stationary_1 = r.statistic < kKpssCv1;
    return r;
}

// --- stability -------------------------------------------------------------------

enum class BreakModel { constant_mean, ar1 };

struct ChowResult {
    double f = 0.0;
    double p_value = 1.0;
    std::size_t df1 = 0, df2 = 0;
    std::size_t break_index = 0;
};

namespace detail {
inline double segment_rss(std::span<const double> y, BreakModel m, std::size_t* k_out) {
    if (m == BreakModel::constant_mean) {
        *k_out = 1;
        const double mu = stats::mean(y);
        double s = 0.0;
        for (double v : y) s += (v - mu) * (v - mu);
        return s;
    }
    *k_out = 2;
    Matrix X(y.size() - 1, 2);
    std::vector<double> z(y.size() - 1);
    for (std::size_t t = 1; t < y.size(); ++t) {
        X(t - 1, 0) = 1.0;
        X(t - 1, 1) = y[t - 1];
        z[t - 1] = y[t];
    }
    return linalg::ols(X, z).rss;
}
}  // namespace detail

inline ChowResult chow_test(std::span<const double> y, std::size_t break_index, BreakModel model = BreakModel::ar1) {
    const std::size_t k = model == BreakModel::ar1 ? 2 : 1;
    const std::size_t extra = model == BreakModel::ar1 ? 1 : 0;
    require(break_index > k + extra && y.size() - break_index > k + extra, ErrorKind::insufficient_data,
            "Chow: each segment needs more observations than parameters");
    std::size_t kk = 0;
    const double pooled = detail::segment_rss(y, model, &kk);
    const double r1 = detail::segment_rss(y.subspan(0, break_index), model, &kk);
    const double r2 = detail::segment_rss(y.subspan(break_index), model, &kk);
    // the AR(1) split loses one more lagged observation at the break
    const std::size_t nsplit = model == BreakModel::ar1 ? y.size() - 2 : y.size();
    ChowResult c;
    c.break_index = break_index;
    c.df1 = k;
    c.df2 = nsplit - 2 * k;
    const double unres = r1 + r2;
    if (!(unres > 0)) fail(ErrorKind::degenerate, "Chow: zero residual variance in both segments");
    c.f = std::max(0.0, ((pooled - unres) / double(k)) / (unres / double(c.df2)));
    c.p_value = stats::f_sf(c.f, double(c.df1), double(c.df2));
    return c;
}

inline constexpr double kCusumA5 = 0.948;     // recursive-residual boundary constant, 5%
inline constexpr double kOlsCusumCv5 = 1.358;  // sup of a Brownian bridge, 5%

struct CusumResult {
    std::vector<double> path;    // recursive-residual CUSUM, aligned with indices k..n-1
    std::vector<double> bound;   // matching 5% boundary
    std::size_t first_index = 0; // index of path[0] in the input
    double max_ratio = 0.0;      // max |W_r| / boundary_r (crossing when > 1)
    std::vector<std::size_t> crossings;  // first index of each excursion beyond the boundary
    double ols_statistic = 0.0;  // sup |partial sums of OLS residuals| / (sigma sqrt n)
    std::size_t ols_argmax = 0;
    [[nodiscard]] bool ols_reject() const { return ols_statistic > kOlsCusumCv5; }
};

// Constant-mean model: recursive residuals w_t = (y_t - mean(y_0..y_{t-1})) * sqrt((t)/(t+1)).
inline CusumResult cusum_test(std::span<const double> y) {
    const std::size_t n = y.size();
    require(n >= 30, ErrorKind::insufficient_data, "CUSUM needs at least 30 observations");
    detail::require_nonconstant(y, "CUSUM");
    const std::size_t k = 1;
    std::vector<double> w;
    double sum = y[0];
    for (std::size_t t = 1; t < n; ++t) {
        const double m = sum / double(t);
        w.push_back((y[t] - m) * std::sqrt(double(t) / double(t + 1)));
        sum += y[t];
    }
    const double sd = stats::stddev(w);
    CusumResult r;
    r.first_index = k;
    const double m = double(n - k);
    double acc = 0.0;
    bool outside = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i] / sd;
        const double b = kCusumA5 * (std::sqrt(m) + 2.0 * double(i + 1) / std::sqrt(m));
        r.path.push_back(acc);
        r.bound.push_back(b);
        const double ratio = std::abs(acc) / b;
        r.max_ratio = std::max(r.max_ratio, ratio);
        if (ratio > 1.0 && !outside) r.crossings.push_back(i + k);
        outside = ratio > 1.0;
    }
    // OLS-residual variant
    const double mu = stats::mean(y);
    double ss = 0.0;
    for (double v : y) ss += (v - mu) * (v - mu);
    const double sig = std::sqrt(ss / double(n - 1));
    double ps = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        ps += y[t] - mu;
        const double v = std::abs(ps) / (sig * std::sqrt(double(n)));
        if (v > r.ols_statistic) {
            r.ols_statistic = v;
            r.ols_argmax = t;
        }
    }
    return r;
}

// --- causality --------------------------------------------------------------------

struct GrangerResult {
    double f = 0.0;
    double p_value = 1.0;
    int lag = 1;
    std::size_t nobs = 0;
    std::vector<double> bic_by_lag;
};

// Does `cause` help predict `effect` beyond effect's own lags?
inline GrangerResult granger_test(std::span<const double> cause, std::span<const double> effect, int max_lag = 5) {
    require(cause.size() == effect.size(), ErrorKind::parameter, "Granger: series not aligned");
    require(max_lag >= 1, ErrorKind::parameter, "Granger: max_lag must be at least 1");
    const std::size_t n = cause.size();
    require(n > std::size_t(4 * max_lag + 10), ErrorKind::insufficient_data, "Granger: series too short");

    auto design = [&](int p, std::size_t first, bool with_cause) {
        const std::size_t rows = n - first;
        Matrix X(rows, std::size_t(1 + p + (with_cause ? p : 0)));
        std::vector<double> z(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t t = first + r;
            X(r, 0) = 1.0;
            for (int k = 1; k <= p; ++k) {
                X(r, std::size_t(k)) = effect[t - std::size_t(k)];
                if (with_cause) X(r, std::size_t(p + k)) = cause[t - std::size_t(k)];
            }
            z[r] = effect[t];
        }
        return std::make_pair(X, z);
    };

    GrangerResult g;
    double best = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= max_lag; ++p) {
        auto [X, z] = design(p, std::size_t(max_lag), true);
        const auto f = linalg::ols(X, z);
        g.bic_by_lag.push_back(f.bic);
        if (f.bic < best - 1e-12) {
            best = f.bic;
            g.lag = p;
        }
    }
    auto [Xu, zu] = design(g.lag, std::size_t(g.lag), true);
    auto [Xr, zr] = design(g.lag, std::size_t(g.lag), false);
    const auto fu = linalg::ols(Xu, zu);
    const auto fr = linalg::ols(Xr, zr);
    g.nobs = fu.n;
    const double df2 = double(fu.n - fu.k);
    if (fu.rss <= 1e-300 * std::max(1.0, fr.rss)) {
        g.f = std::numeric_limits<double>::infinity();
        g.p_value = 0.0;
        return g;
    }
    g.f = std::max(0.0, ((fr.rss - fu.rss) / double(g.lag)) / (fu.rss / df2));
    g.p_value = stats::f_sf(g.f, double(g.lag), df2);
    return g;
}

// --- collinearity and PCA ---------------------------------------------------------------

inline Matrix correlation_matrix(const Matrix& x) {
    const std::size_t k = x.cols();
    Matrix c(k, k);
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < k; ++j) cols.push_back(x.col(j));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) {
                c(i, j) = 1.0;
                continue;
            }
            try {
                c(i, j) = stats::pearson(cols[i], cols[j]);
            } catch (const Error&) {
                c(i, j) = 0.0;
            }
        }
    return c;
}

inline Matrix covariance_matrix(const Matrix& x) {
    const std::size_t n = x.rows(), k = x.cols();
    std::vector<double> mu(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) mu[j] += x(i, j) / double(n);
    Matrix c(k, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) c(a, b) += (x(i, a) - mu[a]) * (x(i, b) - mu[b]) / double(n - 1);
    return c;
}

struct CollinearityReport {
    Matrix correlation;
    std::vector<double> vif;  // +inf when a column is an exact combination of the others
    double condition_number = 0.0;
    std::vector<double> eigenvalues;
    std::vector<double> variance_share;
    Matrix loadings;  // columns are components
};

inline CollinearityReport collinearity_diagnostics(const Matrix& x) {
    require(x.rows() >= 5, ErrorKind::insufficient_data, "collinearity diagnostics need at least 5 rows");
    CollinearityReport r;
    r.correlation = correlation_matrix(x);
    const std::size_t k = x.cols();
    // R^2 of column j on the rest via a pseudo-inverse of the other columns' correlations,
    // so an exact duplicate elsewhere does not make every VIF infinite.
    for (std::size_t j = 0; j < k; ++j) {
        Matrix sub(k - 1, k - 1);
        std::vector<double> rj;
        for (std::size_t a = 0, ia = 0; a < k; ++a) {
            if (a == j) continue;
            rj.push_back(r.correlation(a, j));
            for (std::size_t b = 0, ib = 0; b < k; ++b) {
                if (b == j) continue;
                sub(ia, ib++) = r.correlation(a, b);
            }
            ++ia;
        }
        double r2 = 0.0;
        if (k > 1) {
            const auto e = linalg::jacobi_eigen(sub);
            const double cut = 1e-10 * std::max(1.0, e.values.front());
            for (std::size_t c = 0; c < e.values.size(); ++c) {
                if (e.values[c] <= cut) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < rj.size(); ++i) proj += e.vectors(i, c) * rj[i];
                r2 += proj * proj / e.values[c];
            }
        }
        r.vif.push_back(r2 < 1.0 - 1e-10 ? 1.0 / (1.0 - r2) : std::numeric_limits<double>::infinity());
    }
    const auto eig = linalg::jacobi_eigen(r.correlation);
    r.eigenvalues = eig.values;
    r.loadings = eig.vectors;
    double tot = 0.0;
    for (double v : eig.values) tot += v;
    for (double v : eig.values) r.variance_share.push_back(v / tot);
    const double lmin = eig.values.back(), lmax = eig.values.front();
    r.condition_number = lmin > 1e-12 * lmax ? lmax / lmin : std::numeric_limits<double>::infinity();
    return r;
}

// --- weight derivation -------------------------------------------------------------------

struct WeightDerivation {
    std::string method;
    std::array<double, 4> weights{};
    Json diagnostics = Json::object();
    std::vector<std::string> flags;
};

namespace detail {
inline std::array<double, 4> normalize_weights(const std::vector<double>& v, std::vector<std::string>& flags) {
    std::array<double, 4> w{};
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        w[i] = std::max(0.0, v[i]);
        s += w[i];
    }
    if (!(s > 0)) {
        flags.push_back("uniform_fallback");
        return {0.25, 0.25, 0.25, 0.25};
    }
    for (double& x : w) x /= s;
    return w;
}

inline void require_four(const Matrix& x) {
    require(x.cols() == 4, ErrorKind::parameter, "weight derivation expects 4 sub-index columns");
    require(x.rows() >= 2, ErrorKind::insufficient_data, "weight derivation needs at least 2 rows");
}
}  // namespace detail

enum class PcaBasis { correlation, covariance };

inline WeightDerivation derive_weights_pca(const Matrix& x, PcaBasis basis = PcaBasis::correlation) {
    detail::require_four(x);
    const Matrix m = basis == PcaBasis::correlation ? correlation_matrix(x) : covariance_matrix(x);
    const auto eig = linalg::jacobi_eigen(m);
    WeightDerivation d;
    d.method = basis == PcaBasis::correlation ? "pca" : "pca_covariance";
    std::vector<double> load(4);
    for (std::size_t i = 0; i < 4; ++i) load[i] = std::abs(eig.vectors(i, 0));
    d.weights = detail::normalize_weights(load, d.flags);
    double tot = 0.0;
    for (double v : eig.values) tot += v;
    d.diagnostics["basis"] = basis == PcaBasis::correlation ? "correlation" : "covariance";
    d.diagnostics["pc1_variance_share"] = tot > 0 ? eig.values[0] / tot : 0.0;
    d.diagnostics["eigenvalues"] = eig.values;
    return d;
}

struct ElasticNetFit {
    std::vector<double> coef;
    double intercept = 0.0;
    std::vector<double> objective;  // after each sweep
    int sweeps = 0;
    bool converged = false;
};

// (1/2n)|y - b0 - Xb|^2 + alpha*l1*|b|_1 + alpha*(1-l1)/2*|b|^2, by cyclic coordinate descent.
inline ElasticNetFit elastic_net(const Matrix& x, std::span<const double> y, double alpha, double l1_ratio,
                                 double tol = 1e-13, int max_sweeps = 200000) {
    require(alpha >= 0 && l1_ratio >= 0 && l1_ratio <= 1, ErrorKind::parameter, "elastic net: bad penalty");
    require(x.rows() == y.size() && x.rows() >= 2, ErrorKind::parameter, "elastic net: shape mismatch");
    const std::size_t n = x.rows(), k = x.cols();
    const double nn = double(n);
    std::vector<double> mu(k, 0.0);
    double ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ybar += y[i] / nn;
        for (std::size_t j = 0; j < k; ++j) mu[j] += x(i, j) / nn;
    }
    Matrix xc(n, k);
    std::vector<double> z(k, 0.0), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = y[i] - ybar;
        for (std::size_t j = 0; j < k; ++j) {
            xc(i, j) = x(i, j) - mu[j];
            z[j] += xc(i, j) * xc(i, j) / nn;
        }
    }
    const double l1 = alpha * l1_ratio, l2 = alpha * (1.0 - l1_ratio);
    ElasticNetFit f;
    f.coef.assign(k, 0.0);
    // Evaluated from the coefficients in extended precision; the running residual
    // drifts by a few ulps, enough to make a converged trace look non-monotone.
    auto objective = [&] {
        long double s = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            long double e = (long double)y[i] - (long double)ybar;
            for (std::size_t j = 0; j < k; ++j) e -= (long double)xc(i, j) * f.coef[j];
            s += e * e;
        }
        long double pen1 = 0.0L, pen2 = 0.0L;
        for (double b : f.coef) {
            pen1 += std::abs((long double)b);
            pen2 += (long double)b * b;
        }
        return double(s / (2.0L * nn) + (long double)l1 * pen1 + 0.5L * (long double)l2 * pen2);
    };
    double yscale = 0.0;
    for (double v : r) yscale = std::max(yscale, std::abs(v));
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_step = 0.0, max_coef = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (z[j] <= 0.0) continue;
            const double old = f.coef[j];
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += xc(i, j) * r[i];
            rho = rho / nn + z[j] * old;
            double nb = 0.0;
            if (rho > l1) nb = (rho - l1) / (z[j] + l2);
            else if (rho < -l1) nb = (rho + l1) / (z[j] + l2);
            const double step = nb - old;
            if (step != 0.0) {
                for (std::size_t i = 0; i < n; ++i) r[i] -= xc(i, j) * step;
                f.coef[j] = nb;
            }
            max_step = std::max(max_step, std::abs(step) * std::sqrt(z[j]));
            max_coef = std::max(max_coef, std::abs(nb) * std::sqrt(z[j]));
        }
        f.objective.push_back(objective());
        f.sweeps = sweep + 1;
        if (max_step <= tol * std::max({max_coef, yscale, 1e-300})) {
            f.converged = true;
            break;
        }
    }
    f.intercept = ybar;
    for (std::size_t j = 0; j < k; ++j) f.intercept -= f.coef[j] * mu[j];
    return f;
}

struct ElasticNetCv {
    std::vector<double> alpha_grid{0.1, 0.5, 1.0};
    std::vector<double> l1_grid{0.1, 0.5, 0.9};
    std::size_t folds = 5;
};

// Contiguous folds in time order; the last absorbs the remainder.
inline std::vector<std::pair<std::size_t, std::size_t>> blocked_folds(std::size_t n, std::size_t k) {
    require(k >= 2 && n >= k, ErrorKind::parameter, "blocked folds need 2 <= k <= n");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t len = n / k;
    for (std::size_t i = 0; i < k; ++i) out.push_back({i * len, i + 1 == k ? n : (i + 1) * len});
    return out;
}

inline WeightDerivation derive_weights_elastic_net(const Matrix& x, std::span<const double> target,
                                                   const ElasticNetCv& cv = {}) {
    detail::require_four(x);
    require(target.size() == x.rows(), ErrorKind::parameter, "elastic net: target length differs from rows");
    const auto folds = blocked_folds(x.rows(), cv.folds);
    double best_mse = std::numeric_limits<double>::infinity();
    double best_a = cv.alpha_grid.front(), best_l = cv.l1_grid.front();
    Json grid = Json::array();
    for (double a : cv.alpha_grid)
        for (double l : cv.l1_grid) {
            double mse = 0.0;
            for (auto [lo, hi] : folds) {
                const std::size_t ntr = x.rows() - (hi - lo);
                Matrix xt(ntr, 4);
                std::vector<double> yt(ntr);
                std::size_t r = 0;
                for (std::size_t i = 0; i < x.rows(); ++i) {
                    if (i >= lo && i < hi) continue;
                    for (std::size_t j = 0; j < 4; ++j) xt(r, j) = x(i, j);
                    yt[r++] = target[i];
                }
                const auto f = elastic_net(xt, yt, a, l, 1e-10, 20000);
                double s = 0.0;
                for (std::size_t i = lo; i < hi; ++i) {
                    double pred = f.intercept;
                    for (std::size_t j = 0; j < 4; ++j) pred += f.coef[j] * x(i, j);
                    s += (target[i] - pred) * (target[i] - pred);
                }
                mse += s / double(hi - lo) / double(folds.size());
            }
            grid.push_back({{"alpha", a}, {"l1_ratio", l}, {"cv_mse", mse}});
            if (mse < best_mse - 1e-12) {
                best_mse = mse;
                best_a = a;
                best_l = l;
            }
        }
    const auto f = elastic_net(x, target, best_a, best_l, 1e-10, 20000);
    WeightDerivation d;
    d.method = "elastic_net";
    d.weights = detail::normalize_weights(f.coef, d.flags);
    d.diagnostics["alpha"] = best_a;
    d.diagnostics["l1_ratio"] = best_l;
    d.diagnostics["cv_mse"] = best_mse;
    d.diagnostics["coefficients"] = f.coef;
    d.diagnostics["grid"] = grid;
    return d;
}

inline WeightDerivation derive_weights_critic(const Matrix& x) {
    detail::require_four(x);
    WeightDerivation d;
    d.method = "critic";
    std::vector<std::vector<double>> cols(4);
    std::vector<double> sd(4, 0.0);
    std::vector<bool> flat(4, false);
    for (std::size_t j = 0; j < 4; ++j) {
        auto c = x.col(j);
        auto [lo, hi] = std::minmax_element(c.begin(), c.end());
        const double a = *lo, b = *hi;
        if (!(b > a)) {
            flat[j] = true;
            d.flags.push_back(std::string("zero_variance_column_") + std::to_string(j));
        } else {
            for (double& v : c) v = (v - a) / (b - a);
            sd[j] = stats::stddev(c);
        }
        cols[j] = std::move(c);
    }
    std::vector<double> info(4, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        if (flat[j]) continue;
        double conflict = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            const double r = (k == j) ? 1.0 : (flat[k] ? 0.0 : stats::pearson(cols[j], cols[k]));
            conflict += 1.0 - r;
        }
        info[j] = sd[j] * conflict;
    }
    d.weights = detail::normalize_weights(info, d.flags);
    d.diagnostics["information"] = info;
    return d;
}

inline WeightDerivation derive_weights_entropy(const Matrix& x) {
    detail::require_four(x);
    const std::size_t n = x.rows();
    WeightDerivation d;
    d.method = "entropy";
    std::vector<double> div(4, 0.0), ent(4, 1.0);
    for (std::size_t j = 0; j < 4; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            require(x(i, j) >= 0, ErrorKind::domain, "entropy weights need non-negative columns");
            s += x(i, j);
        }
        if (!(s > 0)) {
            d.flags.push_back(std::string("degenerate_column_") + std::to_string(j));
            continue;
        }
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = x(i, j) / s;
            if (p > 0) e -= p * std::log(p);
        }
        e /= std::log(double(n));
        ent[j] = e;
        div[j] = std::max(0.0, 1.0 - e);
    }
    d.weights = detail::normalize_weights(div, d.flags);
    d.diagnostics["entropy"] = ent;
    return d;
}

// Rank agreement with a reference weight vector; NaN when either side is constant.
inline double weight_rank_agreement(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    try {
        return stats::spearman(std::span<const double>(a.data(), 4), std::span<const double>(b.data(), 4));
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace asri::econ
