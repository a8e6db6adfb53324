#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/core/error.hpp"
#include "asri/core/linalg.hpp"
#include "asri/core/stats.hpp"
#include "asri/event_study.hpp"
#include "asri/market_data.hpp"

namespace asri::dy {

using linalg::Matrix;
using Json = nlohmann::json;

struct VarModel {
    std::size_t p = 0;
    std::size_t n_vars = 0;
    std::size_t n_obs = 0;      // effective sample T
    std::vector<Matrix> lags;   // A_1..A_p
    std::vector<double> intercept;
    Matrix sigma;               // residual covariance, dof-corrected
    Matrix residuals;           // T x N
    double log_det_sigma_ml = 0.0;
    double aic = 0.0, bic = 0.0, hq = 0.0;
    double spectral_radius = 0.0;
    [[nodiscard]] bool stable() const { return spectral_radius < 1.0; }
};

namespace detail {

// Regress rows start..n-1 on a constant and p lags.
inline VarModel fit_var_from(const Matrix& y, std::size_t p, std::size_t start) {
    const std::size_t n = y.rows(), k = y.cols();
    require(p >= 1, ErrorKind::parameter, "VAR lag order must be at least 1");
    require(start >= p && start < n, ErrorKind::insufficient_data, "VAR sample too short");
    const std::size_t t_eff = n - start, m = 1 + k * p;
    require(t_eff > m, ErrorKind::insufficient_data, "VAR has more regressors than observations");
    Matrix x(t_eff, m);
    for (std::size_t t = 0; t < t_eff; ++t) {
        x(t, 0) = 1.0;
        for (std::size_t l = 1; l <= p; ++l)
            for (std::size_t j = 0; j < k; ++j) x(t, 1 + (l - 1) * k + j) = y(start + t - l, j);
    }
    VarModel v;
    v.p = p;
    v.n_vars = k;
    v.n_obs = t_eff;
    v.lags.assign(p, Matrix(k, k));
    v.intercept.assign(k, 0.0);
    v.residuals = Matrix(t_eff, k);
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> yi(t_eff);
        for (std::size_t t = 0; t < t_eff; ++t) yi[t] = y(start + t, i);
        linalg::OlsFit f;
        try {
            f = linalg::ols(x, yi);
        } catch (const Error&) {
            fail(ErrorKind::degenerate, "VAR regressor matrix is singular");
        }
        v.intercept[i] = f.coef[0];
        for (std::size_t l = 0; l < p; ++l)
            for (std::size_t j = 0; j < k; ++j) v.lags[l](i, j) = f.coef[1 + l * k + j];
        for (std::size_t t = 0; t < t_eff; ++t) v.residuals(t, i) = f.residuals[t];
    }
    Matrix ee = v.residuals.transpose() * v.residuals;
    v.sigma = ee * (1.0 / double(t_eff - m));
    Matrix ml = ee * (1.0 / double(t_eff));
    auto l = linalg::cholesky(ml);
    if (!l) fail(ErrorKind::degenerate, "VAR residual covariance is singular");
    v.log_det_sigma_ml = linalg::log_det_from_cholesky(*l);
    const double pk = double(p * k * k), tt = double(t_eff);
    v.aic = v.log_det_sigma_ml + 2.0 * pk / tt;
    v.bic = v.log_det_sigma_ml + std::log(tt) * pk / tt;
    v.hq = v.log_det_sigma_ml + 2.0 * std::log(std::log(tt)) * pk / tt;

    Matrix comp(k * p, k * p);
    for (std::size_t l2 = 0; l2 < p; ++l2)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) comp(i, l2 * k + j) = v.lags[l2](i, j);
    for (std::size_t i = k; i < k * p; ++i) comp(i, i - k) = 1.0;
    v.spectral_radius = linalg::spectral_radius(comp);
    return v;
}

}  // namespace detail

inline VarModel fit_var(const Matrix& y, std::size_t p) {
    require(y.rows() > y.cols() * p + 10, ErrorKind::insufficient_data, "too few observations for VAR(" + std::to_string(p) + ")");
    return detail::fit_var_from(y, p, p);
}

struct LagSelectionRow {
    std::size_t p = 0;
    double aic = 0.0, bic = 0.0, hq = 0.0;
    double lr_stat = std::numeric_limits<double>::quiet_NaN();  // vs p-1
    double lr_p = std::numeric_limits<double>::quiet_NaN();
};

struct LagSelection {
    std::vector<LagSelectionRow> rows;
    std::size_t chosen_aic = 1, chosen_bic = 1, chosen_hq = 1;
    [[nodiscard]] std::size_t chosen() const { return chosen_aic; }
};

// Every order is fit on the same sample, dropping the first p_max rows.
inline LagSelection select_lag(const Matrix& y, std::size_t p_max = 3) {
    require(p_max >= 1, ErrorKind::parameter, "p_max must be at least 1");
    require(y.rows() > y.cols() * p_max + 10 + p_max, ErrorKind::insufficient_data, "too few observations for lag selection");
    LagSelection out;
    double prev_logdet = 0.0;
    for (std::size_t p = 1; p <= p_max; ++p) {
        const VarModel v = detail::fit_var_from(y, p, p_max);
        LagSelectionRow r{p, v.aic, v.bic, v.hq};
        if (p > 1) {
            r.lr_stat = double(v.n_obs) * (prev_logdet - v.log_det_sigma_ml);
            r.lr_p = stats::chi2_sf(std::max(0.0, r.lr_stat), double(y.cols() * y.cols()));
        }
        prev_logdet = v.log_det_sigma_ml;
        out.rows.push_back(r);
    }
    auto argmin = [&](auto key) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < out.rows.size(); ++i)
            if (key(out.rows[i]) < key(out.rows[best])) best = i;
        return out.rows[best].p;
    };
    out.chosen_aic = argmin([](const LagSelectionRow& r) { return r.aic; });
    out.chosen_bic = argmin([](const LagSelectionRow& r) { return r.bic; });
    out.chosen_hq = argmin([](const LagSelectionRow& r) { return r.hq; });
    return out;
}

namespace detail {
// Sum in ascending value order, so relabelling the variables permutes the
// results exactly instead of to within rounding.
inline double ordered_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

inline Matrix ordered_product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    std::vector<double> terms;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            terms.clear();
            for (std::size_t k = 0; k < a.cols(); ++k) terms.push_back(a(i, k) * b(k, j));
            out(i, j) = ordered_sum(terms);
        }
    return out;
}
}  // namespace detail

// MA coefficients Phi_0..Phi_{H-1}.
inline std::vector<Matrix> ma_coefficients(const std::vector<Matrix>& lags, std::size_t horizon) {
    require(!lags.empty(), ErrorKind::parameter, "VAR has no lag matrices");
    const std::size_t k = lags[0].rows();
    std::vector<Matrix> phi{Matrix::identity(k)};
    std::vector<double> terms;
    for (std::size_t h = 1; h < horizon; ++h) {
        Matrix m(k, k);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c) {
                terms.clear();
                for (std::size_t i = 1; i <= std::min(h, lags.size()); ++i)
                    for (std::size_t q = 0; q < k; ++q) terms.push_back(lags[i - 1](r, q) * phi[h - i](q, c));
                m(r, c) = detail::ordered_sum(terms);
            }
        phi.push_back(std::move(m));
    }
    return phi;
}

struct Fevd {
    std::size_t horizon = 10;
    Matrix theta;  // rows sum to 1
};

inline Fevd generalized_fevd(const std::vector<Matrix>& lags, const Matrix& sigma, std::size_t horizon = 10) {
    require(horizon >= 1, ErrorKind::parameter, "FEVD horizon must be at least 1");
    const std::size_t k = sigma.rows();
    for (std::size_t j = 0; j < k; ++j)
        require(sigma(j, j) > 0.0, ErrorKind::degenerate, "FEVD needs positive residual variances");
    const auto phi = ma_coefficients(lags, horizon);
    Matrix num(k, k);
    std::vector<double> den(k, 0.0);
    for (const Matrix& ph : phi) {
        const Matrix ps = detail::ordered_product(ph, sigma);
        const Matrix psp = detail::ordered_product(ps, ph.transpose());
        for (std::size_t i = 0; i < k; ++i) {
            den[i] += psp(i, i);
            for (std::size_t j = 0; j < k; ++j) num(i, j) += ps(i, j) * ps(i, j) / sigma(j, j);
        }
    }
    Fevd f;
    f.horizon = horizon;
    f.theta = Matrix(k, k);
    std::vector<double> terms;
    for (std::size_t i = 0; i < k; ++i) {
        terms.clear();
        for (std::size_t j = 0; j < k; ++j) {
            f.theta(i, j) = num(i, j) / den[i];
            terms.push_back(f.theta(i, j));
        }
        const double row = detail::ordered_sum(terms);
        for (std::size_t j = 0; j < k; ++j) f.theta(i, j) /= row;
    }
    return f;
}

inline Fevd generalized_fevd(const VarModel& v, std::size_t horizon = 10) { return generalized_fevd(v.lags, v.sigma, horizon); }

inline double total_connectedness(const Matrix& theta) {
    const std::size_t k = theta.rows();
    std::vector<double> diag;
    for (std::size_t i = 0; i < k; ++i) diag.push_back(theta(i, i));
    const double tr = detail::ordered_sum(diag);
    return 100.0 * (double(k) - tr) / double(k);
}

struct RollingResult {
    TimeSeries series;
    std::vector<Date> failed;    // window ends with no estimate
    std::vector<Date> unstable;  // estimated but spectral radius >= 1
};

inline RollingResult rolling_connectedness(const std::vector<Date>& dates, const Matrix& y, std::size_t window = 60,
                                           std::size_t p = 1, std::size_t horizon = 10) {
    require(dates.size() == y.rows(), ErrorKind::parameter, "dates and observations differ in length");
    require(window > y.cols() * p + 10, ErrorKind::parameter, "rolling window too short for the VAR");
    require(y.rows() >= window, ErrorKind::insufficient_data, "series shorter than the rolling window");
    RollingResult out;
    out.series.desc.id = "dy.total_connectedness";
    Matrix w(window, y.cols());
    for (std::size_t end = window - 1; end < y.rows(); ++end) {
        for (std::size_t t = 0; t < window; ++t)
            for (std::size_t j = 0; j < y.cols(); ++j) w(t, j) = y(end + 1 - window + t, j);
        try {
            const VarModel v = fit_var(w, p);
            const double c = total_connectedness(generalized_fevd(v, horizon).theta);
            if (!std::isfinite(c)) throw Error(ErrorKind::numerical, "non-finite connectedness");
            if (!v.stable()) out.unstable.push_back(dates[end]);
            out.series.points.push_back({dates[end], c});
        } catch (const Error&) {
            out.failed.push_back(dates[end]);
        }
    }
    return out;
}

struct DyDetection {
    double threshold = 0.0;  // NaN in expanding mode
    bool expanding = false;
    DetectionMetrics metrics;
};

// Alert when connectedness exceeds mean + 1 sd. Expanding mode uses only data up to each day.
inline DyDetection dy_detection(const TimeSeries& c, const std::vector<CrisisEvent>& events, bool expanding = false,
                                int pre_window = 30, std::size_t min_periods = 30) {
    require(!c.points.empty(), ErrorKind::insufficient_data, "connectedness series is empty");
    DyDetection d;
    d.expanding = expanding;
    const auto v = c.values();
    if (!expanding) {
        d.threshold = stats::mean(v) + (v.size() > 1 ? stats::stddev(v) : 0.0);
        // a constant series never strictly exceeds its own mean
        TimeSeries excess = c;
        for (auto& p : excess.points) p.value = p.value > d.threshold ? 1.0 : 0.0;
        d.metrics = detection_metrics(excess, events, 1.0, pre_window);
        d.metrics.threshold = d.threshold;
        return d;
    }
    d.threshold = std::numeric_limits<double>::quiet_NaN();
    TimeSeries excess = c;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += v[i];
        s2 += v[i] * v[i];
        const double n = double(i + 1);
        bool hit = false;
        if (i + 1 >= min_periods) {
            const double mu = s / n, var = std::max(0.0, (s2 - n * mu * mu) / (n - 1));
            hit = v[i] > mu + std::sqrt(var);
        }
        excess.points[i].value = hit ? 1.0 : 0.0;
    }
    d.metrics = detection_metrics(excess, events, 1.0, pre_window);
    d.metrics.threshold = d.threshold;
    return d;
}

struct WindowSensitivityRow {
    std::size_t window = 0;
    std::size_t n_points = 0;
    double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
    double threshold = 0.0;
    std::size_t detected = 0, events = 0;
    double precision = 0.0;
};

inline std::vector<WindowSensitivityRow> window_sensitivity(const std::vector<Date>& dates, const Matrix& y,
                                                            const std::vector<CrisisEvent>& events,
                                                            const std::vector<std::size_t>& windows = {30, 60, 90, 120},
                                                            std::size_t p = 1, std::size_t horizon = 10) {
    std::vector<WindowSensitivityRow> out;
    for (auto w : windows) {
        const auto r = rolling_connectedness(dates, y, w, p, horizon);
        WindowSensitivityRow row;
        row.window = w;
        row.n_points = r.series.points.size();
        if (!r.series.points.empty()) {
            const auto v = r.series.values();
            row.mean = stats::mean(v);
            row.sd = v.size() > 1 ? stats::stddev(v) : 0.0;
            row.min = *std::min_element(v.begin(), v.end());
            row.max = *std::max_element(v.begin(), v.end());
            const auto det = dy_detection(r.series, events);
            row.threshold = det.threshold;
            row.detected = det.metrics.events_detected;
            row.events = det.metrics.events_total;
            row.precision = det.metrics.precision;
        }
        out.push_back(row);
    }
    return out;
}

inline constexpr const char* kConnectednessCsvHeader = "date,total_connectedness_pct";

inline std::string to_connectedness_csv(const TimeSeries& c) {
    std::string s = std::string(kConnectednessCsvHeader) + "\n";
    for (auto& p : c.points) s += format_date(p.date) + "," + io::fixed(p.value, 6) + "\n";
    return s;
}

inline Json fevd_to_json(const Fevd& f, const std::vector<std::string>& names) {
    Json j;
    j["horizon"] = f.horizon;
    j["variables"] = names;
    Json rows = Json::array();
    for (std::size_t i = 0; i < f.theta.rows(); ++i) rows.push_back(std::vector<double>(f.theta.row(i).begin(), f.theta.row(i).end()));
    j["theta"] = rows;
    j["total_connectedness_pct"] = total_connectedness(f.theta);
    return j;
}

}  // namespace asri::dy
