#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "asri/core/error.hpp"

namespace asri::stats {

inline double mean(std::span<const double> x) {
    require(!x.empty(), ErrorKind::insufficient_data, "mean of empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / double(x.size());
}

// Sample variance, n-1 denominator.
inline double variance(std::span<const double> x) {
    require(x.size() >= 2, ErrorKind::insufficient_data, "variance needs at least 2 observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / double(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

// Population variance, n denominator.
inline double variance_pop(std::span<const double> x) {
    require(!x.empty(), ErrorKind::insufficient_data, "variance of empty sample");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / double(x.size());
}

// Linear interpolation between order statistics (R type 7).
inline double quantile(std::vector<double> x, double q) {
    require(!x.empty(), ErrorKind::insufficient_data, "quantile of empty sample");
    require(q >= 0.0 && q <= 1.0, ErrorKind::parameter, "quantile level outside [0,1]");
    std::sort(x.begin(), x.end());
    const double h = (double(x.size()) - 1.0) * q;
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - double(lo)) * (x[hi] - x[lo]);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::parameter, "pearson: length mismatch");
    require(x.size() >= 2, ErrorKind::insufficient_data, "pearson needs at least 2 pairs");
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) fail(ErrorKind::degenerate, "pearson: zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

// 1-based average ranks.
inline std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x), ry = ranks(y);
    return pearson(rx, ry);
}

// --- special functions -----------------------------------------------------

namespace detail {
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}
}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    require(a > 0 && b > 0, ErrorKind::domain, "incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// Regularized lower incomplete gamma P(a, x).
inline double incomplete_gamma_p(double a, double x) {
    require(a > 0, ErrorKind::domain, "incomplete_gamma: a must be positive");
    if (x <= 0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 100000; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double student_t_cdf(double t, double df) {
    require(df > 0, ErrorKind::domain, "t distribution needs positive df");
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0 ? 1.0 - tail : tail;
}

inline double student_t_two_sided_p(double t, double df) {
    require(df > 0, ErrorKind::domain, "t distribution needs positive df");
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

// Upper tail of F(d1, d2).
inline double f_sf(double f, double d1, double d2) {
    require(d1 > 0 && d2 > 0, ErrorKind::domain, "F distribution needs positive df");
    if (f <= 0) return 1.0;
    return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

inline double chi2_sf(double x, double k) {
    if (x <= 0) return 1.0;
    return 1.0 - incomplete_gamma_p(0.5 * k, 0.5 * x);
}

inline double autocorrelation(std::span<const double> x, std::size_t lag) {
    const double m = mean(x);
    double den = 0.0, num = 0.0;
    for (double v : x) den += (v - m) * (v - m);
    if (den <= 0) fail(ErrorKind::degenerate, "autocorrelation of constant series");
    for (std::size_t t = lag; t < x.size(); ++t) num += (x[t] - m) * (x[t - lag] - m);
    return num / den;
}

struct LjungBox {
    std::size_t lags = 0;
    double q = 0.0;
    double p_value = 1.0;
};

inline LjungBox ljung_box(std::span<const double> x, std::size_t lags) {
    require(lags >= 1 && x.size() > lags + 1, ErrorKind::insufficient_data, "ljung_box: series too short");
    const double n = double(x.size());
    double q = 0.0;
    for (std::size_t k = 1; k <= lags; ++k) {
        const double r = autocorrelation(x, k);
        q += r * r / (n - double(k));
    }
    q *= n * (n + 2.0);
    return {lags, q, chi2_sf(q, double(lags))};
}

}  // namespace asri::stats
