#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asri/core/date.hpp"
#include "asri/core/error.hpp"
#include "asri/core/io.hpp"
#include "asri/core/linalg.hpp"
#include "asri/market_data.hpp"
#include "asri/subindices.hpp"

namespace asri {

// Order: SCR, DLR, CR, OR.
using SubIndexVector = std::array<double, 4>;

class WeightVector {
public:
    WeightVector() : w_{0.30, 0.25, 0.25, 0.20} {}

    // `ablation` admits exactly one zero entry.
    static WeightVector make(const std::array<double, 4>& w, bool ablation = false) {
        double sum = 0.0;
        int zeros = 0;
        for (double x : w) {
            require(std::isfinite(x) && x >= 0.0, ErrorKind::parameter, "weights must be finite and non-negative");
            if (x == 0.0) ++zeros;
            sum += x;
        }
        require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::parameter, "weights must sum to 1");
        require(zeros == 0 || (ablation && zeros == 1), ErrorKind::parameter,
                ablation ? "ablation weights may contain one zero" : "weights must be strictly positive");
        WeightVector v;
        v.w_ = w;
        return v;
    }

    static WeightVector theoretical() { return {}; }
    static WeightVector equal() { return make({0.25, 0.25, 0.25, 0.25}); }

    [[nodiscard]] double operator[](std::size_t i) const { return w_[i]; }
    [[nodiscard]] double operator[](SubIndex i) const { return w_[std::size_t(i)]; }
    [[nodiscard]] const std::array<double, 4>& values() const { return w_; }

private:
    std::array<double, 4> w_;
};

enum class AlertLevel { low, moderate, elevated, high };

inline std::string to_string(AlertLevel a) {
    switch (a) {
        case AlertLevel::low: return "Low";
        case AlertLevel::moderate: return "Moderate";
        case AlertLevel::elevated: return "Elevated";
        case AlertLevel::high: return "High";
    }
    return "Low";
}

inline AlertLevel parse_alert(std::string_view s) {
    if (s == "Low") return AlertLevel::low;
    if (s == "Moderate") return AlertLevel::moderate;
    if (s == "Elevated") return AlertLevel::elevated;
    if (s == "High") return AlertLevel::high;
    fail(ErrorKind::data, "unknown alert level '" + std::string(s) + "'");
}

inline constexpr double kModerateAt = 30.0;
inline constexpr double kElevatedAt = 50.0;
inline constexpr double kHighAt = 70.0;

inline AlertLevel classify_alert(double asri) {
    require(asri >= -1e-9 && asri <= 100.0 + 1e-9, ErrorKind::domain, "ASRI outside [0, 100]");
    if (asri < kModerateAt) return AlertLevel::low;
    if (asri < kElevatedAt) return AlertLevel::moderate;
    if (asri < kHighAt) return AlertLevel::elevated;
    return AlertLevel::high;
}

struct AsriPoint {
    Date date{};
    double asri = 0.0;
    SubIndexVector sub{};
    std::array<double, 4> contributions{};
    AlertLevel alert = AlertLevel::low;
};

inline AsriPoint aggregate_linear(const SubIndexVector& s, const WeightVector& w, Date date = {}) {
    AsriPoint p;
    p.date = date;
    p.sub = s;
    for (std::size_t i = 0; i < 4; ++i) {
        require(s[i] >= -1e-9 && s[i] <= 100.0 + 1e-9, ErrorKind::domain, "sub-index outside [0, 100]");
        p.contributions[i] = w[i] * s[i];
        p.asri += p.contributions[i];
    }
    p.alert = classify_alert(p.asri);
    return p;
}

// Drop one sub-index and rescale the others proportionally.
inline WeightVector ablation_weights(const WeightVector& base, SubIndex excluded) {
    const std::size_t e = std::size_t(excluded);
    const double rest = 1.0 - base[e];
    std::array<double, 4> w{};
    for (std::size_t i = 0; i < 4; ++i) w[i] = (i == e) ? 0.0 : base[i] / rest;
    // absorb rounding so the sum check holds exactly
    double sum = 0.0;
    for (double x : w) sum += x;
    std::size_t big = e == 0 ? 1 : 0;
    for (std::size_t i = 0; i < 4; ++i)
        if (i != e && w[i] > w[big]) big = i;
    w[big] += 1.0 - sum;
    return WeightVector::make(w, true);
}

inline double aggregate_ces(const SubIndexVector& s, const WeightVector& w, double rho) {
    require(std::isfinite(rho), ErrorKind::parameter, "CES exponent must be finite");
    if (rho <= 0.0)
        for (std::size_t i = 0; i < 4; ++i)
            if (w[i] > 0 && s[i] <= 0.0) fail(ErrorKind::domain, "CES with rho <= 0 needs positive sub-indices");
    if (std::abs(rho) < 1e-12) {
        double lg = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            if (w[i] > 0) lg += w[i] * std::log(s[i]);
        return std::exp(lg);
    }
    // factor out the max for stability at large |rho|
    double m = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        if (w[i] > 0) m = std::max(m, s[i]);
    if (m == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        if (w[i] > 0) acc += w[i] * std::pow(s[i] / m, rho);
    return m * std::pow(acc, 1.0 / rho);
}

inline double aggregate_geometric(const SubIndexVector& s, const WeightVector& w) { return aggregate_ces(s, w, 0.0); }

inline double aggregate_max(const SubIndexVector& s) { return *std::max_element(s.begin(), s.end()); }

inline constexpr double kCissLambda = 0.94;
inline constexpr std::size_t kCissInitObs = 30;

// EWMA-correlation composite on equal weights. A component with no variance
// is treated as perfectly co-moving with the others.
inline TimeSeries aggregate_ciss(const std::vector<Date>& dates, const std::vector<SubIndexVector>& history,
                                 double lambda = kCissLambda) {
    require(lambda > 0.0 && lambda < 1.0, ErrorKind::parameter, "EWMA decay must lie in (0, 1)");
    require(dates.size() == history.size(), ErrorKind::parameter, "dates and history differ in length");
    require(history.size() >= 2, ErrorKind::insufficient_data, "CISS needs at least 2 observations");
    const std::size_t n0 = std::min(kCissInitObs, history.size());
    std::array<double, 4> mu{};
    for (std::size_t t = 0; t < n0; ++t)
        for (std::size_t i = 0; i < 4; ++i) mu[i] += history[t][i] / 100.0;
    for (double& m : mu) m /= double(n0);
    linalg::Matrix cov(4, 4);
    for (std::size_t t = 0; t < n0; ++t)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                cov(i, j) += (history[t][i] / 100.0 - mu[i]) * (history[t][j] / 100.0 - mu[j]) / double(n0 - 1);

    TimeSeries out;
    out.desc.id = "asri.ciss";
    for (std::size_t t = 0; t < history.size(); ++t) {
        std::array<double, 4> x{};
        for (std::size_t i = 0; i < 4; ++i) x[i] = history[t][i] / 100.0 - mu[i];
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) cov(i, j) = lambda * cov(i, j) + (1.0 - lambda) * x[i] * x[j];
        std::array<double, 4> z{};
        for (std::size_t i = 0; i < 4; ++i) z[i] = 0.25 * history[t][i] / 100.0;
        double q = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                double r = 1.0;
                if (i != j) {
                    const double d = cov(i, i) * cov(j, j);
                    if (d > 1e-300) r = std::clamp(cov(i, j) / std::sqrt(d), -1.0, 1.0);
                }
                q += z[i] * r * z[j];
            }
        out.points.push_back({dates[t], std::min(100.0, 100.0 * std::sqrt(std::max(0.0, q)))});
    }
    return out;
}

inline std::vector<double> normalize_minmax(std::span<const double> x) {
    require(!x.empty(), ErrorKind::insufficient_data, "min-max scaling of an empty series");
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (!(*hi > *lo)) fail(ErrorKind::degenerate, "min-max scaling of a constant series");
    std::vector<double> out;
    out.reserve(x.size());
    for (double v : x) out.push_back(100.0 * (v - *lo) / (*hi - *lo));
    return out;
}

// --- ASRI series I/O --------------------------------------------------------

inline constexpr const char* kAsriCsvHeader = "date,asri,scr,dlr,cr,or,alert";

inline std::string to_asri_csv(const std::vector<AsriPoint>& pts) {
    std::string s = kAsriCsvHeader;
    s += '\n';
    for (auto& p : pts) {
        s += format_date(p.date);
        s += ',' + io::fixed(p.asri, 6);
        for (double v : p.sub) s += ',' + io::fixed(v, 6);
        s += ',' + to_string(p.alert) + '\n';
    }
    return s;
}

inline std::vector<AsriPoint> parse_asri_csv(std::string_view text, const WeightVector& w = WeightVector::theoretical()) {
    auto lines = io::split(text, '\n');
    if (lines.empty() || lines[0] != kAsriCsvHeader)
        fail(ErrorKind::data, std::string("ASRI CSV header must be '") + kAsriCsvHeader + "'");
    std::vector<AsriPoint> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = io::split(lines[i], ',');
        if (f.size() != 7) fail(ErrorKind::data, "malformed ASRI row " + std::to_string(i));
        SubIndexVector s{io::parse_double(f[2]), io::parse_double(f[3]), io::parse_double(f[4]), io::parse_double(f[5])};
        AsriPoint p = aggregate_linear(s, w, parse_date(f[0]));
        // stored values are rounded to 6 places
        if (std::abs(p.asri - io::parse_double(f[1])) > 1e-5)
            fail(ErrorKind::data, "ASRI row " + std::to_string(i) + " disagrees with its sub-indices under the given weights");
        out.push_back(p);
    }
    return out;
}

inline TimeSeries asri_series(const std::vector<AsriPoint>& pts) {
    TimeSeries ts;
    ts.desc.id = "asri";
    for (auto& p : pts) ts.points.push_back({p.date, p.asri});
    return ts;
}

inline TimeSeries subindex_series(const std::vector<AsriPoint>& pts, SubIndex which) {
    TimeSeries ts;
    ts.desc.id = std::string("asri.") + kSubIndexNames[std::size_t(which)];
    for (auto& p : pts) ts.points.push_back({p.date, p.sub[std::size_t(which)]});
    return ts;
}

// Re-aggregate stored sub-indices under different weights.
inline std::vector<AsriPoint> reweight(const std::vector<AsriPoint>& pts, const WeightVector& w) {
    std::vector<AsriPoint> out;
    out.reserve(pts.size());
    for (auto& p : pts) out.push_back(aggregate_linear(p.sub, w, p.date));
    return out;
}

}  // namespace asri
