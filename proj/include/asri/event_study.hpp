#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asri/core/date.hpp"
#include "asri/core/error.hpp"
#include "asri/core/io.hpp"
#include "asri/core/linalg.hpp"
#include "asri/core/rng.hpp"
#include "asri/core/stats.hpp"
#include "asri/market_data.hpp"

namespace asri {

enum class CrisisType { endogenous, exogenous, hybrid };

inline std::string to_string(CrisisType t) {
    switch (t) {
        case CrisisType::endogenous: return "endogenous";
        case CrisisType::exogenous: return "exogenous";
        case CrisisType::hybrid: return "hybrid";
    }
    return "hybrid";
}

inline CrisisType parse_crisis_type(std::string_view s) {
    if (s == "endogenous") return CrisisType::endogenous;
    if (s == "exogenous") return CrisisType::exogenous;
    if (s == "hybrid") return CrisisType::hybrid;
    fail(ErrorKind::data, "unknown crisis type '" + std::string(s) + "'");
}

struct CrisisEvent {
    std::string name;
    Date onset{};
    CrisisType type = CrisisType::hybrid;
};

inline constexpr const char* kEventCatalogHeader = "name,onset_date,type";

inline std::vector<CrisisEvent> parse_event_catalog(std::string_view text) {
    auto lines = io::split(text, '\n');
    if (lines.empty() || lines[0] != kEventCatalogHeader)
        fail(ErrorKind::data, std::string("event catalog header must be '") + kEventCatalogHeader + "'");
    std::vector<CrisisEvent> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = io::split(lines[i], ',');
        if (f.size() != 3) fail(ErrorKind::data, "malformed event catalog row " + std::to_string(i));
        out.push_back({std::string(f[0]), parse_date(f[1]), parse_crisis_type(f[2])});
    }
    return out;
}

inline std::string to_event_catalog_csv(const std::vector<CrisisEvent>& ev) {
    std::string s = std::string(kEventCatalogHeader) + "\n";
    for (auto& e : ev) s += e.name + "," + format_date(e.onset) + "," + to_string(e.type) + "\n";
    return s;
}

struct EventStudyConfig {
    int estimation_start = -90;
    int estimation_end = -31;
    int event_start = -30;
    int event_end = 10;
    double sigma_multiplier = 1.5;
    int lead_lookback_cap = 30;
    double alpha = 0.05;
    double threshold = 50.0;
    std::size_t min_estimation_obs = 45;
    std::size_t ljung_box_lags = 10;

    void validate() const {
        require(estimation_start <= estimation_end && event_start <= event_end, ErrorKind::parameter,
                "event-study windows must be ordered");
        require(estimation_end < event_start, ErrorKind::parameter, "estimation window must precede the event window");
        require(alpha > 0 && alpha < 1, ErrorKind::parameter, "alpha must lie in (0, 1)");
        require(lead_lookback_cap >= 0, ErrorKind::parameter, "lead-time cap must be non-negative");
    }
};

namespace detail {
struct WindowPoint {
    int offset;
    double value;
};

inline std::vector<WindowPoint> window(const TimeSeries& ts, Date onset, int lo, int hi) {
    std::vector<WindowPoint> out;
    const Date a = onset + Days{lo}, b = onset + Days{hi};
    auto it = std::lower_bound(ts.points.begin(), ts.points.end(), a,
                               [](const Observation& o, Date d) { return o.date < d; });
    for (; it != ts.points.end() && it->date <= b; ++it) out.push_back({int(days_between(onset, it->date)), it->value});
    return out;
}

inline std::vector<double> values_of(const std::vector<WindowPoint>& w) {
    std::vector<double> v;
    v.reserve(w.size());
    for (auto& p : w) v.push_back(p.value);
    return v;
}
}  // namespace detail

struct Baseline {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
};

inline Baseline estimate_baseline(const TimeSeries& ts, const CrisisEvent& ev, const EventStudyConfig& cfg = {}) {
    cfg.validate();
    auto w = detail::window(ts, ev.onset, cfg.estimation_start, cfg.estimation_end);
    if (w.size() < cfg.min_estimation_obs)
        fail(ErrorKind::insufficient_data, ev.name + ": estimation window has " + std::to_string(w.size()) +
                                               " observations, needs " + std::to_string(cfg.min_estimation_obs));
    auto v = detail::values_of(w);
    return {stats::mean(v), stats::stddev(v), v.size()};
}

struct Ar1Check {
    bool available = false;
    double phi = 0.0;
    double cas = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
};

struct EventStudyResult {
    std::string event;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    std::size_t n_estimation = 0;
    std::size_t n_event = 0;
    double cas = 0.0;
    double se_cas = 0.0;
    std::optional<double> t_stat;
    std::optional<double> p_value;
    double df = 0.0;
    std::optional<int> lead_time_sigma;
    std::optional<int> lead_time_threshold;
    double peak = 0.0;
    Date peak_date{};
    std::optional<stats::LjungBox> ljung_box;
    Ar1Check ar1;

    // t is undefined when the estimation window has no variance.
    [[nodiscard]] double t() const {
        if (!t_stat) fail(ErrorKind::degenerate, event + ": zero estimation-window variance, t statistic undefined");
        return *t_stat;
    }
    [[nodiscard]] double p() const {
        if (!p_value) fail(ErrorKind::degenerate, event + ": zero estimation-window variance, p-value undefined");
        return *p_value;
    }
};

inline EventStudyResult cumulative_abnormal_signal(const TimeSeries& ts, const CrisisEvent& ev, const EventStudyConfig& cfg = {}) {
    const Baseline b = estimate_baseline(ts, ev, cfg);
    auto evw = detail::window(ts, ev.onset, cfg.event_start, cfg.event_end);
    require(!evw.empty(), ErrorKind::insufficient_data, ev.name + ": event window is empty");
    EventStudyResult r;
    r.event = ev.name;
    r.mu_hat = b.mu;
    r.sigma_hat = b.sigma;
    r.n_estimation = b.n;
    r.n_event = evw.size();
    r.df = double(b.n - 1);
    r.peak = -std::numeric_limits<double>::infinity();
    for (auto& p : evw) {
        r.cas += p.value - b.mu;
        if (p.value > r.peak) {
            r.peak = p.value;
            r.peak_date = ev.onset + Days{p.offset};
        }
    }
    r.se_cas = b.sigma * std::sqrt(double(evw.size()));
    if (b.sigma > 0) {
        r.t_stat = r.cas / r.se_cas;
        r.p_value = stats::student_t_two_sided_p(*r.t_stat, r.df);
    }
    return r;
}

inline std::optional<int> lead_time_sigma(const TimeSeries& ts, const CrisisEvent& ev, const Baseline& b,
                                          const EventStudyConfig& cfg = {}) {
    const double bar = b.mu + cfg.sigma_multiplier * b.sigma;
    for (auto& p : detail::window(ts, ev.onset, -cfg.lead_lookback_cap, 0))
        if (p.value > bar) return -p.offset;
    return std::nullopt;
}

// No horizon: search from the start of the sample.
inline std::optional<int> lead_time_threshold(const TimeSeries& ts, const CrisisEvent& ev, double threshold,
                                              std::optional<int> horizon_days = std::nullopt) {
    auto it = ts.points.begin();
    if (horizon_days)
        it = std::lower_bound(ts.points.begin(), ts.points.end(), ev.onset - Days{*horizon_days},
                              [](const Observation& o, Date d) { return o.date < d; });
    for (; it != ts.points.end() && it->date <= ev.onset; ++it)
        if (it->value >= threshold) return int(days_between(it->date, ev.onset));
    return std::nullopt;
}

// One-step AR(1) expectation as an alternative normal model.
inline Ar1Check ar1_robustness(const TimeSeries& ts, const CrisisEvent& ev, const EventStudyConfig& cfg) {
    Ar1Check c;
    auto est = detail::window(ts, ev.onset, cfg.estimation_start, cfg.estimation_end);
    std::vector<double> x, y;
    for (std::size_t i = 1; i < est.size(); ++i)
        if (est[i].offset == est[i - 1].offset + 1) {
            x.push_back(est[i - 1].value);
            y.push_back(est[i].value);
        }
    if (x.size() < 10) return c;
    linalg::Matrix X(x.size(), 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = x[i];
    }
    linalg::OlsFit fit;
    try {
        fit = linalg::ols(X, y);
    } catch (const Error&) {
        return c;
    }
    const double sd = std::sqrt(fit.sigma2);
    if (!(sd > 0)) return c;
    auto evw = detail::window(ts, ev.onset, cfg.event_start - 1, cfg.event_end);
    std::size_t m = 0;
    for (std::size_t i = 1; i < evw.size(); ++i) {
        if (evw[i].offset < cfg.event_start || evw[i].offset != evw[i - 1].offset + 1) continue;
        c.cas += evw[i].value - (fit.coef[0] + fit.coef[1] * evw[i - 1].value);
        ++m;
    }
    if (m == 0) return c;
    c.available = true;
    c.phi = fit.coef[1];
    c.t_stat = c.cas / (sd * std::sqrt(double(m)));
    c.p_value = stats::student_t_two_sided_p(c.t_stat, double(fit.n - 2));
    return c;
}

// Full per-event study: CAS inference, lead times, peak, residual diagnostics.
inline EventStudyResult run_event_study(const TimeSeries& ts, const CrisisEvent& ev, const EventStudyConfig& cfg = {}) {
    EventStudyResult r = cumulative_abnormal_signal(ts, ev, cfg);
    const Baseline b{r.mu_hat, r.sigma_hat, r.n_estimation};
    r.lead_time_sigma = lead_time_sigma(ts, ev, b, cfg);
    r.lead_time_threshold = lead_time_threshold(ts, ev, cfg.threshold, cfg.lead_lookback_cap);
    auto est = detail::values_of(detail::window(ts, ev.onset, cfg.estimation_start, cfg.estimation_end));
    if (r.sigma_hat > 0 && est.size() > cfg.ljung_box_lags + 1) r.ljung_box = stats::ljung_box(est, cfg.ljung_box_lags);
    r.ar1 = ar1_robustness(ts, ev, cfg);
    return r;
}

inline std::vector<bool> bonferroni(const std::vector<double>& p_values, double alpha) {
    require(!p_values.empty(), ErrorKind::parameter, "Bonferroni needs at least one test");
    require(alpha > 0 && alpha < 1, ErrorKind::parameter, "alpha must lie in (0, 1)");
    const double adj = alpha / double(p_values.size());
    std::vector<bool> out;
    for (double p : p_values) out.push_back(p < adj);
    return out;
}

struct DateRange {
    Date first{}, last{};
    [[nodiscard]] bool contains(Date d) const { return d >= first && d <= last; }
};

inline std::vector<DateRange> crisis_neighbourhoods(const std::vector<CrisisEvent>& events, int radius_days = 90) {
    std::vector<DateRange> r;
    for (auto& e : events) r.push_back({e.onset - Days{radius_days}, e.onset + Days{radius_days}});
    return r;
}

struct PlaceboReport {
    std::uint64_t seed = 0;
    std::vector<Date> dates;
    std::vector<double> t_stats;  // NaN where the estimation window had no variance
    std::vector<double> p_values;
    std::size_t eligible = 0;
    double rejection_rate_05 = 0.0;
    double rejection_rate_01 = 0.0;
    double mean_abs_t = 0.0;
    double max_abs_t = 0.0;
};

inline PlaceboReport placebo_study(const TimeSeries& ts, std::size_t n_dates, const std::vector<DateRange>& exclusions,
                                   std::uint64_t seed, const EventStudyConfig& cfg = {}, int edge_days = 90) {
    require(n_dates > 0, ErrorKind::parameter, "placebo study needs at least one date");
    require(!ts.empty(), ErrorKind::insufficient_data, "placebo study on an empty series");
    const Date first = ts.points.front().date, last = ts.points.back().date;
    std::vector<Date> eligible;
    for (auto& p : ts.points) {
        if (days_between(first, p.date) < edge_days || days_between(p.date, last) < edge_days) continue;
        bool excluded = false;
        for (auto& r : exclusions)
            if (r.contains(p.date)) excluded = true;
        if (excluded) continue;
        if (detail::window(ts, p.date, cfg.estimation_start, cfg.estimation_end).size() < cfg.min_estimation_obs) continue;
        eligible.push_back(p.date);
    }
    if (eligible.size() < n_dates)
        fail(ErrorKind::insufficient_data, "only " + std::to_string(eligible.size()) + " eligible placebo dates for " +
                                               std::to_string(n_dates) + " requested");
    Rng rng(seed);
    auto idx = rng.sample_without_replacement(eligible.size(), n_dates);
    std::sort(idx.begin(), idx.end());
    PlaceboReport rep;
    rep.seed = seed;
    rep.eligible = eligible.size();
    std::size_t defined = 0, rej05 = 0, rej01 = 0;
    double sum_abs = 0.0;
    for (auto i : idx) {
        const CrisisEvent ev{"placebo", eligible[i], CrisisType::hybrid};
        auto r = cumulative_abnormal_signal(ts, ev, cfg);
        rep.dates.push_back(eligible[i]);
        if (r.t_stat) {
            rep.t_stats.push_back(*r.t_stat);
            rep.p_values.push_back(*r.p_value);
            ++defined;
            if (*r.p_value < 0.05) ++rej05;
            if (*r.p_value < 0.01) ++rej01;
            sum_abs += std::abs(*r.t_stat);
            rep.max_abs_t = std::max(rep.max_abs_t, std::abs(*r.t_stat));
        } else {
            rep.t_stats.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.p_values.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (defined > 0) {
        rep.rejection_rate_05 = double(rej05) / double(defined);
        rep.rejection_rate_01 = double(rej01) / double(defined);
        rep.mean_abs_t = sum_abs / double(defined);
    }
    return rep;
}

struct BootstrapConfig {
    std::size_t n_resamples = 500;
    std::size_t block = 20;
    double threshold = 50.0;
    std::optional<int> horizon_days = 90;  // whole pre-event span
    std::uint64_t seed = 42;
};

struct BootstrapResult {
    std::string event;
    std::optional<int> lead_point;  // on the original series
    double detection_rate = 0.0;
    std::optional<double> lead_ci_lo, lead_ci_hi, lead_median;
    double mu_ci_lo = 0.0, mu_ci_hi = 0.0;
    double cas_point = 0.0, cas_ci_lo = 0.0, cas_ci_hi = 0.0;
    std::vector<double> resample_lead;  // NaN when not detected
    std::vector<double> resample_mu;
    std::vector<double> resample_cas;
};

// Moving-block bootstrap over the estimation window; later days are kept as observed.
inline BootstrapResult block_bootstrap_detection(const TimeSeries& ts, const CrisisEvent& ev, const BootstrapConfig& bc = {},
                                                 const EventStudyConfig& cfg = {}) {
    require(bc.n_resamples > 0 && bc.block > 0, ErrorKind::parameter, "bootstrap needs positive resamples and block");
    auto est = detail::window(ts, ev.onset, cfg.estimation_start, cfg.estimation_end);
    if (est.size() < cfg.min_estimation_obs)
        fail(ErrorKind::insufficient_data, ev.name + ": estimation window too short for bootstrap");
    if (bc.block > est.size())
        fail(ErrorKind::parameter, "bootstrap block (" + std::to_string(bc.block) + ") exceeds estimation window (" +
                                       std::to_string(est.size()) + ")");
    const auto evw = detail::window(ts, ev.onset, cfg.event_start, cfg.event_end);
    require(!evw.empty(), ErrorKind::insufficient_data, ev.name + ": event window is empty");

    BootstrapResult r;
    r.event = ev.name;
    r.lead_point = lead_time_threshold(ts, ev, bc.threshold, bc.horizon_days);
    {
        const double mu = stats::mean(detail::values_of(est));
        for (auto& p : evw) r.cas_point += p.value - mu;
    }

    // index of the first estimation point inside ts
    auto first_it = std::lower_bound(ts.points.begin(), ts.points.end(), ev.onset + Days{cfg.estimation_start},
                                     [](const Observation& o, Date d) { return o.date < d; });
    const std::size_t base = std::size_t(first_it - ts.points.begin());
    const std::size_t n = est.size(), starts = n - bc.block + 1;

    Rng rng(bc.seed);
    TimeSeries work = ts;
    std::vector<double> res(n);
    std::size_t detected = 0;
    std::vector<double> leads;
    for (std::size_t b = 0; b < bc.n_resamples; ++b) {
        std::size_t k = 0;
        while (k < n) {
            const std::size_t s = std::size_t(rng.below(starts));
            for (std::size_t j = 0; j < bc.block && k < n; ++j) res[k++] = est[s + j].value;
        }
        for (std::size_t i = 0; i < n; ++i) work.points[base + i].value = res[i];
        const double mu = stats::mean(res);
        double cas = 0.0;
        for (auto& p : evw) cas += p.value - mu;
        auto lead = lead_time_threshold(work, ev, bc.threshold, bc.horizon_days);
        r.resample_mu.push_back(mu);
        r.resample_cas.push_back(cas);
        r.resample_lead.push_back(lead ? double(*lead) : std::numeric_limits<double>::quiet_NaN());
        if (lead) {
            ++detected;
            leads.push_back(double(*lead));
        }
    }
    r.detection_rate = double(detected) / double(bc.n_resamples);
    if (!leads.empty()) {
        r.lead_ci_lo = stats::quantile(leads, 0.025);
        r.lead_ci_hi = stats::quantile(leads, 0.975);
        r.lead_median = stats::quantile(leads, 0.5);
    }
    r.mu_ci_lo = stats::quantile(r.resample_mu, 0.025);
    r.mu_ci_hi = stats::quantile(r.resample_mu, 0.975);
    r.cas_ci_lo = stats::quantile(r.resample_cas, 0.025);
    r.cas_ci_hi = stats::quantile(r.resample_cas, 0.975);
    return r;
}

struct DetectionMetrics {
    double threshold = 0.0;
    int pre_window = 30;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall_day = 0.0;
    double specificity = 0.0;
    double f1_day = 0.0;
    std::size_t events_detected = 0, events_total = 0;
    double recall_event = 0.0;
    double f1_event = 0.0;  // day-level precision with crisis-level recall
    std::vector<std::optional<int>> lead_per_event;
};

inline bool in_crisis_window(Date d, const std::vector<CrisisEvent>& events, int pre_window) {
    for (auto& e : events) {
        const long k = days_between(d, e.onset);
        if (k >= 1 && k <= pre_window) return true;
    }
    return false;
}

inline DetectionMetrics detection_metrics(const TimeSeries& ts, const std::vector<CrisisEvent>& events, double threshold,
                                          int pre_window = 30) {
    require(pre_window > 0, ErrorKind::parameter, "pre-crisis window must be positive");
    DetectionMetrics m;
    m.threshold = threshold;
    m.pre_window = pre_window;
    for (auto& p : ts.points) {
        const bool alert = p.value >= threshold;
        const bool crisis = in_crisis_window(p.date, events, pre_window);
        if (alert && crisis) ++m.tp;
        else if (alert) ++m.fp;
        else if (crisis) ++m.fn;
        else ++m.tn;
    }
    for (auto& e : events) {
        std::optional<int> lead;
        for (auto& p : detail::window(ts, e.onset, -pre_window, -1))
            if (p.value >= threshold) {
                lead = -p.offset;
                break;
            }
        if (lead) ++m.events_detected;
        m.lead_per_event.push_back(lead);
    }
    m.events_total = events.size();
    auto ratio = [](std::size_t a, std::size_t b) { return b ? double(a) / double(b) : 0.0; };
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall_day = ratio(m.tp, m.tp + m.fn);
    m.specificity = ratio(m.tn, m.tn + m.fp);
    m.recall_event = ratio(m.events_detected, m.events_total);
    auto f1 = [](double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; };
    m.f1_day = f1(m.precision, m.recall_day);
    m.f1_event = f1(m.precision, m.recall_event);
    return m;
}

// 1 when a crisis onset falls within the next `window` days.
inline std::vector<int> forward_crisis_labels(const std::vector<Date>& dates, const std::vector<CrisisEvent>& events, int window) {
    std::vector<int> y;
    y.reserve(dates.size());
    for (Date d : dates) y.push_back(in_crisis_window(d, events, window) ? 1 : 0);
    return y;
}

struct CurvePoint {
    double threshold;
    double x;
    double y;
};

struct RocPr {
    std::vector<CurvePoint> roc;  // (fpr, tpr)
    std::vector<CurvePoint> pr;   // (recall, precision)
    double auroc = 0.0;
    double auprc = 0.0;
    double youden_threshold = 0.0;
    double youden_j = 0.0;
};

inline RocPr roc_pr_curves(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), ErrorKind::parameter, "scores and labels differ in length");
    std::size_t pos = 0;
    for (int l : labels) pos += l ? 1 : 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) fail(ErrorKind::degenerate, "ROC needs both positive and negative labels");

    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocPr out;
    out.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    bool first_pr = true;
    out.youden_j = -1.0;
    for (std::size_t k = 0; k < idx.size();) {
        const double thr = scores[idx[k]];
        while (k < idx.size() && scores[idx[k]] == thr) {
            if (labels[idx[k]]) ++tp;
            else ++fp;
            ++k;
        }
        const double tpr = double(tp) / double(pos), fpr = double(fp) / double(neg);
        const double prec = double(tp) / double(tp + fp);
        out.roc.push_back({thr, fpr, tpr});
        if (first_pr) {
            out.pr.push_back({std::numeric_limits<double>::infinity(), 0.0, prec});
            first_pr = false;
        }
        out.pr.push_back({thr, tpr, prec});
        if (tpr - fpr > out.youden_j) {
            out.youden_j = tpr - fpr;
            out.youden_threshold = thr;
        }
    }
    for (std::size_t i = 1; i < out.roc.size(); ++i)
        out.auroc += (out.roc[i].x - out.roc[i - 1].x) * 0.5 * (out.roc[i].y + out.roc[i - 1].y);
    for (std::size_t i = 1; i < out.pr.size(); ++i)
        out.auprc += (out.pr[i].x - out.pr[i - 1].x) * 0.5 * (out.pr[i].y + out.pr[i - 1].y);
    return out;
}

}  // namespace asri
