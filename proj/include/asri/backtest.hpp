#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asri/aggregation.hpp"
#include "asri/core/date.hpp"
#include "asri/core/error.hpp"
#include "asri/core/stats.hpp"
#include "asri/event_study.hpp"
#include "asri/snapshot_store.hpp"
#include "asri/subindices.hpp"

namespace asri::backtest {

struct BacktestConfig {
    std::optional<Date> start, end;  // default: the store's full range
    WeightVector weights;
    bool lagged = false;
    bool algo_adjust = true;
};

struct SkippedDate {
    Date date;
    std::string reason;
};

struct BacktestRun {
    std::vector<AsriPoint> points;
    std::vector<SubIndexBreakdown> breakdowns;
    std::vector<SkippedDate> skipped;
};

// Dates whose inputs are missing (excluded gaps) produce no point.
inline BacktestRun run_backtest(const SnapshotStore& store, const BacktestConfig& cfg = {}) {
    auto [first, last] = store.date_range();
    const Date a = cfg.start.value_or(first), b = cfg.end.value_or(last);
    require(a <= b, ErrorKind::parameter, "empty backtest date range");
    BacktestRun run;
    for (Date d = a; d <= b; d += Days{1}) {
        MarketSnapshot s;
        try {
            s = store.snapshot_at(d, cfg.lagged);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::missing_data) throw;
            run.skipped.push_back({d, e.what()});
            continue;
        }
        SubIndexBreakdown br = compute_subindices(s, cfg.algo_adjust);
        run.points.push_back(aggregate_linear(br.scores(), cfg.weights, d));
        run.breakdowns.push_back(std::move(br));
    }
    return run;
}

namespace detail {

inline TimeSeries weighted_series(const std::vector<AsriPoint>& pts, const WeightVector& w) {
    TimeSeries ts;
    ts.desc.id = "asri";
    ts.points.reserve(pts.size());
    for (auto& p : pts) {
        double v = 0.0;
        for (std::size_t i = 0; i < 4; ++i) v += w[i] * p.sub[i];
        ts.points.push_back({p.date, v});
    }
    return ts;
}

// First day in [onset-lookback, onset-1] at or above the threshold, as days before onset.
inline std::optional<int> pre_window_lead(const std::vector<AsriPoint>& pts, const WeightVector& w, Date onset,
                                          int lookback, double threshold, double* peak = nullptr) {
    auto it = std::lower_bound(pts.begin(), pts.end(), onset - Days{lookback},
                               [](const AsriPoint& p, Date d) { return p.date < d; });
    std::optional<int> lead;
    double pk = -std::numeric_limits<double>::infinity();
    for (; it != pts.end() && it->date < onset; ++it) {
        double v = 0.0;
        for (std::size_t i = 0; i < 4; ++i) v += w[i] * it->sub[i];
        pk = std::max(pk, v);
        if (!lead && v >= threshold) lead = int(days_between(it->date, onset));
    }
    if (peak) *peak = pk;
    return lead;
}

}  // namespace detail

// ---------------------------------------------------------------- walk-forward

inline constexpr int kWalkForwardGapDays = 30;
inline constexpr int kMinTrainingDays = 365;

struct WalkForwardWindow {
    Date train_start{}, train_end{};
    Date test_start{}, test_end{};
};

inline WalkForwardWindow default_window(const std::vector<AsriPoint>& pts, const CrisisEvent& ev) {
    require(!pts.empty(), ErrorKind::insufficient_data, "empty index history");
    return {pts.front().date, ev.onset - Days{kWalkForwardGapDays + 1}, ev.onset - Days{kWalkForwardGapDays}, ev.onset + Days{10}};
}

struct WalkForwardResult {
    std::string event;
    bool evaluated = false;
    std::string skip_reason;
    WalkForwardWindow window;
    std::array<double, 4> train_mean{}, train_sd{};
    double oos_peak = 0.0;
    std::optional<int> lead;
    bool detected = false;
};

inline WalkForwardResult walk_forward_event(const std::vector<AsriPoint>& pts, const CrisisEvent& ev, const WalkForwardWindow& win,
                                            const WeightVector& w = {}, double threshold = 50.0) {
    require(win.train_end < win.test_start && win.train_end < ev.onset - Days{kWalkForwardGapDays},
            ErrorKind::parameter, ev.name + ": training window overlaps the test window");
    require(win.test_start <= win.test_end, ErrorKind::parameter, "empty test window");
    WalkForwardResult r;
    r.event = ev.name;
    r.window = win;
    std::vector<std::array<double, 4>> train;
    for (auto& p : pts)
        if (p.date >= win.train_start && p.date <= win.train_end) train.push_back(p.sub);
    if (train.empty() || days_between(win.train_start, win.train_end) + 1 < kMinTrainingDays ||
        train.size() < std::size_t(kMinTrainingDays) * 9 / 10) {
        r.skip_reason = "fewer than 365 days of training data";
        return r;
    }
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> col;
        col.reserve(train.size());
        for (auto& s : train) col.push_back(s[i]);
        r.train_mean[i] = stats::mean(col);
        r.train_sd[i] = col.size() > 1 ? stats::stddev(col) : 0.0;
    }
    r.evaluated = true;
    r.oos_peak = -std::numeric_limits<double>::infinity();
    for (auto& p : pts) {
        if (p.date < win.test_start || p.date > win.test_end) continue;
        double v = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double z = r.train_sd[i] > 0 ? (p.sub[i] - r.train_mean[i]) / r.train_sd[i] : 0.0;
            v += w[i] * std::clamp(50.0 + 10.0 * z, 0.0, 100.0);
        }
        r.oos_peak = std::max(r.oos_peak, v);
        if (!r.lead && p.date <= ev.onset && v >= threshold) r.lead = int(days_between(p.date, ev.onset));
    }
    r.detected = r.lead.has_value();
    return r;
}

inline std::vector<WalkForwardResult> walk_forward(const std::vector<AsriPoint>& pts, const std::vector<CrisisEvent>& events,
                                                   const WeightVector& w = {}, double threshold = 50.0) {
    std::vector<WalkForwardResult> out;
    for (auto& e : events) out.push_back(walk_forward_event(pts, e, default_window(pts, e), w, threshold));
    return out;
}

// ---------------------------------------------------------------- hold-one-out

inline std::vector<WeightVector> simplex_grid(double step = 0.05, double floor = 0.05) {
    require(step > 0 && step <= 1.0, ErrorKind::parameter, "grid step must lie in (0, 1]");
    const long units = std::lround(1.0 / step);
    require(std::abs(double(units) * step - 1.0) < 1e-9, ErrorKind::parameter, "grid step must divide 1");
    const long lo = std::lround(std::ceil(floor / step - 1e-9));
    std::vector<WeightVector> grid;
    for (long a = lo; a <= units; ++a)
        for (long b = lo; a + b <= units; ++b)
            for (long c = lo; a + b + c <= units; ++c) {
                const long d = units - a - b - c;
                if (d < lo) continue;
                std::array<double, 4> w{double(a) / double(units), double(b) / double(units), double(c) / double(units), 0.0};
                w[3] = 1.0 - w[0] - w[1] - w[2];
                if (w[3] <= 0) continue;
                grid.push_back(WeightVector::make(w));
            }
    if (grid.empty()) fail(ErrorKind::parameter, "weight grid is empty under the floor");
    return grid;
}

inline constexpr int kHoldOutPreWindow = 60;

struct HoldOutResult {
    std::string event;
    WeightVector derived;
    std::size_t train_detected = 0;
    double train_mean_lead = 0.0;
    double peak_derived = 0.0, peak_theoretical = 0.0;
    std::optional<int> lead_derived, lead_theoretical;
    [[nodiscard]] bool detected_derived() const { return lead_derived.has_value(); }
    [[nodiscard]] bool detected_theoretical() const { return lead_theoretical.has_value(); }
};

inline std::vector<HoldOutResult> hold_one_out(const std::vector<AsriPoint>& pts, const std::vector<CrisisEvent>& events,
                                               double step = 0.05, double threshold = 50.0) {
    require(events.size() >= 3, ErrorKind::parameter, "hold-one-out needs at least two training events");
    const auto grid = simplex_grid(step);
    const WeightVector theo;
    std::vector<HoldOutResult> out;
    for (std::size_t h = 0; h < events.size(); ++h) {
        HoldOutResult r;
        r.event = events[h].name;
        bool have = false;
        double best_dist = 0.0;
        for (auto& w : grid) {
            std::size_t count = 0;
            double lead_sum = 0.0;
            for (std::size_t e = 0; e < events.size(); ++e) {
                if (e == h) continue;
                if (auto l = detail::pre_window_lead(pts, w, events[e].onset, kHoldOutPreWindow, threshold)) {
                    ++count;
                    lead_sum += *l;
                }
            }
            const double mean_lead = count ? lead_sum / double(count) : 0.0;
            double dist = 0.0;
            for (std::size_t i = 0; i < 4; ++i) dist += std::abs(w[i] - theo[i]);
            const bool better = !have || count > r.train_detected ||
                                (count == r.train_detected &&
                                 (mean_lead > r.train_mean_lead || (mean_lead == r.train_mean_lead && dist < best_dist)));
            if (better) {
                have = true;
                r.derived = w;
                r.train_detected = count;
                r.train_mean_lead = mean_lead;
                best_dist = dist;
            }
        }
        r.lead_derived = detail::pre_window_lead(pts, r.derived, events[h].onset, kHoldOutPreWindow, threshold, &r.peak_derived);
        r.lead_theoretical = detail::pre_window_lead(pts, theo, events[h].onset, kHoldOutPreWindow, threshold, &r.peak_theoretical);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- perturbation

inline WeightVector perturb(const WeightVector& base, std::size_t which, double delta) {
    require(which < 4, ErrorKind::parameter, "sub-index index out of range");
    const double wi = base[which] * (1.0 + delta);
    require(wi > 0.0 && wi < 1.0, ErrorKind::parameter, "perturbation drives a weight out of (0, 1)");
    const double scale = (1.0 - wi) / (1.0 - base[which]);
    std::array<double, 4> w{};
    for (std::size_t i = 0; i < 4; ++i) w[i] = i == which ? wi : base[i] * scale;
    double sum = 0.0;
    for (double x : w) sum += x;
    std::size_t big = which == 0 ? 1 : 0;
    for (std::size_t i = 0; i < 4; ++i)
        if (i != which && w[i] > w[big]) big = i;
    w[big] += 1.0 - sum;
    return WeightVector::make(w);
}

struct PerturbationRow {
    std::size_t component = 0;
    double delta = 0.0;
    WeightVector weights;
    double detection_rate = 0.0;  // mean bootstrap detection rate across events
    double mean_lead = 0.0;       // mean point lead over detected events
    double rank_correlation = 1.0;
};

inline std::vector<PerturbationRow> weight_perturbation(const std::vector<AsriPoint>& pts, const std::vector<CrisisEvent>& events,
                                                        const WeightVector& base = {},
                                                        const std::vector<double>& deltas = {-0.15, -0.10, -0.05, 0.05, 0.10, 0.15},
                                                        const BootstrapConfig& bc = {}, const EventStudyConfig& cfg = {}) {
    require(!pts.empty(), ErrorKind::insufficient_data, "empty index history");
    const auto baseline = detail::weighted_series(pts, base).values();
    std::vector<PerturbationRow> out;
    for (std::size_t c = 0; c < 4; ++c)
        for (double d : deltas) {
            PerturbationRow row;
            row.component = c;
            row.delta = d;
            row.weights = d == 0.0 ? base : perturb(base, c, d);
            const TimeSeries ts = detail::weighted_series(pts, row.weights);
            const auto v = ts.values();
            row.rank_correlation = d == 0.0 ? 1.0 : stats::spearman(baseline, v);
            double rate = 0.0, lead = 0.0;
            std::size_t nl = 0;
            for (auto& e : events) {
                const auto b = block_bootstrap_detection(ts, e, bc, cfg);
                rate += b.detection_rate;
                if (b.lead_point) {
                    lead += *b.lead_point;
                    ++nl;
                }
            }
            row.detection_rate = events.empty() ? 0.0 : rate / double(events.size());
            row.mean_lead = nl ? lead / double(nl) : 0.0;
            out.push_back(row);
        }
    return out;
}

// ---------------------------------------------------------------- thresholds / windows

struct ThresholdSweep {
    std::vector<DetectionMetrics> rows;
    double best_threshold = 0.0;  // argmax of event-level F1
};

inline ThresholdSweep threshold_sensitivity(const TimeSeries& asri, const std::vector<CrisisEvent>& events,
                                            const std::vector<double>& thresholds = {60, 65, 70, 75, 80}, int pre_window = 30) {
    require(!thresholds.empty(), ErrorKind::parameter, "no thresholds given");
    ThresholdSweep s;
    double best = -1.0;
    for (double t : thresholds) {
        s.rows.push_back(detection_metrics(asri, events, t, pre_window));
        if (s.rows.back().f1_event > best) {
            best = s.rows.back().f1_event;
            s.best_threshold = t;
        }
    }
    return s;
}

struct ForwardWindowRow {
    int window = 0;
    double auroc = 0.0, auprc = 0.0;
    DetectionMetrics metrics;
    double mean_lead = 0.0;
};

struct ForwardWindowSweep {
    std::vector<ForwardWindowRow> rows;
    int best_window = 0;  // argmax AUROC
};

inline ForwardWindowSweep forward_window_sensitivity(const TimeSeries& asri, const std::vector<CrisisEvent>& events,
                                                     const std::vector<int>& windows = {14, 30, 60, 90}, double threshold = 50.0) {
    ForwardWindowSweep s;
    const auto dates = asri.dates();
    const auto scores = asri.values();
    double best = -1.0;
    for (int w : windows) {
        const auto labels = forward_crisis_labels(dates, events, w);
        ForwardWindowRow row;
        row.window = w;
        std::size_t pos = 0;
        for (int l : labels) pos += std::size_t(l);
        if (pos == 0) fail(ErrorKind::degenerate, "forward window " + std::to_string(w) + " produces no positive labels");
        if (pos == labels.size()) fail(ErrorKind::degenerate, "forward window " + std::to_string(w) + " labels every day positive");
        const auto rp = roc_pr_curves(scores, labels);
        row.auroc = rp.auroc;
        row.auprc = rp.auprc;
        row.metrics = detection_metrics(asri, events, threshold, w);
        double lead = 0.0;
        std::size_t nl = 0;
        for (auto& l : row.metrics.lead_per_event)
            if (l) {
                lead += *l;
                ++nl;
            }
        row.mean_lead = nl ? lead / double(nl) : 0.0;
        if (row.auroc > best) {
            best = row.auroc;
            s.best_window = w;
        }
        s.rows.push_back(row);
    }
    return s;
}

// ---------------------------------------------------------------- publication lag

struct LagComparisonRow {
    std::string event;
    double peak_foresight = 0.0, peak_lagged = 0.0;
    std::optional<int> lead_foresight, lead_lagged;
    double degradation_pct = 0.0;
};

struct LagComparison {
    std::vector<LagComparisonRow> rows;
    double mean_degradation_pct = 0.0;
};

inline LagComparison lag_comparison(const TimeSeries& foresight, const TimeSeries& lagged, const std::vector<CrisisEvent>& events,
                                    double threshold = 50.0, int lead_cap = 30) {
    LagComparison out;
    auto peak_of = [](const TimeSeries& ts, Date onset) {
        double pk = -std::numeric_limits<double>::infinity();
        for (auto& p : ts.points)
            if (p.date >= onset - Days{30} && p.date <= onset + Days{10}) pk = std::max(pk, p.value);
        return pk;
    };
    double sum = 0.0;
    for (auto& e : events) {
        LagComparisonRow r;
        r.event = e.name;
        r.peak_foresight = peak_of(foresight, e.onset);
        r.peak_lagged = peak_of(lagged, e.onset);
        require(std::isfinite(r.peak_foresight) && std::isfinite(r.peak_lagged), ErrorKind::insufficient_data,
                e.name + ": no index values around onset");
        r.lead_foresight = lead_time_threshold(foresight, e, threshold, lead_cap);
        r.lead_lagged = lead_time_threshold(lagged, e, threshold, lead_cap);
        r.degradation_pct = r.peak_foresight > 0 ? 100.0 * (r.peak_foresight - r.peak_lagged) / r.peak_foresight : 0.0;
        sum += r.degradation_pct;
        out.rows.push_back(r);
    }
    out.mean_degradation_pct = events.empty() ? 0.0 : sum / double(events.size());
    return out;
}

// ---------------------------------------------------------------- ablation

struct AblationRow {
    std::string excluded;  // "none" for the full index
    WeightVector weights;
    std::size_t detected = 0;
    std::size_t significant = 0;  // Bonferroni across events
    double mean_cas = 0.0;
    std::vector<std::optional<int>> leads;
};

inline std::vector<AblationRow> ablation_study(const std::vector<AsriPoint>& pts, const std::vector<CrisisEvent>& events,
                                               const WeightVector& base = {}, const EventStudyConfig& cfg = {}) {
    std::vector<AblationRow> out;
    for (int ex = -1; ex < 4; ++ex) {
        AblationRow row;
        row.excluded = ex < 0 ? "none" : kSubIndexNames[std::size_t(ex)];
        row.weights = ex < 0 ? base : ablation_weights(base, SubIndex(ex));
        const TimeSeries ts = detail::weighted_series(pts, row.weights);
        std::vector<double> ps;
        double cas = 0.0;
        for (auto& e : events) {
            const auto r = run_event_study(ts, e, cfg);
            cas += r.cas;
            ps.push_back(r.p_value.value_or(1.0));
            row.leads.push_back(r.lead_time_threshold);
            if (r.lead_time_threshold) ++row.detected;
        }
        for (bool b : bonferroni(ps, cfg.alpha)) row.significant += b ? 1 : 0;
        row.mean_cas = events.empty() ? 0.0 : cas / double(events.size());
        out.push_back(row);
    }
    return out;
}

}  // namespace asri::backtest
