#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asri/core/date.hpp"
#include "asri/core/error.hpp"
#include "asri/core/io.hpp"

namespace asri {

using Json = nlohmann::json;

enum class FillKind { raw, interpolated, forward_filled };
enum class Frequency { daily, weekdays, weekly, monthly };

inline std::string to_string(FillKind f) {
    switch (f) {
        case FillKind::raw: return "raw";
        case FillKind::interpolated: return "interpolated";
        case FillKind::forward_filled: return "forward_filled";
    }
    return "raw";
}

inline FillKind parse_fill_kind(std::string_view s) {
    if (s == "raw") return FillKind::raw;
    if (s == "interpolated") return FillKind::interpolated;
    if (s == "forward_filled") return FillKind::forward_filled;
    fail(ErrorKind::data, "unknown fill kind '" + std::string(s) + "'");
}

inline std::string to_string(Frequency f) {
    switch (f) {
        case Frequency::daily: return "daily";
        case Frequency::weekdays: return "weekdays";
        case Frequency::weekly: return "weekly";
        case Frequency::monthly: return "monthly";
    }
    return "daily";
}

inline Frequency parse_frequency(std::string_view s) {
    if (s == "daily") return Frequency::daily;
    if (s == "weekdays") return Frequency::weekdays;
    if (s == "weekly") return Frequency::weekly;
    if (s == "monthly") return Frequency::monthly;
    fail(ErrorKind::data, "unknown frequency '" + std::string(s) + "'");
}

// Confidence attached to each kind of filled value.
namespace confidence {
inline constexpr double raw = 1.0;
inline constexpr double interpolated = 0.7;
inline constexpr double forward_filled = 0.5;
inline constexpr double weekly_interpolated = 0.8;
inline constexpr double stale_monthly = 0.6;
}  // namespace confidence

inline constexpr int kInterpolateBelowDays = 3;  // gaps of 1..2 missing days
inline constexpr int kForwardFillMaxDays = 7;    // 3..7 forward filled, longer excluded
inline constexpr int kMonthlyStaleDays = 45;

struct PublicationLag {
    std::chrono::hours hours{0};
    int business_days = 0;
    bool operator==(const PublicationLag&) const = default;
};

// Last date whose observation is published by `target`.
inline Date availability_cutoff(const PublicationLag& lag, Date target) {
    const long h = lag.hours.count();
    require(h >= 0 && lag.business_days >= 0, ErrorKind::parameter, "negative publication lag");
    Date d = target - Days{(h + 23) / 24};
    return subtract_business_days(d, lag.business_days);
}

// Known feeds and their typical publication delays.
inline PublicationLag default_publication_lag(std::string_view source, std::string_view endpoint = {}) {
    using std::chrono::hours;
    if (source == "defillama_tvl" || source == "defillama_protocols" || source == "defillama_bridges")
        return {hours{6}, 0};
    if (source == "defillama_stablecoins") return {hours{12}, 0};
    if (source == "fred") {
        if (endpoint == "VIXCLS") return {hours{24}, 0};
        return {hours{0}, 2};  // Treasury series
    }
    if (source == "coingecko") return {hours{1}, 0};
    if (source == "news") return {hours{2}, 0};
    return {hours{0}, 0};
}

struct Observation {
    Date date;
    double value = 0.0;
    double confidence = confidence::raw;
    FillKind filled = FillKind::raw;
    bool operator==(const Observation&) const = default;
};

struct SeriesDescriptor {
    std::string id;
    std::string source;
    std::string endpoint;
    Frequency frequency = Frequency::daily;
    PublicationLag lag;
    bool operator==(const SeriesDescriptor&) const = default;
};

// Inclusive run of calendar days with no usable value.
struct GapRange {
    Date first, last;
    bool operator==(const GapRange&) const = default;
};

struct TimeSeries {
    SeriesDescriptor desc;
    std::vector<Observation> points;  // strictly increasing dates
    std::vector<GapRange> gaps;

    [[nodiscard]] bool empty() const { return points.empty(); }
    [[nodiscard]] std::size_t size() const { return points.size(); }

    [[nodiscard]] const Observation* find(Date d) const {
        auto it = std::lower_bound(points.begin(), points.end(), d,
                                   [](const Observation& o, Date x) { return o.date < x; });
        return (it != points.end() && it->date == d) ? &*it : nullptr;
    }

    [[nodiscard]] const Observation* latest_at_or_before(Date d) const {
        auto it = std::upper_bound(points.begin(), points.end(), d,
                                   [](Date x, const Observation& o) { return x < o.date; });
        return it == points.begin() ? nullptr : &*(it - 1);
    }

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v;
        v.reserve(points.size());
        for (auto& p : points) v.push_back(p.value);
        return v;
    }

    [[nodiscard]] std::vector<Date> dates() const {
        std::vector<Date> v;
        v.reserve(points.size());
        for (auto& p : points) v.push_back(p.date);
        return v;
    }

    bool operator==(const TimeSeries&) const = default;
};

inline TimeSeries make_series(std::string id, const std::vector<Date>& dates, const std::vector<double>& values) {
    require(dates.size() == values.size(), ErrorKind::parameter, "make_series: length mismatch");
    TimeSeries ts;
    ts.desc.id = std::move(id);
    ts.points.reserve(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (i > 0) require(dates[i] > dates[i - 1], ErrorKind::data, "make_series: dates not increasing");
        ts.points.push_back({dates[i], values[i]});
    }
    return ts;
}

// Sort, deduplicate, and reject conflicting duplicates.
inline TimeSeries ingest_source(const SeriesDescriptor& desc, std::vector<std::pair<Date, double>> raw) {
    std::stable_sort(raw.begin(), raw.end(), [](auto& a, auto& b) { return a.first < b.first; });
    TimeSeries ts;
    ts.desc = desc;
    for (auto& [d, v] : raw) {
        if (!std::isfinite(v)) fail(ErrorKind::data, desc.id + ": non-finite value on " + format_date(d));
        if (!ts.points.empty() && ts.points.back().date == d) {
            if (ts.points.back().value != v)
                fail(ErrorKind::data, desc.id + ": conflicting values on " + format_date(d) + " (" +
                                          io::shortest(ts.points.back().value) + " vs " + io::shortest(v) + ")");
            continue;
        }
        ts.points.push_back({d, v, confidence::raw, FillKind::raw});
    }
    return ts;
}

namespace detail {
inline void merge_gaps(std::vector<GapRange>& g) {
    std::sort(g.begin(), g.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<GapRange> out;
    for (auto& r : g) {
        if (!out.empty() && r.first <= out.back().last + Days{1})
            out.back().last = std::max(out.back().last, r.last);
        else
            out.push_back(r);
    }
    g = std::move(out);
}
}  // namespace detail

// Daily gap policy: 1-2 missing days interpolated, 3-7 forward filled, longer recorded as gaps.
inline TimeSeries fill_gaps(const TimeSeries& in) {
    TimeSeries out;
    out.desc = in.desc;
    out.gaps = in.gaps;
    for (std::size_t i = 0; i < in.points.size(); ++i) {
        const Observation& a = in.points[i];
        out.points.push_back(a);
        if (i + 1 == in.points.size()) break;
        const Observation& b = in.points[i + 1];
        const long missing = days_between(a.date, b.date) - 1;
        if (missing <= 0) continue;
        if (missing < kInterpolateBelowDays) {
            const double span = double(missing + 1);
            for (long k = 1; k <= missing; ++k) {
                const double w = double(k) / span;
                out.points.push_back({a.date + Days{k}, a.value + w * (b.value - a.value),
                                      std::min({confidence::interpolated, a.confidence, b.confidence}),
                                      FillKind::interpolated});
            }
        } else if (missing <= kForwardFillMaxDays) {
            for (long k = 1; k <= missing; ++k)
                out.points.push_back({a.date + Days{k}, a.value, std::min(confidence::forward_filled, a.confidence),
                                      FillKind::forward_filled});
        } else {
            out.gaps.push_back({a.date + Days{1}, b.date - Days{1}});
        }
    }
    detail::merge_gaps(out.gaps);
    return out;
}

// Weekly observations spread linearly over the days in between.
inline TimeSeries interpolate_weekly(const TimeSeries& in) {
    TimeSeries out;
    out.desc = in.desc;
    out.desc.frequency = Frequency::daily;
    out.gaps = in.gaps;
    for (std::size_t i = 0; i < in.points.size(); ++i) {
        const Observation& a = in.points[i];
        out.points.push_back(a);
        if (i + 1 == in.points.size()) break;
        const Observation& b = in.points[i + 1];
        const long span = days_between(a.date, b.date);
        for (long k = 1; k < span; ++k) {
            const double w = double(k) / double(span);
            out.points.push_back({a.date + Days{k}, a.value + w * (b.value - a.value),
                                  std::min({confidence::weekly_interpolated, a.confidence, b.confidence}),
                                  FillKind::interpolated});
        }
    }
    return out;
}

// Latest monthly value as seen on `as_of`; confidence drops once it is older than 45 days.
inline Observation carry_forward_monthly(const TimeSeries& ts, Date as_of) {
    const Observation* last = ts.latest_at_or_before(as_of);
    if (!last) fail(ErrorKind::missing_data, ts.desc.id + ": no observation on or before " + format_date(as_of));
    Observation o = *last;
    o.date = as_of;
    if (days_between(last->date, as_of) > kMonthlyStaleDays) {
        o.confidence = std::min(o.confidence, confidence::stale_monthly);
        o.filled = FillKind::forward_filled;
    }
    return o;
}

// Weekday-only feeds: carry Friday into Saturday and Sunday.
inline TimeSeries densify_weekdays(const TimeSeries& in) {
    TimeSeries out;
    out.desc = in.desc;
    out.gaps = in.gaps;
    for (std::size_t i = 0; i < in.points.size(); ++i) {
        const Observation& a = in.points[i];
        out.points.push_back(a);
        if (i + 1 == in.points.size()) break;
        const Date next = in.points[i + 1].date;
        for (Date d = a.date + Days{1}; d < next && is_weekend(d); d += Days{1})
            out.points.push_back({d, a.value, std::min(confidence::forward_filled, a.confidence),
                                  FillKind::forward_filled});
    }
    return out;
}

// Only what had been published by `target`.
inline TimeSeries available_as_of(const TimeSeries& in, Date target) {
    const Date cutoff = availability_cutoff(in.desc.lag, target);
    TimeSeries out;
    out.desc = in.desc;
    for (auto& p : in.points) {
        if (p.date > cutoff) break;
        out.points.push_back(p);
    }
    for (auto g : in.gaps) {
        if (g.first > cutoff) continue;
        g.last = std::min(g.last, cutoff);
        out.gaps.push_back(g);
    }
    return out;
}

// Midnight snapshots describe the previous day.
inline TimeSeries shift_t_minus_1(const TimeSeries& in) {
    TimeSeries out = in;
    for (auto& p : out.points) p.date -= Days{1};
    for (auto& g : out.gaps) {
        g.first -= Days{1};
        g.last -= Days{1};
    }
    return out;
}

// --- snapshot files --------------------------------------------------------

inline constexpr const char* kSnapshotCsvHeader = "date,value,confidence,filled";

inline std::string to_snapshot_csv(const TimeSeries& ts) {
    std::string s = kSnapshotCsvHeader;
    s += '\n';
    for (auto& p : ts.points) {
        s += format_date(p.date);
        s += ',';
        s += io::shortest(p.value);
        s += ',';
        s += io::shortest(p.confidence);
        s += ',';
        s += to_string(p.filled);
        s += '\n';
    }
    return s;
}

inline Json provenance_json(const TimeSeries& ts) {
    std::size_t n_raw = 0, n_int = 0, n_ff = 0;
    for (auto& p : ts.points) {
        if (p.filled == FillKind::raw) ++n_raw;
        else if (p.filled == FillKind::interpolated) ++n_int;
        else ++n_ff;
    }
    Json gaps = Json::array();
    for (auto& g : ts.gaps) gaps.push_back({{"first", format_date(g.first)}, {"last", format_date(g.last)}});
    Json j;
    j["id"] = ts.desc.id;
    j["source"] = ts.desc.source;
    j["endpoint"] = ts.desc.endpoint;
    j["frequency"] = to_string(ts.desc.frequency);
    j["lag_hours"] = ts.desc.lag.hours.count();
    j["lag_business_days"] = ts.desc.lag.business_days;
    j["points"] = ts.points.size();
    j["raw_points"] = n_raw;
    j["interpolated_points"] = n_int;
    j["forward_filled_points"] = n_ff;
    j["first_date"] = ts.points.empty() ? "" : format_date(ts.points.front().date);
    j["last_date"] = ts.points.empty() ? "" : format_date(ts.points.back().date);
    j["gaps"] = gaps;
    return j;
}

inline std::string to_provenance_text(const TimeSeries& ts) { return provenance_json(ts).dump(2) + "\n"; }

inline TimeSeries parse_snapshot(std::string_view csv, const Json& prov) {
    TimeSeries ts;
    try {
        ts.desc.id = prov.at("id").get<std::string>();
        ts.desc.source = prov.at("source").get<std::string>();
        ts.desc.endpoint = prov.at("endpoint").get<std::string>();
        ts.desc.frequency = parse_frequency(prov.at("frequency").get<std::string>());
        ts.desc.lag.hours = std::chrono::hours{prov.at("lag_hours").get<long>()};
        ts.desc.lag.business_days = prov.at("lag_business_days").get<int>();
        for (auto& g : prov.at("gaps"))
            ts.gaps.push_back({parse_date(g.at("first").get<std::string>()), parse_date(g.at("last").get<std::string>())});
    } catch (const Json::exception& e) {
        fail(ErrorKind::data, std::string("bad provenance sidecar: ") + e.what());
    }
    auto lines = io::split(csv, '\n');
    if (lines.empty() || lines[0] != kSnapshotCsvHeader)
        fail(ErrorKind::data, ts.desc.id + ": snapshot header must be '" + kSnapshotCsvHeader + "'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = io::split(lines[i], ',');
        if (f.size() != 4) fail(ErrorKind::data, ts.desc.id + ": malformed snapshot row " + std::to_string(i));
        Observation o{parse_date(f[0]), io::parse_double(f[1]), io::parse_double(f[2]), parse_fill_kind(f[3])};
        if (!ts.points.empty() && o.date <= ts.points.back().date)
            fail(ErrorKind::data, ts.desc.id + ": snapshot dates not increasing at row " + std::to_string(i));
        ts.points.push_back(o);
    }
    return ts;
}

// Raw vendor-neutral input: "date,value" with header.
inline std::vector<std::pair<Date, double>> parse_raw_csv(std::string_view csv, const std::string& what) {
    std::vector<std::pair<Date, double>> out;
    auto lines = io::split(csv, '\n');
    if (lines.empty() || (lines[0] != "date,value" && lines[0] != "date,value\r"))
        fail(ErrorKind::data, what + ": expected header 'date,value'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view l = lines[i];
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (l.empty()) continue;
        auto f = io::split(l, ',');
        if (f.size() != 2) fail(ErrorKind::data, what + ": malformed row " + std::to_string(i));
        if (f[1] == "." || f[1].empty()) continue;  // FRED marks missing days with "."
        out.emplace_back(parse_date(f[0]), io::parse_double(f[1]));
    }
    return out;
}

// --- rate limiting -----------------------------------------------------------

// Sliding-window limiter; the clock is injected so tests need not sleep.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;
    RateLimiter(std::size_t max_requests, std::chrono::seconds window) : max_(max_requests), window_(window) {
        require(max_requests > 0, ErrorKind::parameter, "rate limit must be positive");
    }

    // Time to wait before the next request may go out at `now` (zero when allowed).
    [[nodiscard]] Clock::duration wait_time(Clock::time_point now) {
        evict(now);
        if (sent_.size() < max_) return Clock::duration::zero();
        return sent_.front() + window_ - now;
    }

    bool try_acquire(Clock::time_point now) {
        evict(now);
        if (sent_.size() >= max_) return false;
        sent_.push_back(now);
        return true;
    }

private:
    void evict(Clock::time_point now) {
        while (!sent_.empty() && sent_.front() + window_ <= now) sent_.pop_front();
    }
    std::size_t max_;
    Clock::duration window_;
    std::deque<Clock::time_point> sent_;
};

// DeFi Llama public API: 300 requests per 5 minutes.
inline RateLimiter defillama_rate_limiter() { return RateLimiter(300, std::chrono::seconds{300}); }

}  // namespace asri
