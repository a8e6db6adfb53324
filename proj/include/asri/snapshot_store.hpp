#pragma once

#include <algorithm>
#include <filesystem>
#include <cctype>
#include <functional>
#include <limits>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/core/date.hpp"
#include "asri/core/error.hpp"
#include "asri/core/io.hpp"
#include "asri/market_data.hpp"
#include "asri/market_snapshot.hpp"

namespace asri {

namespace fs = std::filesystem;

struct SeriesSpec {
    SeriesDescriptor desc;
    std::string path;  // raw "date,value" CSV, relative to the manifest
    bool midnight_snapshot = false;
};

struct StablecoinSpec {
    std::string id;
    Mechanism mechanism = Mechanism::fiat;
    std::string supply_series;
    std::optional<std::string> price_series;
    std::optional<std::string> backing_token;
};

struct BackingTokenSpec {
    std::string id;
    std::optional<std::string> volatility_series, growth_series, ratio_series;
};

struct ProtocolSpec {
    std::string id;
    std::string category;
    int audit_count = 0;
    std::string tvl_series;
};

struct MacroSpec {
    std::string stablecoin_tvl;
    std::string total_tvl;
    std::string treasury_10y;
    std::string vix;
    std::string spread_10y_2y;
    std::optional<std::string> btc_spy_corr_30d;
    std::optional<std::string> bridge_count;
};

// Declares every feed and how the entities in a snapshot are wired to them.
struct SourceManifest {
    std::string name;
    std::vector<SeriesSpec> series;
    std::vector<StablecoinSpec> stablecoins;
    std::vector<BackingTokenSpec> backing_tokens;
    std::vector<ProtocolSpec> protocols;
    MacroSpec macro;
    double unreg_fixed = 35.0;
    double sent_input = 50.0;

    [[nodiscard]] const SeriesSpec* find_series(const std::string& id) const {
        for (auto& s : series)
            if (s.desc.id == id) return &s;
        return nullptr;
    }

    static SourceManifest from_json(const Json& j);
    [[nodiscard]] Json to_json(bool with_paths = true) const;
};

namespace detail {
inline bool valid_series_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) return false;
    return id != "." && id != "..";
}

inline std::optional<std::string> opt_string(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}
}  // namespace detail

inline SourceManifest SourceManifest::from_json(const Json& j) {
    SourceManifest m;
    try {
        m.name = j.value("name", "");
        for (auto& s : j.at("series")) {
            SeriesSpec spec;
            spec.desc.id = s.at("id").get<std::string>();
            if (!detail::valid_series_id(spec.desc.id))
                fail(ErrorKind::data, "invalid series id '" + spec.desc.id + "'");
            spec.desc.source = s.at("source").get<std::string>();
            spec.desc.endpoint = s.value("endpoint", "");
            spec.desc.frequency = parse_frequency(s.value("frequency", "daily"));
            spec.desc.lag = default_publication_lag(spec.desc.source, spec.desc.endpoint);
            if (s.contains("lag_hours")) spec.desc.lag.hours = std::chrono::hours{s.at("lag_hours").get<long>()};
            if (s.contains("lag_business_days")) spec.desc.lag.business_days = s.at("lag_business_days").get<int>();
            spec.path = s.value("path", "");
            spec.midnight_snapshot = s.value("midnight_snapshot", false);
            if (m.find_series(spec.desc.id)) fail(ErrorKind::data, "duplicate series id '" + spec.desc.id + "'");
            m.series.push_back(std::move(spec));
        }
        for (auto& s : j.value("stablecoins", Json::array())) {
            StablecoinSpec c;
            c.id = s.at("id").get<std::string>();
            c.mechanism = parse_mechanism(s.at("mechanism").get<std::string>());
            c.supply_series = s.at("supply").get<std::string>();
            c.price_series = detail::opt_string(s, "price");
            c.backing_token = detail::opt_string(s, "backing_token");
            m.stablecoins.push_back(std::move(c));
        }
        for (auto& s : j.value("backing_tokens", Json::array())) {
            BackingTokenSpec b;
            b.id = s.at("id").get<std::string>();
            b.volatility_series = detail::opt_string(s, "volatility_30d_pct");
            b.growth_series = detail::opt_string(s, "supply_growth_30d_pct");
            b.ratio_series = detail::opt_string(s, "backing_ratio");
            m.backing_tokens.push_back(std::move(b));
        }
        for (auto& s : j.value("protocols", Json::array())) {
            ProtocolSpec p;
            p.id = s.at("id").get<std::string>();
            p.category = s.at("category").get<std::string>();
            p.audit_count = s.value("audit_count", 0);
            p.tvl_series = s.at("tvl").get<std::string>();
            m.protocols.push_back(std::move(p));
        }
        const Json& mac = j.at("macro");
        m.macro.stablecoin_tvl = mac.at("stablecoin_tvl").get<std::string>();
        m.macro.total_tvl = mac.at("total_tvl").get<std::string>();
        m.macro.treasury_10y = mac.at("treasury_10y").get<std::string>();
        m.macro.vix = mac.at("vix").get<std::string>();
        m.macro.spread_10y_2y = mac.at("spread_10y_2y").get<std::string>();
        m.macro.btc_spy_corr_30d = detail::opt_string(mac, "btc_spy_corr_30d");
        m.macro.bridge_count = detail::opt_string(mac, "bridge_count");
        if (j.contains("fixed")) {
            m.unreg_fixed = j.at("fixed").value("unreg", 35.0);
            m.sent_input = j.at("fixed").value("sent", 50.0);
        }
    } catch (const Json::exception& e) {
        fail(ErrorKind::data, std::string("malformed source manifest: ") + e.what());
    }
    // every reference must resolve
    auto check = [&](const std::string& id, const std::string& who) {
        if (!m.find_series(id)) fail(ErrorKind::data, who + " refers to undeclared series '" + id + "'");
    };
    for (auto& c : m.stablecoins) {
        check(c.supply_series, "stablecoin " + c.id);
        if (c.price_series) check(*c.price_series, "stablecoin " + c.id);
    }
    for (auto& b : m.backing_tokens) {
        if (b.volatility_series) check(*b.volatility_series, "backing token " + b.id);
        if (b.growth_series) check(*b.growth_series, "backing token " + b.id);
        if (b.ratio_series) check(*b.ratio_series, "backing token " + b.id);
    }
    for (auto& p : m.protocols) check(p.tvl_series, "protocol " + p.id);
    check(m.macro.stablecoin_tvl, "macro");
    check(m.macro.total_tvl, "macro");
    check(m.macro.treasury_10y, "macro");
    check(m.macro.vix, "macro");
    check(m.macro.spread_10y_2y, "macro");
    if (m.macro.btc_spy_corr_30d) check(*m.macro.btc_spy_corr_30d, "macro");
    if (m.macro.bridge_count) check(*m.macro.bridge_count, "macro");
    return m;
}

inline Json SourceManifest::to_json(bool with_paths) const {
    Json j;
    j["name"] = name;
    Json ser = Json::array();
    for (auto& s : series) {
        Json e{{"id", s.desc.id},
               {"source", s.desc.source},
               {"endpoint", s.desc.endpoint},
               {"frequency", to_string(s.desc.frequency)},
               {"lag_hours", s.desc.lag.hours.count()},
               {"lag_business_days", s.desc.lag.business_days},
               {"midnight_snapshot", s.midnight_snapshot}};
        if (with_paths) e["path"] = s.path;
        ser.push_back(std::move(e));
    }
    j["series"] = ser;
    Json sc = Json::array();
    for (auto& c : stablecoins) {
        Json e{{"id", c.id}, {"mechanism", to_string(c.mechanism)}, {"supply", c.supply_series}};
        e["price"] = c.price_series ? Json(*c.price_series) : Json(nullptr);
        e["backing_token"] = c.backing_token ? Json(*c.backing_token) : Json(nullptr);
        sc.push_back(std::move(e));
    }
    j["stablecoins"] = sc;
    Json bt = Json::array();
    for (auto& b : backing_tokens) {
        Json e{{"id", b.id}};
        e["volatility_30d_pct"] = b.volatility_series ? Json(*b.volatility_series) : Json(nullptr);
        e["supply_growth_30d_pct"] = b.growth_series ? Json(*b.growth_series) : Json(nullptr);
        e["backing_ratio"] = b.ratio_series ? Json(*b.ratio_series) : Json(nullptr);
        bt.push_back(std::move(e));
    }
    j["backing_tokens"] = bt;
    Json pr = Json::array();
    for (auto& p : protocols)
        pr.push_back({{"id", p.id}, {"category", p.category}, {"audit_count", p.audit_count}, {"tvl", p.tvl_series}});
    j["protocols"] = pr;
    Json mac{{"stablecoin_tvl", macro.stablecoin_tvl},
             {"total_tvl", macro.total_tvl},
             {"treasury_10y", macro.treasury_10y},
             {"vix", macro.vix},
             {"spread_10y_2y", macro.spread_10y_2y}};
    mac["btc_spy_corr_30d"] = macro.btc_spy_corr_30d ? Json(*macro.btc_spy_corr_30d) : Json(nullptr);
    mac["bridge_count"] = macro.bridge_count ? Json(*macro.bridge_count) : Json(nullptr);
    j["macro"] = mac;
    j["fixed"] = {{"unreg", unreg_fixed}, {"sent", sent_input}};
    return j;
}

inline SourceManifest load_manifest(const fs::path& p) {
    Json j;
    try {
        j = Json::parse(io::read_file(p));
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::data, p.string() + ": " + e.what());
    }
    return SourceManifest::from_json(j);
}

// Apply the frequency-specific cleaning to one ingested feed.
inline TimeSeries clean_series(const SeriesSpec& spec, std::vector<std::pair<Date, double>> raw) {
    TimeSeries ts = ingest_source(spec.desc, std::move(raw));
    if (spec.midnight_snapshot) ts = shift_t_minus_1(ts);
    switch (spec.desc.frequency) {
        case Frequency::daily: return fill_gaps(ts);
        case Frequency::weekdays: return fill_gaps(densify_weekdays(ts));
        case Frequency::weekly: return interpolate_weekly(ts);
        case Frequency::monthly: return ts;  // carried forward when read
    }
    return ts;
}

// Returns the raw "date,value" text for a live feed; used instead of the local file when set.
using RawFetcher = std::function<std::string(const SeriesSpec&)>;

struct IngestReport {
    std::vector<std::string> written;
    std::vector<std::string> unchanged;
};

// Exclusive writer guard on a snapshot directory.
class WriterLock {
public:
    explicit WriterLock(const fs::path& dir) : path_(dir / ".writer.lock") {
        fs::create_directories(dir);
        if (fs::exists(path_)) fail(ErrorKind::io, "snapshot directory is locked by another writer: " + dir.string());
        std::ofstream(path_) << "locked\n";
    }
    ~WriterLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

private:
    fs::path path_;
};

// Re-running on unchanged inputs rewrites nothing.
inline IngestReport ingest_manifest(const SourceManifest& m, const fs::path& manifest_dir, const fs::path& snapshot_dir,
                                    const RawFetcher& fetch = {}) {
    WriterLock lock(snapshot_dir);
    IngestReport rep;
    auto note = [&](bool changed, const std::string& what) {
        (changed ? rep.written : rep.unchanged).push_back(what);
    };
    for (auto& spec : m.series) {
        std::string text;
        if (fetch) {
            text = fetch(spec);
        } else {
            require(!spec.path.empty(), ErrorKind::missing_data, "series " + spec.desc.id + " has no local path");
            text = io::read_file(manifest_dir / spec.path);
        }
        TimeSeries ts = clean_series(spec, parse_raw_csv(text, spec.desc.id));
        note(io::write_file_if_changed(snapshot_dir / "series" / (spec.desc.id + ".csv"), to_snapshot_csv(ts)),
             "series/" + spec.desc.id + ".csv");
        note(io::write_file_if_changed(snapshot_dir / "series" / (spec.desc.id + ".json"), to_provenance_text(ts)),
             "series/" + spec.desc.id + ".json");
    }
    note(io::write_file_if_changed(snapshot_dir / "manifest.json", m.to_json(false).dump(2) + "\n"), "manifest.json");
    return rep;
}

inline constexpr int kMaxStaleDays = 7;
inline constexpr std::size_t kTvlHistoryDays = 30;

class SnapshotStore {
public:
    SnapshotStore() = default;
    SnapshotStore(SourceManifest m, std::map<std::string, TimeSeries> series) : manifest_(std::move(m)) {
        for (auto& spec : manifest_.series) {
            auto it = series.find(spec.desc.id);
            if (it == series.end()) fail(ErrorKind::missing_data, "no data for series '" + spec.desc.id + "'");
            add(std::move(it->second));
        }
    }

    static SnapshotStore open(const fs::path& dir) {
        if (!fs::exists(dir / "manifest.json"))
            fail(ErrorKind::missing_data, "no snapshot manifest in " + dir.string());
        if (fs::exists(dir / ".writer.lock")) fail(ErrorKind::io, "snapshot directory is being written: " + dir.string());
        SourceManifest m = load_manifest(dir / "manifest.json");
        std::map<std::string, TimeSeries> series;
        for (auto& spec : m.series) {
            const fs::path base = dir / "series" / spec.desc.id;
            Json prov;
            try {
                prov = Json::parse(io::read_file(base.string() + ".json"));
            } catch (const Json::parse_error& e) {
                fail(ErrorKind::data, base.string() + ".json: " + e.what());
            }
            series[spec.desc.id] = parse_snapshot(io::read_file(base.string() + ".csv"), prov);
        }
        return SnapshotStore(std::move(m), std::move(series));
    }

    [[nodiscard]] const SourceManifest& manifest() const { return manifest_; }

    [[nodiscard]] const TimeSeries& series(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) fail(ErrorKind::missing_data, "unknown series '" + id + "'");
        return entries_[it->second].ts;
    }

    // Span covered by the stablecoin TVL feed.
    [[nodiscard]] std::pair<Date, Date> date_range() const {
        const TimeSeries& ts = series(manifest_.macro.stablecoin_tvl);
        require(!ts.empty(), ErrorKind::missing_data, "stablecoin TVL series is empty");
        return {ts.points.front().date, ts.points.back().date};
    }

    // Assemble the inputs for date t. With `lagged`, every feed is cut at its
    // publication horizon and only values already known are used.
    [[nodiscard]] MarketSnapshot snapshot_at(Date t, bool lagged = false) const {
        MarketSnapshot s;
        s.date = t;
        s.unreg_fixed = manifest_.unreg_fixed;
        s.sent_input = manifest_.sent_input;

        for (auto& c : manifest_.stablecoins) {
            auto sup = value(c.supply_series, t, lagged);
            if (!sup || *sup <= 0) continue;  // not live on this date
            StablecoinInfo info{c.id, *sup, std::nullopt, c.mechanism, c.backing_token};
            if (c.price_series) info.price = value(*c.price_series, t, lagged);
            s.stablecoins.push_back(std::move(info));
        }
        for (auto& b : manifest_.backing_tokens) {
            BackingTokenMetrics bm;
            if (b.volatility_series) bm.volatility_30d_pct = value(*b.volatility_series, t, lagged);
            if (b.growth_series) bm.supply_growth_30d_pct = value(*b.growth_series, t, lagged);
            if (b.ratio_series) bm.backing_ratio = value(*b.ratio_series, t, lagged);
            s.backing_token_metrics[b.id] = bm;
        }
        {
            const Entry& e = entry(manifest_.macro.stablecoin_tvl);
            auto idx = locate(e, t, lagged);
            if (!idx) fail(ErrorKind::missing_data, "stablecoin TVL unavailable on " + format_date(t));
            s.stablecoin_tvl_current = e.ts.points[*idx].value;
            s.stablecoin_tvl_historical_max = e.prefix_max[*idx];
        }
        {
            const Entry& e = entry(manifest_.macro.total_tvl);
            if (auto idx = locate(e, t, lagged)) {
                const Date end = e.ts.points[*idx].date;
                std::size_t i = *idx + 1;
                while (i > 0 && s.tvl_history.size() < kTvlHistoryDays &&
                       days_between(e.ts.points[i - 1].date, end) < long(kTvlHistoryDays)) {
                    s.tvl_history.push_back(e.ts.points[i - 1].value);
                    --i;
                }
                std::reverse(s.tvl_history.begin(), s.tvl_history.end());
            }
        }
        for (auto& p : manifest_.protocols) {
            const Entry& e = entry(p.tvl_series);
            auto idx = locate(e, t, lagged);
            if (!idx) continue;
            const Observation& cur = e.ts.points[*idx];
            double chg = 0.0;
            if (*idx > 0) {
                const Observation& prev = e.ts.points[*idx - 1];
                if (days_between(prev.date, cur.date) == 1 && prev.value > 0) chg = (cur.value / prev.value - 1.0) * 100.0;
            }
            s.protocols.push_back({p.id, cur.value, p.category, p.audit_count, chg});
        }
        auto need = [&](const std::string& id, const char* what) {
            auto v = value(id, t, lagged);
            if (!v) fail(ErrorKind::missing_data, std::string(what) + " unavailable on " + format_date(t));
            return *v;
        };
        s.treasury_10y = need(manifest_.macro.treasury_10y, "10y Treasury yield");
        s.vix = need(manifest_.macro.vix, "VIX");
        s.spread_10y_2y = need(manifest_.macro.spread_10y_2y, "10y-2y spread");
        if (manifest_.macro.btc_spy_corr_30d) s.btc_spy_corr_30d = value(*manifest_.macro.btc_spy_corr_30d, t, lagged);
        if (manifest_.macro.bridge_count) s.bridge_count = need(*manifest_.macro.bridge_count, "bridge count");
        s.validate();
        return s;
    }

private:
    struct Entry {
        TimeSeries ts;
        std::vector<double> prefix_max;
    };

    void add(TimeSeries ts) {
        Entry e;
        e.prefix_max.reserve(ts.points.size());
        double m = -std::numeric_limits<double>::infinity();
        for (auto& p : ts.points) {
            m = std::max(m, p.value);
            e.prefix_max.push_back(m);
        }
        e.ts = std::move(ts);
        index_[e.ts.desc.id] = entries_.size();
        entries_.push_back(std::move(e));
    }

    [[nodiscard]] const Entry& entry(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) fail(ErrorKind::missing_data, "unknown series '" + id + "'");
        return entries_[it->second];
    }

    // Index of the observation that stands for date t, if any.
    [[nodiscard]] static std::optional<std::size_t> locate(const Entry& e, Date t, bool lagged) {
        const auto& pts = e.ts.points;
        const Date cutoff = lagged ? availability_cutoff(e.ts.desc.lag, t) : t;
        auto it = std::upper_bound(pts.begin(), pts.end(), cutoff, [](Date x, const Observation& o) { return x < o.date; });
        if (it == pts.begin()) return std::nullopt;
        std::size_t i = std::size_t(it - pts.begin()) - 1;
        if (e.ts.desc.frequency == Frequency::monthly) return i;
        // a feed that stopped printing stays usable for kMaxStaleDays in both modes
        if (!lagged) return days_between(pts[i].date, t) > kMaxStaleDays ? std::nullopt : std::optional<std::size_t>(i);
        // interpolated values past the last real print lean on a later print
        while (pts[i].filled == FillKind::interpolated) {
            if (i == 0) return std::nullopt;
            --i;
        }
        if (days_between(pts[i].date, cutoff) > kMaxStaleDays) return std::nullopt;
        return i;
    }

    [[nodiscard]] std::optional<double> value(const std::string& id, Date t, bool lagged) const {
        const Entry& e = entry(id);
        auto i = locate(e, t, lagged);
        if (!i) return std::nullopt;
        return e.ts.points[*i].value;
    }

    SourceManifest manifest_;
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace asri
