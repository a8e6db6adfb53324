#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/core/error.hpp"
#include "asri/core/stats.hpp"
#include "asri/market_snapshot.hpp"

namespace asri {

using Json = nlohmann::json;

// One term of a sub-index: score = sum(weight * mapped_score).
struct Component {
    std::string name;
    double raw_input = 0.0;
    double mapped_score = 0.0;
    double weight = 0.0;
};

struct SubIndexValue {
    double score = 0.0;
    std::vector<Component> components;
    std::vector<std::string> flags;

    [[nodiscard]] double recomposed() const {
        double s = 0.0;
        for (auto& c : components) s += c.weight * c.mapped_score;
        return s;
    }

    [[nodiscard]] Json to_json() const {
        Json comps = Json::array();
        for (auto& c : components)
            comps.push_back({{"name", c.name}, {"raw_input", c.raw_input}, {"mapped_score", c.mapped_score}, {"weight", c.weight}});
        return {{"score", score}, {"components", comps}, {"flags", flags}};
    }
};

inline double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }
inline double clip100(double x) { return clip(x, 0.0, 100.0); }

// Linear map of [lo, hi] onto [0, 1], clipped.
inline double normalize(double x, double lo, double hi) {
    require(hi > lo, ErrorKind::parameter, "normalize: upper bound must exceed lower bound");
    return clip((x - lo) / (hi - lo), 0.0, 1.0);
}

// Herfindahl index on the 0..10000 scale, mapped to risk points.
inline double hhi_risk(double hhi) {
    require(hhi >= 0.0 && hhi <= 10000.0, ErrorKind::domain, "HHI outside [0, 10000]");
    if (hhi < 1500.0) return hhi / 1500.0 * 30.0;
    if (hhi < 2500.0) return 30.0 + (hhi - 1500.0) / 1000.0 * 30.0;
    if (hhi < 5000.0) return 60.0 + (hhi - 2500.0) / 2500.0 * 30.0;
    return 90.0 + (hhi - 5000.0) / 5000.0 * 10.0;
}

inline double herfindahl(const std::vector<double>& amounts) {
    double total = 0.0;
    for (double a : amounts) total += a;
    require(total > 0.0, ErrorKind::missing_data, "concentration of an empty or zero-sized market");
    double h = 0.0;
    for (double a : amounts) {
        const double share = a / total * 100.0;
        h += share * share;
    }
    return std::min(h, 10000.0);
}

// Backing ratio 1.5 -> 10 points, 0.8 -> 90 points, linear and clipped.
inline double backing_ratio_score(double ratio) { return clip100(10.0 + (1.5 - ratio) / 0.7 * 80.0); }

// Negative 10y-2y spread (inversion) raises risk above 50; positive lowers it.
inline double yield_curve_score(double spread) {
    if (spread < 0) return clip100(normalize(std::abs(spread), 0.0, 2.0) * 100.0 + 50.0);
    return std::max(0.0, 50.0 - normalize(spread, 0.0, 2.0) * 50.0);
}

inline double multi_issuer_score(int n_significant) {
    if (n_significant < 3) return 70.0;
    if (n_significant < 10) return 30.0;
    return clip100(50.0 + 2.0 * double(n_significant - 10));
}

inline constexpr double kSignificantSupplyUsd = 1e9;
inline constexpr double kPegDeviationFull = 0.05;
inline constexpr double kAlgoBlendShare = 0.4;

namespace detail {
inline bool iequals(const std::string& a, const char* b) {
    std::size_t n = std::char_traits<char>::length(b);
    if (a.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
    return true;
}

inline double total_supply(const MarketSnapshot& s) {
    double t = 0.0;
    for (auto& c : s.stablecoins) t += c.supply;
    return t;
}

inline double audited_share(const MarketSnapshot& s) {
    std::size_t live = 0, audited = 0;
    for (auto& p : s.protocols)
        if (p.tvl > 0) {
            ++live;
            if (p.audit_count > 0) ++audited;
        }
    require(live > 0, ErrorKind::missing_data, "no protocol with positive TVL");
    return double(audited) / double(live);
}

inline double category_share_pct(const MarketSnapshot& s, const char* category) {
    double total = 0.0, cat = 0.0;
    for (auto& p : s.protocols) {
        total += p.tvl;
        if (iequals(p.category, category)) cat += p.tvl;
    }
    require(total > 0, ErrorKind::missing_data, "protocol TVL sums to zero");
    return cat / total * 100.0;
}

inline SubIndexValue finish(SubIndexValue v) {
    v.score = v.recomposed();
    return v;
}
}  // namespace detail

// Stablecoin concentration risk (before any algorithmic adjustment).
inline SubIndexValue compute_scr(const MarketSnapshot& s) {
    require(!s.stablecoins.empty(), ErrorKind::missing_data, "SCR: no stablecoin supplies");
    const double total = detail::total_supply(s);
    require(total > 0, ErrorKind::missing_data, "SCR: total stablecoin supply is zero");
    require(s.stablecoin_tvl_historical_max > 0, ErrorKind::missing_data, "SCR: no stablecoin TVL history");
    require(s.treasury_10y.has_value(), ErrorKind::missing_data, "SCR: 10y Treasury yield missing");

    SubIndexValue v;
    const double drop = 1.0 - s.stablecoin_tvl_current / s.stablecoin_tvl_historical_max;
    v.components.push_back({"tvl_drawdown", drop, normalize(drop, 0.0, 0.5) * 100.0, 0.4});
    v.components.push_back({"treasury_rate", *s.treasury_10y, normalize(*s.treasury_10y, 2.0, 6.0) * 100.0, 0.3});

    std::vector<double> supplies;
    for (auto& c : s.stablecoins) supplies.push_back(c.supply);
    const double hhi = herfindahl(supplies);
    v.components.push_back({"supply_hhi", hhi, hhi_risk(hhi), 0.2});

    double dev = 0.0, priced = 0.0;
    for (auto& c : s.stablecoins)
        if (c.price) {
            dev += std::abs(*c.price - 1.0) * c.supply;
            priced += c.supply;
        }
    if (priced > 0) {
        dev /= priced;
        v.components.push_back({"peg_deviation", dev, clip100(dev / kPegDeviationFull * 100.0), 0.1});
    } else {
        v.components.push_back({"peg_deviation", 0.0, 50.0, 0.1});
        v.flags.push_back("peg_prices_missing");
    }
    return detail::finish(std::move(v));
}

// Share of supply in algorithmic or crypto-backed designs.
inline double algorithmic_share(const MarketSnapshot& s) {
    const double total = detail::total_supply(s);
    if (total <= 0) return 0.0;
    double q = 0.0;
    for (auto& c : s.stablecoins)
        if (c.mechanism != Mechanism::fiat) q += c.supply;
    return q / total;
}

inline SubIndexValue compute_algo_risk(const MarketSnapshot& s) {
    SubIndexValue v;
    double qsupply = 0.0;
    for (auto& c : s.stablecoins)
        if (c.mechanism != Mechanism::fiat) qsupply += c.supply;
    if (qsupply <= 0) {
        v.flags.push_back("no_algorithmic_exposure");
        return v;
    }
    // supply-weighted averages across qualifying coins
    double ratio_raw = 0, ratio_w = 0, ratio_score = 0;
    double vol_raw = 0, vol_w = 0, vol_score = 0;
    double dil_raw = 0, dil_w = 0, dil_score = 0;
    bool ratio_missing = false, vol_missing = false, dil_missing = false;
    for (auto& c : s.stablecoins) {
        if (c.mechanism == Mechanism::fiat) continue;
        const double w = c.supply / qsupply;
        const BackingTokenMetrics* m = nullptr;
        if (c.backing_token) {
            auto it = s.backing_token_metrics.find(*c.backing_token);
            if (it != s.backing_token_metrics.end()) m = &it->second;
        }
        if (m && m->backing_ratio) {
            ratio_raw += w * *m->backing_ratio;
            ratio_w += w;
            ratio_score += w * backing_ratio_score(*m->backing_ratio);
        } else {
            ratio_missing = true;
            ratio_score += w * 50.0;
        }
        if (m && m->volatility_30d_pct) {
            vol_raw += w * *m->volatility_30d_pct;
            vol_w += w;
            vol_score += w * normalize(*m->volatility_30d_pct, 40.0, 120.0) * 100.0;
        } else {
            vol_missing = true;
            vol_score += w * 50.0;
        }
        if (m && m->supply_growth_30d_pct) {
            dil_raw += w * *m->supply_growth_30d_pct;
            dil_w += w;
            dil_score += w * normalize(*m->supply_growth_30d_pct, 0.0, 50.0) * 100.0;
        } else {
            dil_missing = true;
            dil_score += w * 50.0;
        }
    }
    const double share_pct = qsupply / detail::total_supply(s) * 100.0;
    v.components.push_back({"backing_ratio", ratio_w > 0 ? ratio_raw / ratio_w : 0.0, ratio_score, 0.35});
    v.components.push_back({"collateral_volatility", vol_w > 0 ? vol_raw / vol_w : 0.0, vol_score, 0.30});
    v.components.push_back({"supply_dilution", dil_w > 0 ? dil_raw / dil_w : 0.0, dil_score, 0.20});
    v.components.push_back({"algorithmic_concentration", share_pct, normalize(share_pct, 0.0, 10.0) * 100.0, 0.15});
    if (ratio_missing) v.flags.push_back("backing_ratio_missing");
    if (vol_missing) v.flags.push_back("collateral_volatility_missing");
    if (dil_missing) v.flags.push_back("supply_dilution_missing");
    return detail::finish(std::move(v));
}

inline double blend_scr_adjusted(double base, double algo, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::parameter, "blend share outside [0, 1]");
    return (1.0 - alpha) * base + alpha * ((1.0 - kAlgoBlendShare) * base + kAlgoBlendShare * algo);
}

// SCR with the algorithmic-stablecoin blend folded into the component weights.
inline SubIndexValue compute_scr_adjusted(const MarketSnapshot& s) {
    SubIndexValue base = compute_scr(s);
    const double alpha = algorithmic_share(s);
    if (alpha <= 0) return base;
    SubIndexValue algo = compute_algo_risk(s);
    SubIndexValue v;
    const double keep = 1.0 - kAlgoBlendShare * alpha;
    for (auto c : base.components) {
        c.weight *= keep;
        v.components.push_back(c);
    }
    v.components.push_back({"algo_risk", alpha, algo.score, kAlgoBlendShare * alpha});
    v.flags = base.flags;
    v.flags.insert(v.flags.end(), algo.flags.begin(), algo.flags.end());
    v.flags.push_back("algo_adjusted");
    return detail::finish(std::move(v));
}

inline constexpr double kDefaultTvlVolScore = 30.0;

inline SubIndexValue compute_dlr(const MarketSnapshot& s) {
    require(!s.protocols.empty(), ErrorKind::missing_data, "DLR: empty protocol list");
    SubIndexValue v;

    std::vector<const ProtocolInfo*> sorted;
    for (auto& p : s.protocols) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
        if (a->tvl != b->tvl) return a->tvl > b->tvl;
        return a->id < b->id;
    });
    std::vector<double> top;
    for (std::size_t i = 0; i < sorted.size() && i < 10; ++i) top.push_back(sorted[i]->tvl);
    const double hhi = herfindahl(top);
    v.components.push_back({"protocol_concentration", hhi, hhi_risk(hhi), 0.35});

    bool vol_ok = s.tvl_history.size() >= 2;
    double cv = 0.0;
    if (vol_ok) {
        const double m = stats::mean(s.tvl_history);
        if (m > 0) cv = stats::stddev(s.tvl_history) / m;
        else vol_ok = false;
    }
    if (vol_ok) {
        v.components.push_back({"tvl_volatility", cv, normalize(cv, 0.0, 0.2) * 100.0, 0.25});
    } else {
        v.components.push_back({"tvl_volatility", 0.0, kDefaultTvlVolScore, 0.25});
        v.flags.push_back("tvl_history_insufficient");
    }

    const double audited = detail::audited_share(s);
    v.components.push_back({"smart_contract", audited, (1.0 - audited) * 100.0, 0.20});

    double flash = 0.0;
    for (auto& p : s.protocols) flash += std::abs(p.change_1d);
    flash /= double(s.protocols.size());
    v.components.push_back({"flash_loan_proxy", flash, normalize(flash, 0.0, 20.0) * 100.0, 0.10});

    const double lend = detail::category_share_pct(s, "lending");
    v.components.push_back({"leverage", lend, normalize(lend, 0.0, 30.0) * 100.0, 0.10});
    return detail::finish(std::move(v));
}

inline SubIndexValue compute_cr(const MarketSnapshot& s) {
    require(s.treasury_10y && s.vix && s.spread_10y_2y, ErrorKind::missing_data, "CR: rate, VIX or spread missing");
    SubIndexValue v;
    const double rwa = detail::category_share_pct(s, "rwa");
    v.components.push_back({"rwa_share", rwa, normalize(rwa, 0.0, 10.0) * 100.0, 0.30});
    const double bank = (0.6 * normalize(*s.treasury_10y, 2.0, 6.0) + 0.4 * normalize(*s.vix, 12.0, 40.0)) * 100.0;
    v.components.push_back({"bank_exposure", *s.vix, bank, 0.25});
    v.components.push_back({"tradfi_linkage", *s.spread_10y_2y, yield_curve_score(*s.spread_10y_2y), 0.20});
    if (s.btc_spy_corr_30d) {
        v.components.push_back({"crypto_equity_corr", *s.btc_spy_corr_30d, clip100(std::abs(*s.btc_spy_corr_30d) * 100.0), 0.15});
    } else {
        v.components.push_back({"crypto_equity_corr", 0.5, 50.0, 0.15});
        v.flags.push_back("correlation_missing");
    }
    if (s.bridge_count) {
        v.components.push_back({"bridge_exposure", *s.bridge_count, normalize(*s.bridge_count, 0.0, 150.0) * 100.0, 0.10});
    } else {
        v.components.push_back({"bridge_exposure", 0.0, 50.0, 0.10});
        v.flags.push_back("bridge_count_missing");
    }
    return detail::finish(std::move(v));
}

inline SubIndexValue compute_or(const MarketSnapshot& s) {
    require(!s.stablecoins.empty(), ErrorKind::missing_data, "OR: no stablecoin supplies");
    const double total = detail::total_supply(s);
    require(total > 0, ErrorKind::missing_data, "OR: total stablecoin supply is zero");
    SubIndexValue v;
    v.components.push_back({"regulatory_opacity", s.unreg_fixed, clip100(s.unreg_fixed), 0.25});

    int n_sig = 0;
    std::vector<double> sup;
    for (auto& c : s.stablecoins) {
        if (c.supply > kSignificantSupplyUsd) ++n_sig;
        sup.push_back(c.supply);
    }
    v.components.push_back({"multi_issuer", double(n_sig), multi_issuer_score(n_sig), 0.25});

    std::sort(sup.begin(), sup.end(), std::greater<>());
    const double top2 = (sup[0] + (sup.size() > 1 ? sup[1] : 0.0)) / total * 100.0;
    v.components.push_back({"custody_concentration", top2, normalize(top2, 50.0, 100.0) * 100.0, 0.20});
    v.components.push_back({"sentiment", s.sent_input, clip100(s.sent_input), 0.15});

    const double trans = detail::audited_share(s) * 100.0;
    v.components.push_back({"opacity_transparency", trans, 100.0 - trans, 0.15});
    return detail::finish(std::move(v));
}

enum class SubIndex : std::size_t { scr = 0, dlr = 1, cr = 2, opacity = 3 };
inline constexpr std::array<const char*, 4> kSubIndexNames{"scr", "dlr", "cr", "or"};

struct SubIndexBreakdown {
    std::array<SubIndexValue, 4> parts;

    [[nodiscard]] const SubIndexValue& operator[](SubIndex i) const { return parts[std::size_t(i)]; }
    [[nodiscard]] std::array<double, 4> scores() const {
        return {parts[0].score, parts[1].score, parts[2].score, parts[3].score};
    }
    [[nodiscard]] Json to_json() const {
        Json j;
        for (std::size_t i = 0; i < 4; ++i) j[kSubIndexNames[i]] = parts[i].to_json();
        return j;
    }
};

inline SubIndexBreakdown compute_subindices(const MarketSnapshot& s, bool algo_adjust = true) {
    SubIndexBreakdown b;
    b.parts[0] = algo_adjust ? compute_scr_adjusted(s) : compute_scr(s);
    b.parts[1] = compute_dlr(s);
    b.parts[2] = compute_cr(s);
    b.parts[3] = compute_or(s);
    return b;
}

}  // namespace asri
