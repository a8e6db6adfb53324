#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asri/core/date.hpp"
#include "asri/core/error.hpp"

namespace asri {

enum class Mechanism { fiat, algorithmic, crypto_backed };

inline std::string to_string(Mechanism m) {
    switch (m) {
        case Mechanism::fiat: return "fiat";
        case Mechanism::algorithmic: return "algorithmic";
        case Mechanism::crypto_backed: return "crypto_backed";
    }
    return "fiat";
}

inline Mechanism parse_mechanism(std::string_view s) {
    if (s == "fiat") return Mechanism::fiat;
    if (s == "algorithmic") return Mechanism::algorithmic;
    if (s == "crypto_backed") return Mechanism::crypto_backed;
    fail(ErrorKind::data, "unknown stablecoin mechanism '" + std::string(s) + "'");
}

struct StablecoinInfo {
    std::string id;
    double supply = 0.0;  // circulating, USD
    std::optional<double> price;
    Mechanism mechanism = Mechanism::fiat;
    std::optional<std::string> backing_token;
};

struct ProtocolInfo {
    std::string id;
    double tvl = 0.0;
    std::string category;
    int audit_count = 0;
    double change_1d = 0.0;  // percent
};

struct BackingTokenMetrics {
    std::optional<double> volatility_30d_pct;
    std::optional<double> supply_growth_30d_pct;
    std::optional<double> backing_ratio;
};

// Everything the sub-index formulas read for one date.
struct MarketSnapshot {
    Date date{};
    std::vector<StablecoinInfo> stablecoins;
    double stablecoin_tvl_current = 0.0;
    double stablecoin_tvl_historical_max = 0.0;
    std::vector<double> tvl_history;  // trailing DeFi TVL, oldest first, at most 30 values
    std::vector<ProtocolInfo> protocols;
    std::optional<double> bridge_count;
    std::optional<double> treasury_10y;
    std::optional<double> vix;
    std::optional<double> spread_10y_2y;
    std::optional<double> btc_spy_corr_30d;
    std::map<std::string, BackingTokenMetrics> backing_token_metrics;
    double sent_input = 50.0;
    double unreg_fixed = 35.0;

    void validate() const {
        for (auto& s : stablecoins) {
            require(std::isfinite(s.supply) && s.supply >= 0, ErrorKind::data, "stablecoin " + s.id + ": bad supply");
            if (s.price) require(std::isfinite(*s.price) && *s.price >= 0, ErrorKind::data, "stablecoin " + s.id + ": bad price");
        }
        for (auto& p : protocols) {
            require(std::isfinite(p.tvl) && p.tvl >= 0, ErrorKind::data, "protocol " + p.id + ": bad TVL");
            require(p.audit_count >= 0, ErrorKind::data, "protocol " + p.id + ": negative audit count");
        }
        require(stablecoin_tvl_current >= 0 && stablecoin_tvl_historical_max >= stablecoin_tvl_current,
                ErrorKind::data, "stablecoin TVL above its historical maximum");
        if (bridge_count) require(*bridge_count >= 0, ErrorKind::data, "negative bridge count");
    }
};

}  // namespace asri
