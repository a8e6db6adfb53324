#pragma once
// Generators shared by the unit and acceptance tests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "asri/asri.hpp"
#include "asri/core/rng.hpp"

namespace asri::testing {

namespace fs = std::filesystem;

// Fully populated snapshot with four fiat coins above the significance cut.
inline MarketSnapshot random_snapshot(Rng& rng) {
    MarketSnapshot s;
    s.date = make_date(2023, 1, 1);
    const char* coins[] = {"usdt", "usdc", "dai", "busd"};
    for (auto* c : coins) s.stablecoins.push_back({c, rng.uniform(2e9, 80e9), 1.0 + rng.uniform(-0.01, 0.01), Mechanism::fiat, {}});
    s.stablecoin_tvl_historical_max = 180e9;
    s.stablecoin_tvl_current = rng.uniform(90e9, 180e9);
    for (int i = 0; i < 30; ++i) s.tvl_history.push_back(rng.uniform(40e9, 60e9));
    const char* cats[] = {"Lending", "Dexes", "CDP", "Liquid Staking", "RWA", "Yield"};
    for (int i = 0; i < 12; ++i)
        s.protocols.push_back({"p" + std::to_string(i), rng.uniform(0.1e9, 10e9), cats[i % 6], int(rng.below(4)),
                               rng.uniform(-8.0, 8.0)});
    s.bridge_count = rng.uniform(10, 140);
    s.treasury_10y = rng.uniform(1.5, 5.0);
    s.vix = rng.uniform(12, 40);
    s.spread_10y_2y = rng.uniform(-1.0, 1.5);
    s.btc_spy_corr_30d = rng.uniform(-0.5, 0.9);
    return s;
}

inline std::vector<Date> daily_dates(Date first, std::size_t n) {
    std::vector<Date> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(first + Days{long(i)});
    return d;
}

// Baseline N(mu, sd^2) with a level shift over the event window around `onset`.
inline TimeSeries shifted_series(Rng& rng, Date onset, double mu, double sd, double shift, int ev_lo = -30, int ev_hi = 10) {
    const Date first = onset - Days{120};
    const auto dates = daily_dates(first, 150);
    std::vector<double> v;
    for (auto d : dates) {
        const long off = days_between(onset, d);
        v.push_back(rng.normal(mu, sd) + (off >= ev_lo && off <= ev_hi ? shift : 0.0));
    }
    return make_series("synthetic", dates, v);
}

inline std::vector<double> ar1(Rng& rng, std::size_t n, double phi, std::size_t burn = 100) {
    std::vector<double> y;
    double x = 0.0;
    for (std::size_t i = 0; i < n + burn; ++i) {
        x = phi * x + rng.normal();
        if (i >= burn) y.push_back(x);
    }
    return y;
}

inline std::vector<double> random_walk(Rng& rng, std::size_t n) {
    std::vector<double> y;
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) y.push_back(x += rng.normal());
    return y;
}

struct RegimeData {
    linalg::Matrix x;
    std::vector<std::size_t> states;
};

// Markov chain with equal persistence; state means 5 sd apart on every axis.
inline RegimeData regime_data(Rng& rng, std::size_t n, std::size_t k = 3, std::size_t d = 4, double persistence = 0.98,
                              double separation = 5.0) {
    RegimeData r{linalg::Matrix(n, d), {}};
    std::size_t s = rng.below(k);
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0 && rng.uniform() >= persistence) {
            std::size_t next = rng.below(k - 1);
            s = next >= s ? next + 1 : next;
        }
        r.states.push_back(s);
        for (std::size_t j = 0; j < d; ++j) r.x(t, j) = separation * double(s) + rng.normal();
    }
    return r;
}

// Fraction of agreement after the best relabelling of `est` onto `truth`.
inline double aligned_accuracy(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& est, std::size_t k) {
    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    double best = 0.0;
    do {
        std::size_t hit = 0;
        for (std::size_t t = 0; t < truth.size(); ++t) hit += perm[est[t]] == truth[t] ? 1 : 0;
        best = std::max(best, double(hit) / double(truth.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::vector<std::size_t> argmax_rows(const linalg::Matrix& g) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < g.rows(); ++t) {
        std::size_t b = 0;
        for (std::size_t s = 1; s < g.cols(); ++s)
            if (g(t, s) > g(t, b)) b = s;
        out.push_back(b);
    }
    return out;
}

inline fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("asri_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Copy of the bundled manifest with every raw series cut after `last`.
inline fs::path truncated_bundle(const fs::path& bundle, Date last, const std::string& name) {
    const fs::path out = scratch_dir(name);
    fs::copy(bundle, out, fs::copy_options::recursive);
    for (auto& e : fs::directory_iterator(out / "raw")) {
        const auto lines = io::read_lines(e.path());
        std::string kept = lines.empty() ? std::string() : lines[0] + "\n";
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].size() < 10) continue;
            if (parse_date(lines[i].substr(0, 10)) <= last) kept += lines[i] + "\n";
        }
        io::write_file(e.path(), kept);
    }
    return out;
}

}  // namespace asri::testing
