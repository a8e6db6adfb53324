// Writes the frozen bundled dataset: raw daily feeds plus a source manifest.
//
// Live feeds are not reachable from the build environment, so the feeds are a
// deterministic reconstruction. Macro series, stablecoin supplies, prices and
// protocol TVLs follow hand-set anchor paths with seeded noise. Four feeds are
// then solved day by day (USDT supply, stablecoin TVL, Lido TVL, and the
// correlation/bridge pair) so that each sub-index sits at a designed fraction
// of the range those feeds can reach on that day.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asri/asri.hpp"

namespace fs = std::filesystem;
using namespace asri;

namespace {

const Date kStart = make_date(2021, 1, 1);
const Date kEnd = make_date(2026, 1, 15);
const std::size_t kDays = std::size_t(days_between(kStart, kEnd) + 1);

Date day(std::size_t i) { return kStart + Days{long(i)}; }
long idx(Date d) { return days_between(kStart, d); }

struct Anchor {
    Date d;
    double v;
};

Anchor A(int y, int m, int dd, double v) { return {make_date(y, m, dd), v}; }

double interp(const std::vector<Anchor>& a, Date d, bool log_scale = false) {
    if (d <= a.front().d) return a.front().v;
    if (d >= a.back().d) return a.back().v;
    for (std::size_t i = 1; i < a.size(); ++i)
        if (d <= a[i].d) {
            const double f = double(days_between(a[i - 1].d, d)) / double(days_between(a[i - 1].d, a[i].d));
            if (log_scale) return std::exp(std::log(a[i - 1].v) + f * (std::log(a[i].v) - std::log(a[i - 1].v)));
            return a[i - 1].v + f * (a[i].v - a[i - 1].v);
        }
    return a.back().v;
}

// AR(1) noise with stationary standard deviation `sd`.
std::vector<double> ar_noise(Rng& rng, double phi, double sd) {
    std::vector<double> e(kDays);
    double x = rng.normal() * sd;
    const double s = sd * std::sqrt(1 - phi * phi);
    for (auto& v : e) {
        v = x;
        x = phi * x + s * rng.normal();
    }
    return e;
}

using Daily = std::vector<std::optional<double>>;

// Log-interpolated path with multiplicative noise; empty outside [first, last].
Daily level_path(Rng& rng, const std::vector<Anchor>& a, double rel_sd, double phi = 0.9,
                 std::optional<Date> first = {}, std::optional<Date> last = {}) {
    auto e = ar_noise(rng, phi, rel_sd);
    Daily out(kDays);
    for (std::size_t i = 0; i < kDays; ++i) {
        const Date d = day(i);
        if ((first && d < *first) || (last && d > *last)) continue;
        out[i] = interp(a, d, true) * std::exp(e[i]);
    }
    return out;
}

// Weekday-only macro series; weekend days repeat Friday for the solver.
Daily weekday_path(Rng& rng, const std::vector<Anchor>& a, double sd, double phi, double lo, double hi) {
    auto e = ar_noise(rng, phi, sd);
    Daily out(kDays);
    double last = 0;
    for (std::size_t i = 0; i < kDays; ++i) {
        if (!is_weekend(day(i))) last = std::clamp(interp(a, day(i)) + e[i], lo, hi);
        out[i] = last;
    }
    return out;
}

// Rise from `x0` to a peak at `xp` (days from onset), then decay.
double shape(long x, long x0, long xp, double q, double tau) {
    if (x < x0) return 0.0;
    if (x <= xp) return std::pow(double(x - x0) / double(xp - x0), q);
    return std::exp(-double(x - xp) / tau);
}

struct Episode {
    Date onset;
    long x0, xp;
    double q, tau;
    std::array<double, 4> load;  // SCR, DLR, CR, OR stress fractions
    double rho;                  // common innovation share around the episode
    long rho_from, rho_to;
};

struct Coin {
    std::string id;
    Mechanism mech;
    std::optional<std::string> backing;
    Daily supply, price;
};

struct Protocol {
    std::string id, category;
    int audits;
    Daily tvl;
};

struct Token {
    std::string id;
    Daily vol, growth, ratio;
};

// Root of f(x) = target on [lo, hi] for continuous f; clamps when out of range.
double solve(const std::function<double(double)>& f, double lo, double hi, double target, bool& clamped) {
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo) - target, fhi = f(hi) - target;
    clamped = false;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) {
        clamped = true;
        return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (fm == 0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string raw_csv(const Daily& v, bool weekdays_only = false) {
    std::string s = "date,value\n";
    for (std::size_t i = 0; i < kDays; ++i) {
        if (!v[i]) continue;
        if (weekdays_only && is_weekend(day(i))) continue;
        s += format_date(day(i)) + "," + io::shortest(*v[i]) + "\n";
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the bundled synthetic dataset"};
    std::string out_dir = "data/bundled";
    std::uint64_t seed = 20210101;
    bool verify = false;
    app.add_option("-o,--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Noise seed");
    app.add_flag("--verify", verify, "Ingest the result and check the solved sub-indices");
    CLI11_PARSE(app, argc, argv);

    Rng rng(seed);
    const Date terra = make_date(2022, 5, 12), celsius = make_date(2022, 6, 17), ftx = make_date(2022, 11, 11),
               svb = make_date(2023, 3, 11);

    // ---- macro (weekday) --------------------------------------------------
    Daily dgs10 = weekday_path(rng,
                               {A(2021, 1, 1, 0.93), A(2021, 3, 19, 1.72), A(2021, 8, 3, 1.17), A(2021, 12, 31, 1.52),
                                A(2022, 5, 6, 3.12), A(2022, 6, 14, 3.48), A(2022, 8, 1, 2.60), A(2022, 10, 21, 4.22),
                                A(2022, 11, 11, 3.82), A(2023, 1, 18, 3.37), A(2023, 3, 8, 3.98), A(2023, 3, 17, 3.43),
                                A(2023, 10, 19, 4.98), A(2023, 12, 27, 3.79), A(2024, 4, 25, 4.70), A(2024, 9, 16, 3.62),
                                A(2025, 1, 14, 4.79), A(2025, 4, 4, 4.01), A(2025, 5, 21, 4.60), A(2025, 10, 16, 3.97),
                                A(2026, 1, 15, 4.15)},
                               0.06, 0.9, 0.3, 6.5);
    Daily vix = weekday_path(rng,
                             {A(2021, 1, 1, 22), A(2021, 1, 27, 37), A(2021, 2, 15, 20), A(2021, 5, 12, 27), A(2021, 7, 1, 16),
                              A(2021, 12, 1, 31), A(2021, 12, 31, 17), A(2022, 3, 7, 36), A(2022, 4, 4, 20), A(2022, 5, 9, 34),
                              A(2022, 6, 13, 34), A(2022, 8, 15, 19), A(2022, 10, 12, 33), A(2022, 11, 11, 23),
                              A(2022, 12, 31, 21), A(2023, 3, 13, 26), A(2023, 6, 1, 15), A(2023, 10, 20, 21),
                              A(2024, 3, 1, 13), A(2024, 8, 5, 38), A(2024, 8, 20, 16), A(2024, 12, 18, 27), A(2025, 1, 10, 17),
                              A(2025, 4, 8, 52), A(2025, 5, 15, 18), A(2025, 10, 10, 21), A(2026, 1, 15, 15)},
                             1.2, 0.8, 9.0, 80.0);
    Daily t10y2y = weekday_path(rng,
                                {A(2021, 1, 1, 0.80), A(2021, 3, 31, 1.58), A(2021, 12, 31, 0.79), A(2022, 4, 1, -0.05),
                                 A(2022, 5, 4, 0.30), A(2022, 7, 6, -0.05), A(2022, 11, 11, -0.55), A(2023, 3, 8, -1.07),
                                 A(2023, 3, 17, -0.42), A(2023, 7, 3, -1.06), A(2023, 10, 24, -0.16), A(2024, 6, 1, -0.40),
                                 A(2024, 9, 6, 0.05), A(2025, 1, 14, 0.38), A(2025, 4, 8, 0.56), A(2026, 1, 15, 0.62)},
                                0.04, 0.9, -1.5, 2.0);

    // ---- stablecoins ----------------------------------------------------------
    std::vector<Coin> coins;
    auto coin = [&](std::string id, Mechanism m, std::optional<std::string> backing, std::vector<Anchor> sup,
                    std::optional<Date> first = {}, std::optional<Date> last = {}) {
        Coin c{std::move(id), m, std::move(backing), level_path(rng, sup, 0.01, 0.95, first, last), {}};
        auto pe = ar_noise(rng, 0.5, 0.0008);
        c.price.resize(kDays);
        for (std::size_t i = 0; i < kDays; ++i)
            if (c.supply[i]) c.price[i] = 1.0 + pe[i];
        coins.push_back(std::move(c));
        return coins.size() - 1;
    };
    // usdt is solved; this is its reference path
    const std::size_t usdt = coin("usdt", Mechanism::fiat, std::nullopt,
                                  {A(2021, 1, 1, 21e9), A(2021, 6, 1, 62e9), A(2022, 5, 10, 83e9), A(2022, 6, 30, 66e9),
                                   A(2023, 3, 31, 79e9), A(2023, 12, 31, 91e9), A(2024, 12, 31, 138e9), A(2026, 1, 15, 186e9)});
    const std::size_t usdc = coin("usdc", Mechanism::fiat, std::nullopt,
                                  {A(2021, 1, 1, 4e9), A(2021, 12, 31, 42e9), A(2022, 6, 15, 55e9), A(2022, 12, 31, 44e9),
                                   A(2023, 3, 10, 41e9), A(2023, 3, 20, 34e9), A(2023, 12, 31, 24e9), A(2024, 12, 31, 44e9),
                                   A(2026, 1, 15, 76e9)});
    coin("busd", Mechanism::fiat, std::nullopt,
         {A(2021, 1, 1, 1e9), A(2021, 12, 31, 14e9), A(2022, 11, 15, 22e9), A(2023, 2, 13, 16e9), A(2023, 6, 30, 4e9),
          A(2023, 12, 31, 0.1e9)},
         std::nullopt, make_date(2023, 12, 31));
    coin("dai", Mechanism::crypto_backed, std::string("eth"),
         {A(2021, 1, 1, 1.3e9), A(2022, 1, 15, 9.5e9), A(2022, 6, 30, 6.9e9), A(2023, 3, 15, 5.2e9), A(2023, 12, 31, 5.3e9),
          A(2024, 12, 31, 4.6e9), A(2026, 1, 15, 5.0e9)});
    const std::size_t ust = coin("ust", Mechanism::algorithmic, std::string("luna"),
                                 {A(2021, 1, 1, 0.2e9), A(2021, 12, 31, 10e9), A(2022, 5, 7, 18.7e9), A(2022, 5, 13, 11.3e9),
                                  A(2022, 5, 31, 10.0e9)},
                                 std::nullopt, make_date(2022, 5, 31));
    coin("tusd", Mechanism::fiat, std::nullopt,
         {A(2021, 1, 1, 0.3e9), A(2021, 12, 31, 1.4e9), A(2023, 6, 30, 3.1e9), A(2024, 2, 1, 1.5e9), A(2026, 1, 15, 0.5e9)});
    coin("usde", Mechanism::crypto_backed, std::string("eth"),
         {A(2024, 2, 1, 0.1e9), A(2024, 6, 30, 3.6e9), A(2025, 2, 1, 6e9), A(2025, 10, 6, 14.5e9), A(2026, 1, 15, 6.5e9)},
         make_date(2024, 2, 1));
    coin("pyusd", Mechanism::fiat, std::nullopt, {A(2023, 8, 10, 0.05e9), A(2024, 8, 1, 0.9e9), A(2026, 1, 15, 2.8e9)},
         make_date(2023, 8, 10));

    // peg events
    auto set_price = [&](std::size_t c, std::vector<Anchor> a) {
        for (std::size_t k = 0; k + 1 < a.size(); ++k)
            for (Date d = a[k].d; d <= a[k + 1].d; d += Days{1})
                if (coins[c].price[std::size_t(idx(d))]) coins[c].price[std::size_t(idx(d))] = interp(a, d);
    };
    set_price(ust, {A(2022, 5, 8, 0.995), A(2022, 5, 9, 0.92), A(2022, 5, 10, 0.68), A(2022, 5, 11, 0.45),
                    A(2022, 5, 12, 0.28), A(2022, 5, 13, 0.14), A(2022, 5, 20, 0.08), A(2022, 5, 31, 0.03)});
    set_price(usdt, {A(2022, 5, 11, 0.999), A(2022, 5, 12, 0.975), A(2022, 5, 14, 0.998)});
    set_price(usdt, {A(2022, 11, 9, 0.999), A(2022, 11, 10, 0.985), A(2022, 11, 13, 0.998)});
    set_price(usdc, {A(2023, 3, 9, 1.0), A(2023, 3, 10, 0.97), A(2023, 3, 11, 0.88), A(2023, 3, 12, 0.93),
                     A(2023, 3, 13, 0.99), A(2023, 3, 14, 0.999)});

    // ---- backing tokens ---------------------------------------------------------
    std::vector<Token> tokens;
    {
        Token luna{"luna", {}, {}, {}};
        const Date end = make_date(2022, 5, 31);
        auto vol = ar_noise(rng, 0.95, 0.12), g = ar_noise(rng, 0.9, 1.5), r = ar_noise(rng, 0.95, 0.08);
        luna.vol.resize(kDays);
        luna.growth.resize(kDays);
        luna.ratio.resize(kDays);
        for (std::size_t i = 0; i < kDays; ++i) {
            const Date d = day(i);
            if (d > end) continue;
            luna.vol[i] = interp({A(2021, 1, 1, 95), A(2021, 6, 1, 120), A(2022, 4, 30, 78), A(2022, 5, 8, 85),
                                  A(2022, 5, 12, 240), A(2022, 5, 20, 420), A(2022, 5, 31, 400)}, d) * std::exp(vol[i]);
            luna.growth[i] = std::max(-5.0, interp({A(2021, 1, 1, 1.0), A(2022, 5, 8, 0.5), A(2022, 5, 10, 30),
                                                    A(2022, 5, 12, 5000), A(2022, 5, 31, 80000)}, d) + g[i]);
            luna.ratio[i] = interp({A(2021, 1, 1, 2.6), A(2021, 12, 31, 2.2), A(2022, 4, 30, 1.65), A(2022, 5, 8, 1.45),
                                    A(2022, 5, 10, 0.60), A(2022, 5, 12, 0.05), A(2022, 5, 31, 0.01)}, d, true) *
                            std::exp(r[i]);
        }
        tokens.push_back(std::move(luna));
        Token eth{"eth", {}, {}, {}};
        auto v2 = ar_noise(rng, 0.95, 0.15), g2 = ar_noise(rng, 0.9, 0.3), r2 = ar_noise(rng, 0.97, 0.04);
        eth.vol.resize(kDays);
        eth.growth.resize(kDays);
        eth.ratio.resize(kDays);
        for (std::size_t i = 0; i < kDays; ++i) {
            const Date d = day(i);
            eth.vol[i] = interp({A(2021, 1, 1, 85), A(2021, 5, 20, 120), A(2021, 9, 1, 70), A(2022, 6, 18, 110),
                                 A(2022, 11, 15, 80), A(2023, 6, 1, 40), A(2024, 8, 6, 75), A(2025, 4, 8, 85),
                                 A(2026, 1, 15, 55)}, d) * std::exp(v2[i]);
            eth.growth[i] = interp({A(2021, 1, 1, 0.4), A(2022, 9, 15, 0.3), A(2022, 9, 16, -0.1), A(2026, 1, 15, 0.05)}, d) + g2[i];
            eth.ratio[i] = interp({A(2021, 1, 1, 1.9), A(2022, 6, 18, 1.45), A(2022, 11, 15, 1.6), A(2024, 1, 1, 1.75),
                                   A(2026, 1, 15, 1.7)}, d) * std::exp(r2[i]);
        }
        tokens.push_back(std::move(eth));
    }

    // ---- protocols --------------------------------------------------------------
    std::vector<Protocol> protos;
    auto proto = [&](std::string id, std::string cat, int audits, std::vector<Anchor> a, std::optional<Date> first = {},
                     std::optional<Date> last = {}) {
        protos.push_back({std::move(id), std::move(cat), audits, level_path(rng, a, 0.03, 0.9, first, last)});
        return protos.size() - 1;
    };
    const std::size_t lido = proto("lido", "Liquid Staking", 5,
                                   {A(2021, 1, 1, 0.6e9), A(2021, 12, 31, 14e9), A(2022, 4, 1, 20e9), A(2022, 6, 18, 5.5e9),
                                    A(2022, 11, 15, 5.8e9), A(2023, 5, 1, 12e9), A(2024, 3, 15, 34e9), A(2025, 8, 20, 38e9),
                                    A(2026, 1, 15, 27e9)});
    proto("aave", "Lending", 6,
          {A(2021, 1, 1, 2.5e9), A(2021, 10, 25, 19e9), A(2022, 4, 1, 14e9), A(2022, 6, 18, 5e9), A(2022, 11, 15, 4e9),
           A(2023, 6, 1, 5.5e9), A(2024, 6, 1, 12e9), A(2025, 8, 20, 38e9), A(2026, 1, 15, 33e9)});
    proto("compound", "Lending", 4,
          {A(2021, 1, 1, 1.9e9), A(2021, 11, 10, 12e9), A(2022, 6, 18, 3e9), A(2022, 11, 15, 1.5e9), A(2024, 6, 1, 2.5e9),
           A(2026, 1, 15, 2.2e9)});
    proto("makerdao", "CDP", 5,
          {A(2021, 1, 1, 2.8e9), A(2021, 11, 10, 17e9), A(2022, 6, 18, 8e9), A(2022, 11, 15, 6e9), A(2023, 6, 1, 5.5e9),
           A(2024, 6, 1, 8e9), A(2026, 1, 15, 6e9)});
    proto("uniswap", "Dexes", 4,
          {A(2021, 1, 1, 3e9), A(2021, 11, 10, 10e9), A(2022, 6, 18, 5e9), A(2022, 11, 15, 3.5e9), A(2024, 6, 1, 5e9),
           A(2026, 1, 15, 5e9)});
    proto("curve", "Dexes", 3,
          {A(2021, 1, 1, 1.5e9), A(2022, 1, 5, 24e9), A(2022, 6, 18, 7e9), A(2022, 11, 15, 4e9), A(2024, 1, 1, 2.5e9),
           A(2026, 1, 15, 2.3e9)});
    proto("convex", "Yield", 2,
          {A(2021, 5, 17, 0.1e9), A(2022, 1, 5, 20e9), A(2022, 6, 18, 4e9), A(2023, 1, 1, 3.5e9), A(2024, 6, 1, 1.5e9),
           A(2026, 1, 15, 1.2e9)},
          make_date(2021, 5, 17));
    proto("anchor", "Lending", 1,
          {A(2021, 3, 17, 0.05e9), A(2022, 4, 7, 17e9), A(2022, 5, 8, 14e9), A(2022, 5, 12, 2e9), A(2022, 5, 20, 0.3e9),
           A(2022, 5, 31, 0.1e9)},
          make_date(2021, 3, 17), make_date(2022, 5, 31));
    proto("justlend", "Lending", 0,
          {A(2021, 1, 1, 0.2e9), A(2021, 12, 31, 3e9), A(2022, 11, 15, 2.5e9), A(2024, 6, 1, 6e9), A(2026, 1, 15, 4e9)});
    proto("pancakeswap", "Dexes", 1,
          {A(2021, 1, 1, 1e9), A(2021, 5, 1, 6e9), A(2021, 12, 31, 5e9), A(2022, 11, 15, 2e9), A(2024, 6, 1, 2.1e9),
           A(2026, 1, 15, 2.5e9)});
    proto("centrifuge", "RWA", 1,
          {A(2021, 1, 1, 0.05e9), A(2022, 6, 1, 0.2e9), A(2023, 6, 1, 0.25e9), A(2024, 6, 1, 0.6e9), A(2025, 8, 1, 1.0e9),
           A(2026, 1, 15, 1.1e9)});
    proto("ondo", "RWA", 2, {A(2023, 1, 20, 0.01e9), A(2023, 12, 31, 0.2e9), A(2024, 6, 1, 0.6e9), A(2025, 8, 1, 1.4e9),
                             A(2026, 1, 15, 1.6e9)},
          make_date(2023, 1, 20));
    proto("eigenlayer", "Restaking", 2,
          {A(2023, 6, 14, 0.01e9), A(2024, 6, 1, 15e9), A(2024, 12, 31, 12e9), A(2025, 8, 20, 16e9), A(2026, 1, 15, 12e9)},
          make_date(2023, 6, 14));

    Daily total_tvl = level_path(rng,
                                 {A(2021, 1, 1, 21e9), A(2021, 5, 11, 120e9), A(2021, 5, 24, 75e9), A(2021, 12, 2, 180e9),
                                  A(2022, 4, 4, 200e9), A(2022, 5, 8, 185e9), A(2022, 5, 14, 110e9), A(2022, 6, 20, 70e9),
                                  A(2022, 11, 7, 58e9), A(2022, 11, 14, 42e9), A(2023, 3, 9, 46e9), A(2023, 3, 12, 40e9),
                                  A(2023, 4, 15, 50e9), A(2023, 10, 15, 37e9), A(2024, 3, 13, 97e9), A(2024, 8, 5, 78e9),
                                  A(2024, 12, 17, 125e9), A(2025, 4, 8, 85e9), A(2025, 10, 6, 165e9), A(2025, 10, 11, 140e9),
                                  A(2026, 1, 15, 118e9)},
                                 0.015, 0.8);

    // ---- latent stress ----------------------------------------------------------
    const std::vector<Episode> episodes = {
        {terra, -10, 2, 1.5, 6, {0.12, 0.04, 0.00, 0.00}, 0.0, 0, 0},
        {celsius, -22, 3, 1.2, 8, {0.40, 0.50, 0.40, 0.25}, 0.80, -34, 14},
        {ftx, -30, 1, 1.3, 20, {0.70, 0.75, 0.65, 0.45}, 0.85, -38, 14},
        {svb, -22, 1, 1.4, 10, {0.55, 0.40, 0.60, 0.30}, 0.80, -36, 12},
        // stress outside the event catalog
        {make_date(2021, 5, 19), -8, 1, 1.0, 8, {0.25, 0.35, 0.15, 0.05}, 0.55, -20, 10},
        {make_date(2021, 12, 4), -5, 1, 1.0, 6, {0.10, 0.20, 0.10, 0.0}, 0.0, 0, 0},
        {make_date(2024, 8, 5), -6, 1, 1.0, 6, {0.15, 0.15, 0.35, 0.05}, 0.55, -18, 10},
        {make_date(2025, 4, 7), -5, 1, 1.0, 8, {0.15, 0.15, 0.40, 0.05}, 0.5, -15, 10},
        {make_date(2025, 10, 10), -3, 1, 1.0, 6, {0.20, 0.35, 0.15, 0.05}, 0.5, -12, 10},
    };
    const std::vector<Anchor> base = {A(2021, 1, 1, 0.22), A(2021, 4, 1, 0.28), A(2021, 8, 1, 0.20), A(2021, 11, 15, 0.28),
                                      A(2022, 2, 1, 0.50), A(2022, 4, 15, 0.50), A(2022, 7, 20, 0.54), A(2022, 9, 15, 0.46),
                                      A(2022, 12, 15, 0.50), A(2023, 2, 15, 0.50), A(2023, 6, 1, 0.36), A(2023, 11, 1, 0.30),
                                      A(2024, 3, 15, 0.34), A(2024, 10, 1, 0.30), A(2025, 2, 1, 0.30), A(2025, 7, 1, 0.22),
                                      A(2026, 1, 15, 0.24)};
    const std::array<double, 4> offset = {0.0, 0.02, 0.0, 0.05};
    const std::array<double, 4> noise_sd = {0.10, 0.10, 0.10, 0.08};
    const double noise_phi = 0.6, rho_base = 0.12;

    std::vector<std::array<double, 4>> frac(kDays);
    {
        std::array<double, 4> e{};
        const double s = std::sqrt(1 - noise_phi * noise_phi);
        for (std::size_t i = 0; i < kDays; ++i) {
            double rho = rho_base;
            for (auto& ep : episodes) {
                const long x = days_between(ep.onset, day(i));
                if (ep.rho > 0 && x >= ep.rho_from && x <= ep.rho_to) rho = std::max(rho, ep.rho);
            }
            const double z0 = rng.normal();
            for (std::size_t k = 0; k < 4; ++k) {
                const double z = std::sqrt(1 - rho) * rng.normal() + std::sqrt(rho) * z0;
                e[k] = i == 0 ? noise_sd[k] * z : noise_phi * e[k] + s * noise_sd[k] * z;
                double f = interp(base, day(i)) + offset[k] + e[k];
                for (auto& ep : episodes) f += ep.load[k] * shape(days_between(ep.onset, day(i)), ep.x0, ep.xp, ep.q, ep.tau);
                frac[i][k] = std::clamp(f, 0.0, 1.0);
            }
        }
    }

    // ---- solve the free feeds day by day -----------------------------------------
    Daily sc_tvl(kDays), corr(kDays), bridges(kDays);
    const Daily usdt_ref = coins[usdt].supply, lido_ref = protos[lido].tvl;
    double tvl_max = 0.0;
    std::size_t clamps = 0;
    std::vector<std::array<double, 4>> target(kDays), lo_of(kDays), hi_of(kDays);

    for (std::size_t i = 0; i < kDays; ++i) {
        MarketSnapshot s;
        s.date = day(i);
        auto rebuild_coins = [&] {
            s.stablecoins.clear();
            for (auto& c : coins)
                if (c.supply[i] && *c.supply[i] > 0) s.stablecoins.push_back({c.id, *c.supply[i], c.price[i], c.mech, c.backing});
        };
        for (auto& t : tokens) {
            BackingTokenMetrics m;
            m.volatility_30d_pct = t.vol[i];
            m.supply_growth_30d_pct = t.growth[i];
            m.backing_ratio = t.ratio[i];
            if (t.vol[i]) s.backing_token_metrics[t.id] = m;
        }
        for (std::size_t j = (i >= 29 ? i - 29 : 0); j <= i; ++j) s.tvl_history.push_back(*total_tvl[j]);
        auto rebuild_protocols = [&] {
            s.protocols.clear();
            for (auto& p : protos) {
                if (!p.tvl[i]) continue;
                double chg = 0.0;
                if (i > 0 && p.tvl[i - 1] && *p.tvl[i - 1] > 0) chg = (*p.tvl[i] / *p.tvl[i - 1] - 1.0) * 100.0;
                s.protocols.push_back({p.id, *p.tvl[i], p.category, p.audits, chg});
            }
        };
        s.treasury_10y = dgs10[i];
        s.vix = vix[i];
        s.spread_10y_2y = t10y2y[i];
        s.btc_spy_corr_30d = 0.5;
        s.bridge_count = 75.0;
        s.stablecoin_tvl_current = tvl_max > 0 ? tvl_max : 30e9;
        s.stablecoin_tvl_historical_max = s.stablecoin_tvl_current;
        rebuild_protocols();

        auto range_solve = [&](std::size_t k, const std::function<double(double)>& f, double lo, double hi) {
            const double a = f(lo), b = f(hi);
            const double tgt = std::min(a, b) + frac[i][k] * std::abs(b - a);
            bool cl = false;
            const double x = solve(f, lo, hi, tgt, cl);
            if (cl) ++clamps;
            target[i][k] = tgt;
            lo_of[i][k] = std::min(a, b);
            hi_of[i][k] = std::max(a, b);
            return x;
        };

        // OR via USDT supply
        const double uref = *usdt_ref[i];
        const double m_or = range_solve(
            3,
            [&](double m) {
                coins[usdt].supply[i] = uref * m;
                rebuild_coins();
                return compute_or(s).score;
            },
            0.4, 4.0);
        coins[usdt].supply[i] = uref * m_or;
        rebuild_coins();

        // SCR via stablecoin TVL drawdown
        const double prev_max = tvl_max > 0 ? tvl_max : 25e9;
        const double top = prev_max * 1.002;
        const double v_scr = range_solve(
            0,
            [&](double v) {
                s.stablecoin_tvl_current = v;
                s.stablecoin_tvl_historical_max = std::max(tvl_max, v);
                return compute_scr_adjusted(s).score;
            },
            top, 0.5 * prev_max);
        sc_tvl[i] = v_scr;
        tvl_max = std::max(tvl_max, v_scr);
        s.stablecoin_tvl_current = v_scr;
        s.stablecoin_tvl_historical_max = tvl_max;

        // DLR via Lido TVL
        const double lref = *lido_ref[i];
        const double m_dlr = range_solve(
            1,
            [&](double m) {
                protos[lido].tvl[i] = lref * m;
                rebuild_protocols();
                return compute_dlr(s).score;
            },
            0.3, 12.0);
        protos[lido].tvl[i] = lref * m_dlr;
        rebuild_protocols();

        // CR via the correlation / bridge pair
        const double x = range_solve(
            2,
            [&](double x) {
                s.btc_spy_corr_30d = 0.05 + 0.9 * x;
                s.bridge_count = 10.0 + 140.0 * x;
                return compute_cr(s).score;
            },
            0.0, 1.0);
        corr[i] = 0.05 + 0.9 * x;
        bridges[i] = 10.0 + 140.0 * x;
    }

    // ---- write ---------------------------------------------------------------------
    const fs::path out(out_dir);
    fs::create_directories(out / "raw");
    SourceManifest m;
    m.name = "bundled-synthetic";
    auto add = [&](const std::string& id, const std::string& source, const std::string& endpoint, Frequency f, const Daily& v) {
        SeriesSpec spec;
        spec.desc.id = id;
        spec.desc.source = source;
        spec.desc.endpoint = endpoint;
        spec.desc.frequency = f;
        spec.desc.lag = default_publication_lag(source, endpoint);
        spec.path = "raw/" + id + ".csv";
        io::write_file_if_changed(out / spec.path, raw_csv(v, f == Frequency::weekdays));
        m.series.push_back(spec);
    };
    for (auto& c : coins) {
        add("supply." + c.id, "defillama_stablecoins", "stablecoin/" + c.id, Frequency::daily, c.supply);
        add("price." + c.id, "coingecko", "simple/price/" + c.id, Frequency::daily, c.price);
        m.stablecoins.push_back({c.id, c.mech, "supply." + c.id, "price." + c.id, c.backing});
    }
    for (auto& t : tokens) {
        add("token." + t.id + ".vol30d", "coingecko", "coins/" + t.id, Frequency::daily, t.vol);
        add("token." + t.id + ".growth30d", "coingecko", "coins/" + t.id, Frequency::daily, t.growth);
        add("token." + t.id + ".backing_ratio", "coingecko", "coins/" + t.id, Frequency::daily, t.ratio);
        m.backing_tokens.push_back({t.id, "token." + t.id + ".vol30d", "token." + t.id + ".growth30d",
                                    "token." + t.id + ".backing_ratio"});
    }
    for (auto& p : protos) {
        add("tvl." + p.id, "defillama_protocols", "protocol/" + p.id, Frequency::daily, p.tvl);
        m.protocols.push_back({p.id, p.category, p.audits, "tvl." + p.id});
    }
    add("stablecoin_tvl", "defillama_stablecoins", "stablecoincharts/all", Frequency::daily, sc_tvl);
    add("total_tvl", "defillama_tvl", "v2/historicalChainTvl", Frequency::daily, total_tvl);
    add("fred.dgs10", "fred", "DGS10", Frequency::weekdays, dgs10);
    add("fred.vixcls", "fred", "VIXCLS", Frequency::weekdays, vix);
    add("fred.t10y2y", "fred", "T10Y2Y", Frequency::weekdays, t10y2y);
    add("btc_spy_corr_30d", "derived", "btc-spy/30d", Frequency::daily, corr);
    add("bridge_count", "defillama_bridges", "bridges", Frequency::daily, bridges);
    m.macro = {"stablecoin_tvl", "total_tvl", "fred.dgs10", "fred.vixcls", "fred.t10y2y", "btc_spy_corr_30d", "bridge_count"};
    io::write_file_if_changed(out / "manifest.json", m.to_json(true).dump(2) + "\n");

    std::vector<CrisisEvent> events = {{"Terra/Luna", terra, CrisisType::endogenous},
                                       {"Celsius/3AC", celsius, CrisisType::hybrid},
                                       {"FTX", ftx, CrisisType::hybrid},
                                       {"SVB", svb, CrisisType::exogenous}};
    io::write_file_if_changed(out / "events.csv", to_event_catalog_csv(events));
    std::cout << "wrote " << m.series.size() << " series to " << out.string() << " (" << clamps << " clamped solves)\n";

    if (verify) {
        const fs::path snap = fs::temp_directory_path() / "asri_bundle_verify";
        fs::remove_all(snap);
        ingest_manifest(load_manifest(out / "manifest.json"), out, snap);
        const auto store = SnapshotStore::open(snap);
        const auto run = backtest::run_backtest(store);
        double worst = 0.0;
        for (auto& p : run.points) {
            const std::size_t i = std::size_t(idx(p.date));
            for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(p.sub[k] - target[i][k]));
        }
        std::cout << "points " << run.points.size() << ", skipped " << run.skipped.size() << ", max |sub - target| " << worst
                  << "\n";
        const TimeSeries ts = asri_series(run.points);
        const auto v = ts.values();
        std::cout << "asri mean " << stats::mean(v) << " sd " << stats::stddev(v) << " min "
                  << *std::min_element(v.begin(), v.end()) << " max " << *std::max_element(v.begin(), v.end()) << "\n";
        for (auto& e : events) {
            const auto r = run_event_study(ts, e);
            std::printf("%-12s pre %.1f peak %.1f cas %.1f t %.2f lead50 %s\n", e.name.c_str(), r.mu_hat, r.peak, r.cas,
                        r.t_stat.value_or(NAN), r.lead_time_threshold ? std::to_string(*r.lead_time_threshold).c_str() : "-");
        }
        linalg::Matrix y(run.points.size(), 4);
        std::vector<Date> dates;
        for (std::size_t t = 0; t < run.points.size(); ++t) {
            dates.push_back(run.points[t].date);
            for (std::size_t k = 0; k < 4; ++k) y(t, k) = run.points[t].sub[k];
        }
        const auto roll = dy::rolling_connectedness(dates, y);
        const auto det = dy::dy_detection(roll.series, events);
        const auto cv = roll.series.values();
        std::cout << "dy mean " << stats::mean(cv) << " min " << *std::min_element(cv.begin(), cv.end()) << " max "
                  << *std::max_element(cv.begin(), cv.end()) << " thr " << det.threshold << " detected "
                  << det.metrics.events_detected << "/4 [";
        for (auto& l : det.metrics.lead_per_event) std::cout << (l ? std::to_string(*l) : "-") << " ";
        std::cout << "] precision " << det.metrics.precision << "\n";
        for (auto& e : events) {
            const std::size_t i = std::size_t(idx(e.onset));
            std::printf("%-12s range", e.name.c_str());
            for (std::size_t k = 0; k < 4; ++k) std::printf(" [%.1f, %.1f]@%.2f", lo_of[i][k], hi_of[i][k], frac[i][k]);
            std::printf("\n");
        }
        fs::remove_all(snap);
    }
    return 0;
}
