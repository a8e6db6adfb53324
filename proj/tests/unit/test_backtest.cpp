#include <catch2/catch_amalgamated.hpp>

#include "../support/synthetic.hpp"

using namespace asri;
using namespace asri::testing;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

// Sub-indices N(40, 2^2) from 2021-01-01; +3 sd on every component over [onset-20, onset] when `stress`.
std::vector<AsriPoint> synthetic_points(Rng& rng, std::size_t n, Date onset, bool stress) {
    std::vector<AsriPoint> pts;
    const auto w = WeightVector::theoretical();
    for (auto d : daily_dates(make_date(2021, 1, 1), n)) {
        const long k = days_between(d, onset);
        SubIndexVector s{};
        for (auto& v : s) v = rng.normal(40, 2) + (stress && k >= 0 && k <= 20 ? 6.0 : 0.0);
        pts.push_back(aggregate_linear(s, w, d));
    }
    return pts;
}

TimeSeries asri_of(const std::vector<AsriPoint>& pts) {
    std::vector<Date> d;
    std::vector<double> v;
    for (auto& p : pts) d.push_back(p.date), v.push_back(p.asri);
    return make_series("asri", d, v);
}

const SnapshotStore& lag_free_store() {
    static const SnapshotStore store = [] {
        const auto dir = scratch_dir("lag_free");
        const fs::path bundle = fs::path(ASRI_SOURCE_DIR) / "data" / "bundled";
        auto m = load_manifest(bundle / "manifest.json");
        for (auto& s : m.series) s.desc.lag = {};
        ingest_manifest(m, bundle, dir);
        return SnapshotStore::open(dir);
    }();
    return store;
}

}  // namespace

TEST_CASE("backtest date handling") {
    const auto& store = lag_free_store();
    backtest::BacktestConfig bc;
    bc.start = bc.end = make_date(2022, 3, 1);
    CHECK(backtest::run_backtest(store, bc).points.size() == 1);

    bc.start = make_date(2022, 3, 2);
    CHECK_THROWS_AS(backtest::run_backtest(store, bc), Error);
}

TEST_CASE("lagged and foresight runs agree without publication lags") {
    const auto& store = lag_free_store();
    backtest::BacktestConfig bc;
    bc.start = make_date(2022, 4, 1);
    bc.end = make_date(2022, 6, 30);
    const auto a = backtest::run_backtest(store, bc);
    bc.lagged = true;
    const auto b = backtest::run_backtest(store, bc);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].asri == b.points[i].asri);

    std::vector<CrisisEvent> evs{{"e", make_date(2022, 5, 9), CrisisType::endogenous}};
    const auto cmp = backtest::lag_comparison(asri_of(a.points), asri_of(b.points), evs);
    CHECK(cmp.mean_degradation_pct == 0.0);
}

TEST_CASE("walk-forward detects an injected stress") {
    Rng rng(17);
    const Date onset = make_date(2022, 9, 1);
    const CrisisEvent ev{"e", onset, CrisisType::hybrid};
    const auto calm = synthetic_points(rng, 800, onset, false);
    const auto hot = synthetic_points(rng, 800, onset, true);
    const auto r = backtest::walk_forward(hot, {ev}, {}, 70.0);
    REQUIRE(r[0].evaluated);
    CHECK(r[0].detected);
    CHECK(r[0].lead.value() == 20);
    CHECK_FALSE(backtest::walk_forward(calm, {ev}, {}, 70.0)[0].detected);

    auto win = backtest::default_window(hot, ev);
    win.train_end = onset - Days{10};
    CHECK_THROWS_AS(backtest::walk_forward_event(hot, ev, win), Error);

    const CrisisEvent early{"early", make_date(2021, 6, 1), CrisisType::hybrid};
    CHECK_FALSE(backtest::walk_forward(hot, {early})[0].evaluated);
}

TEST_CASE("weight grid") {
    CHECK(backtest::simplex_grid(0.05).size() == 969);
    for (auto& w : backtest::simplex_grid(0.25)) CHECK(w[0] + w[1] + w[2] + w[3] == Approx(1.0));
    CHECK_THROWS_AS(backtest::simplex_grid(1.0), Error);
    CHECK_THROWS_AS(backtest::simplex_grid(0.3), Error);
}

TEST_CASE("weight perturbation") {
    const WeightVector base;
    const auto same = backtest::perturb(base, 1, 0.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same[i] == Approx(base[i]));
    const auto up = backtest::perturb(base, 0, 0.10);
    CHECK(up[0] == Approx(0.33));
    CHECK(up[0] + up[1] + up[2] + up[3] == Approx(1.0));
    CHECK(up[1] / up[3] == Approx(base[1] / base[3]));

    Rng rng(23);
    const Date onset = make_date(2022, 9, 1);
    const auto pts = synthetic_points(rng, 800, onset, true);
    BootstrapConfig bc;
    bc.n_resamples = 20;
    const auto rows = backtest::weight_perturbation(pts, {{"e", onset, CrisisType::hybrid}}, base, {0.0}, bc);
    REQUIRE(rows.size() == 4);
    for (auto& r : rows) CHECK(r.rank_correlation == Approx(1.0));
}

TEST_CASE("threshold and forward-window sweeps") {
    Rng rng(29);
    const Date onset = make_date(2022, 9, 1);
    const auto ts = asri_of(synthetic_points(rng, 800, onset, true));
    const std::vector<CrisisEvent> evs{{"e", onset, CrisisType::hybrid}};
    const auto sw = backtest::threshold_sensitivity(ts, evs, {45, 1000});
    CHECK(sw.rows[1].specificity == 1.0);
    CHECK(sw.rows[1].recall_event == 0.0);
    CHECK(sw.best_threshold == 45);

    const auto fw = backtest::forward_window_sensitivity(ts, evs, {14, 30});
    CHECK(fw.rows.size() == 2);
    CHECK(fw.rows[0].auroc > 0.9);
    const std::vector<CrisisEvent> after{{"late", make_date(2023, 3, 15), CrisisType::hybrid}};
    CHECK_THROWS_AS(backtest::forward_window_sensitivity(ts, after, {1000}), Error);
}

TEST_CASE("ablation and hold-one-out") {
    Rng rng(31);
    std::vector<CrisisEvent> evs;
    std::vector<AsriPoint> pts = synthetic_points(rng, 1200, make_date(2000, 1, 1), false);
    for (const Date d : {make_date(2021, 8, 1), make_date(2022, 3, 1), make_date(2022, 10, 1), make_date(2023, 2, 1)}) {
        evs.push_back({"e" + std::to_string(evs.size()), d, CrisisType::hybrid});
        for (auto& p : pts)
            if (p.date >= d - Days{20} && p.date <= d) {
                p.sub[1] += 20.0;
                p = aggregate_linear(p.sub, WeightVector::theoretical(), p.date);
            }
    }
    const auto ab = backtest::ablation_study(pts, evs);
    REQUIRE(ab.size() == 5);
    CHECK(ab[0].excluded == "none");
    CHECK(ab[2].excluded == "dlr");
    CHECK(ab[0].mean_cas > ab[2].mean_cas);
    CHECK(ab[2].mean_cas < ab[1].mean_cas);

    const auto ho = backtest::hold_one_out(pts, evs, 0.25, 45.0);
    REQUIRE(ho.size() == 4);
    for (auto& r : ho) CHECK(r.derived[0] + r.derived[1] + r.derived[2] + r.derived[3] == Approx(1.0));
    CHECK_THROWS_AS(backtest::hold_one_out(pts, {evs[0], evs[1]}), Error);
}
