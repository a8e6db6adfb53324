#include <catch2/catch_amalgamated.hpp>

#include "../support/synthetic.hpp"

using namespace asri;
using Catch::Approx;

TEST_CASE("linear aggregation") {
    const auto w = WeightVector::theoretical();
    auto p = aggregate_linear({50, 50, 50, 50}, w);
    CHECK(p.asri == Approx(50.0));
    CHECK(p.alert == AlertLevel::elevated);
    CHECK(aggregate_linear({100, 100, 100, 100}, w).asri == Approx(100.0));
    CHECK(aggregate_linear({40, 60, 30, 20}, w).asri + 2.5 == Approx(aggregate_linear({40, 70, 30, 20}, w).asri));
    CHECK_THROWS_AS(aggregate_linear({101, 0, 0, 0}, w), Error);
}

TEST_CASE("weight validation") {
    CHECK_THROWS_AS(WeightVector::make({0.5, 0.5, 0.1, 0.1}), Error);
    CHECK_THROWS_AS(WeightVector::make({0.5, 0.5, 0.0, 0.0}), Error);
    CHECK_THROWS_AS(WeightVector::make({1.0, 0.0, 0.0, 0.0}, true), Error);
    CHECK_NOTHROW(WeightVector::make({0.5, 0.0, 0.25, 0.25}, true));
}

TEST_CASE("ablation weights renormalize") {
    const auto base = WeightVector::theoretical();
    auto a = ablation_weights(base, SubIndex::scr);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == Approx(0.357142857));
    CHECK(a[3] == Approx(0.285714286));
    auto b = ablation_weights(base, SubIndex::opacity);
    CHECK(b[0] == Approx(0.375));
    CHECK(b[1] == Approx(0.3125));
    CHECK(b[3] == 0.0);
    double s = 0.0;
    for (double v : a.values()) s += v;
    CHECK(s == Approx(1.0).margin(1e-12));
}

TEST_CASE("CES, geometric and max") {
    const auto w = WeightVector::theoretical();
    CHECK(aggregate_ces({50, 50, 50, 50}, w, 1.0) == Approx(50.0));
    CHECK(aggregate_geometric({50, 50, 50, 50}, w) == Approx(50.0));
    const SubIndexVector s{20, 80, 20, 20};
    CHECK(aggregate_ces(s, w, -8.0) < aggregate_linear(s, w).asri);
    // monotone in rho
    double prev = -1.0;
    for (double rho : {-8.0, -2.0, 0.0, 1.0, 2.0, 8.0}) {
        const double v = aggregate_ces(s, w, rho);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(aggregate_max({40, 60, 30, 20}) == 60.0);
    CHECK(aggregate_max({33, 33, 33, 33}) == 33.0);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        SubIndexVector v;
        for (auto& x : v) x = rng.uniform(0, 100);
        CHECK(aggregate_max(v) >= aggregate_linear(v, w).asri);
    }
}

TEST_CASE("CISS composite") {
    const auto dates = testing::daily_dates(make_date(2023, 1, 1), 60);
    std::vector<SubIndexVector> flat(60, SubIndexVector{50, 50, 50, 50});
    for (auto& p : aggregate_ciss(dates, flat).points) CHECK(p.value == Approx(50.0));

    Rng rng(4);
    std::vector<SubIndexVector> h;
    for (int i = 0; i < 60; ++i) h.push_back({rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100)});
    for (auto& p : aggregate_ciss(dates, h).points) {
        CHECK(p.value >= 0.0);
        CHECK(p.value <= 100.0);
    }
}

TEST_CASE("alert boundaries") {
    CHECK(classify_alert(29.99) == AlertLevel::low);
    CHECK(classify_alert(30.0) == AlertLevel::moderate);
    CHECK(classify_alert(50.0) == AlertLevel::elevated);
    CHECK(classify_alert(84.7) == AlertLevel::high);
}

TEST_CASE("min-max scaling") {
    std::vector<double> a{0, 50, 100};
    CHECK(normalize_minmax(a) == a);
    std::vector<double> b{25.8, 84.7};
    auto nb = normalize_minmax(b);
    CHECK(nb[0] == 0.0);
    CHECK(nb[1] == 100.0);
    std::vector<double> c{1, 4, 2}, d{13, 22, 16};  // 3x + 10
    auto nc = normalize_minmax(c), nd = normalize_minmax(d);
    for (std::size_t i = 0; i < 3; ++i) CHECK(nc[i] == Approx(nd[i]));
    std::vector<double> e{5, 5};
    CHECK_THROWS_AS(normalize_minmax(e), Error);
}

TEST_CASE("ASRI CSV round trip") {
    const auto w = WeightVector::theoretical();
    std::vector<AsriPoint> pts{aggregate_linear({10, 20, 30, 40}, w, make_date(2022, 1, 1)),
                               aggregate_linear({55.5, 60, 70, 80}, w, make_date(2022, 1, 2))};
    auto text = to_asri_csv(pts);
    CHECK(text.rfind(kAsriCsvHeader, 0) == 0);
    auto back = parse_asri_csv(text, w);
    REQUIRE(back.size() == 2);
    CHECK(back[1].asri == Approx(pts[1].asri).margin(1e-6));
    CHECK(back[1].alert == pts[1].alert);
}
