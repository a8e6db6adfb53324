#include <catch2/catch_amalgamated.hpp>

#include "../support/synthetic.hpp"

using namespace asri;
using Catch::Approx;

namespace {
const Date d0 = make_date(2023, 3, 1);
Date day(int k) { return d0 + Days{k}; }

SeriesDescriptor desc(std::string id = "x") {
    SeriesDescriptor d;
    d.id = std::move(id);
    return d;
}
}  // namespace

TEST_CASE("ingest_source sorts and de-duplicates") {
    auto ts = ingest_source(desc(), {{day(0), 1.0}, {day(1), 2.0}, {day(2), 3.0}});
    CHECK(ts.size() == 3);
    for (auto& p : ts.points) CHECK(p.filled == FillKind::raw);

    auto dup = ingest_source(desc(), {{day(0), 1.0}, {day(0), 1.0}, {day(1), 2.0}});
    CHECK(dup.size() == 2);

    auto shuffled = ingest_source(desc(), {{day(2), 3.0}, {day(0), 1.0}, {day(1), 2.0}});
    auto sorted = ingest_source(desc(), {{day(0), 1.0}, {day(1), 2.0}, {day(2), 3.0}});
    CHECK(shuffled.points == sorted.points);

    CHECK_THROWS_AS(ingest_source(desc(), {{day(0), 1.0}, {day(0), 2.0}}), Error);
}

TEST_CASE("fill_gaps follows the 2/7-day rules") {
    auto one = fill_gaps(make_series("x", {day(0), day(2)}, {10, 12}));
    REQUIRE(one.size() == 3);
    CHECK(one.points[1].value == Approx(11.0));
    CHECK(one.points[1].confidence == confidence::interpolated);

    auto four = fill_gaps(make_series("x", {day(0), day(5)}, {10, 20}));
    REQUIRE(four.size() == 6);
    for (int k = 1; k <= 4; ++k) {
        CHECK(four.points[std::size_t(k)].value == 10.0);
        CHECK(four.points[std::size_t(k)].confidence == confidence::forward_filled);
    }

    auto eight = fill_gaps(make_series("x", {day(0), day(9)}, {10, 20}));
    CHECK(eight.size() == 2);
    REQUIRE(eight.gaps.size() == 1);
    CHECK(eight.gaps[0].first == day(1));
    CHECK(eight.gaps[0].last == day(8));
}

TEST_CASE("interpolate_weekly is linear between weekly points") {
    auto w = interpolate_weekly(make_series("x", {day(0), day(7)}, {0, 7}));
    REQUIRE(w.size() == 8);
    for (int k = 0; k <= 7; ++k) CHECK(w.points[std::size_t(k)].value == Approx(double(k)));

    auto single = make_series("x", {day(0)}, {3});
    CHECK(interpolate_weekly(single).points == single.points);

    auto flat = interpolate_weekly(make_series("x", {day(0), day(7)}, {5, 5}));
    for (auto& p : flat.points) CHECK(p.value == 5.0);
}

TEST_CASE("carry_forward_monthly marks stale values") {
    auto ts = make_series("m", {day(0)}, {4.2});
    auto fresh = carry_forward_monthly(ts, day(10));
    CHECK(fresh.value == 4.2);
    CHECK(fresh.confidence == 1.0);
    auto stale = carry_forward_monthly(ts, day(50));
    CHECK(stale.value == 4.2);
    CHECK(stale.confidence == confidence::stale_monthly);
    CHECK_THROWS_AS(carry_forward_monthly(ts, day(-1)), Error);
}

TEST_CASE("available_as_of respects publication lags") {
    std::vector<Date> dates;
    std::vector<double> vals;
    for (int k = 0; k <= 12; ++k) {
        dates.push_back(day(k));
        vals.push_back(k);
    }
    auto ts = make_series("x", dates, vals);
    ts.desc.lag = {std::chrono::hours{48}, 0};
    auto a = available_as_of(ts, day(10));
    CHECK(a.points.back().date == day(8));

    ts.desc.lag = {};
    CHECK(available_as_of(ts, day(10)).points.back().date == day(10));

    // future points do not change what was visible
    ts.desc.lag = {std::chrono::hours{48}, 0};
    auto longer = ts;
    longer.points.push_back({day(40), 99.0});
    CHECK(available_as_of(longer, day(10)).points == a.points);

    // business-day lag skips the weekend: Monday 2023-03-06 minus 2 business days is Thursday
    ts.desc.lag = {std::chrono::hours{0}, 2};
    CHECK(availability_cutoff(ts.desc.lag, make_date(2023, 3, 6)) == make_date(2023, 3, 2));
}

TEST_CASE("shift_t_minus_1") {
    auto ts = make_series("x", {day(5)}, {1});
    CHECK(shift_t_minus_1(ts).points[0].date == day(4));
    CHECK(shift_t_minus_1(shift_t_minus_1(ts)).points[0].date == day(3));
    CHECK(shift_t_minus_1(TimeSeries{}).empty());
}

TEST_CASE("snapshot CSV round trip keeps confidence and fill kind") {
    auto ts = fill_gaps(make_series("x", {day(0), day(2), day(6)}, {1, 3, 5}));
    auto back = parse_snapshot(to_snapshot_csv(ts), provenance_json(ts));
    CHECK(back.points == ts.points);
    CHECK(back.gaps == ts.gaps);
}

TEST_CASE("ingest is idempotent and reports missing files") {
    namespace fs = std::filesystem;
    const auto dir = testing::scratch_dir("ingest_unit");
    fs::create_directories(dir / "raw");
    io::write_file(dir / "raw" / "a.csv", "date,value\n2023-01-01,1\n2023-01-02,2\n2023-01-03,3\n");
    const auto bundle = fs::path(ASRI_SOURCE_DIR) / "data" / "bundled";
    auto m = load_manifest(bundle / "manifest.json");
    const auto snap = dir / "snap";
    auto r1 = ingest_manifest(m, bundle, snap);
    CHECK(!r1.written.empty());
    auto r2 = ingest_manifest(m, bundle, snap);
    CHECK(r2.written.empty());
    CHECK(r2.unchanged.size() == r1.written.size());

    m.series[0].path = "raw/does_not_exist.csv";
    try {
        ingest_manifest(m, bundle, dir / "snap2");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("does_not_exist.csv") != std::string::npos);
    }
}
