#include <catch2/catch_amalgamated.hpp>

#include "asri/report.hpp"
#include "../support/synthetic.hpp"

using namespace asri;

TEST_CASE("csv writer renders missing values as NA") {
    report::Csv c("a,b,c");
    c.row(std::optional<int>{}, 1.5, std::string("x"));
    CHECK(c.str() == "a,b,c\nNA,1.500000,x\n");
}

namespace {

const SnapshotStore& bundled_store() {
    static const SnapshotStore store = [] {
        namespace fs = std::filesystem;
        const auto dir = testing::scratch_dir("report_store");
        const fs::path bundle = fs::path(ASRI_SOURCE_DIR) / "data" / "bundled";
        ingest_manifest(load_manifest(bundle / "manifest.json"), bundle, dir);
        return SnapshotStore::open(dir);
    }();
    return store;
}

std::vector<CrisisEvent> bundled_events() {
    return parse_event_catalog(io::read_file(std::filesystem::path(ASRI_SOURCE_DIR) / "data" / "bundled" / "events.csv"));
}

}  // namespace

TEST_CASE("single-day compute writes one row") {
    backtest::BacktestConfig bc;
    bc.start = bc.end = make_date(2022, 5, 9);
    const auto b = report::compute_outputs(backtest::run_backtest(bundled_store(), bc));
    const auto lines = io::split(b.at("asri.csv"), '\n');
    std::size_t rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) rows += lines[i].empty() ? 0 : 1;
    CHECK(rows == 1);
    for (auto& [name, text] : b) CHECK(report::check_file(std::filesystem::path(name).filename().string(), text).empty());
}

TEST_CASE("analysis selection") {
    CHECK_THROWS_AS(report::resolve_selection({}), Error);
    try {
        report::resolve_selection({"nope"});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parameter);
        CHECK(exit_code_for(e.kind()) == 2);
    }
    CHECK(report::resolve_selection({"all"}) == report::kAnalyses);
    CHECK(report::resolve_selection({"lag", "hmm", "lag"}) == std::vector<std::string>{"lag", "hmm"});
}

TEST_CASE("validate bundle is deterministic and schema-clean") {
    const std::vector<std::string> sel{"ablation", "lag", "walkforward"};
    report::Context a(bundled_store(), bundled_events(), {});
    report::Context b(bundled_store(), bundled_events(), {});
    const auto ra = report::run_validate(a, sel, "d"), rb = report::run_validate(b, sel, "d");
    CHECK(ra == rb);
    for (auto& an : sel) {
        bool found = false;
        for (auto& [name, text] : ra) found = found || name.rfind(an + "/", 0) == 0;
        CHECK(found);
    }
    for (auto& [name, text] : ra) CHECK(report::check_file(std::filesystem::path(name).filename().string(), text).empty());

    // a dropped field is caught
    auto broken = ra.at("lag/lag_comparison.csv");
    broken.erase(broken.rfind(','));
    CHECK_FALSE(report::check_file("lag_comparison.csv", broken).empty());
    CHECK(report::run_stamp("d", {{"x", 1}}) == report::run_stamp("d", {{"x", 1}}));
    CHECK(report::run_stamp("d", {{"x", 1}}) != report::run_stamp("e", {{"x", 1}}));
}
