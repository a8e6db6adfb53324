// asri: ingest snapshots, compute the index, run validation analyses.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "asri/asri.hpp"
#include "asri/report.hpp"

namespace fs = std::filesystem;
using namespace asri;
using Json = nlohmann::json;

namespace {

int report_error(ErrorKind kind, const std::string& msg) {
    Json j{{"error", {{"kind", std::string(to_string(kind))}, {"message", msg}}}};
    std::cerr << j.dump() << "\n";
    return exit_code_for(kind);
}

WeightVector parse_weights(const std::string& s) {
    if (s.empty()) return WeightVector::theoretical();
    auto parts = io::split(s, ',');
    require(parts.size() == 4, ErrorKind::parameter, "--weights needs four comma-separated values (scr,dlr,cr,or)");
    std::array<double, 4> w{};
    for (std::size_t i = 0; i < 4; ++i) w[i] = io::parse_double(parts[i]);
    return WeightVector::make(w);
}

std::vector<CrisisEvent> load_events(const fs::path& p) {
    require(fs::exists(p), ErrorKind::missing_data, "event catalog not found: " + p.string());
    return parse_event_catalog(io::read_file(p));
}

fs::path snapshot_default() {
    if (const char* e = std::getenv("ASRI_SNAPSHOT_DIR"); e && *e) return e;
    return "snapshots";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ASRI engine: systemic risk index for stablecoin and DeFi markets"};
    app.require_subcommand(1);

    std::string snapshot_dir = snapshot_default().string();
    app.add_option("--snapshots", snapshot_dir, "Snapshot directory (env ASRI_SNAPSHOT_DIR)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load every series in a manifest, gap-fill, and persist snapshots");
    std::string manifest_path;
    ingest->add_option("--manifest", manifest_path, "Source manifest JSON")->required();

    // compute
    auto* compute = app.add_subcommand("compute", "Compute the daily index, component breakdown and alert log");
    std::string weights_s, start_s, end_s, out_dir = "out", aggregator = "linear";
    double ces_rho = 2.0;
    bool lagged = false;
    compute->add_option("--weights", weights_s, "Sub-index weights scr,dlr,cr,or (default 0.30,0.25,0.25,0.20)");
    compute->add_option("--start", start_s, "First date (YYYY-MM-DD)");
    compute->add_option("--end", end_s, "Last date (YYYY-MM-DD)");
    compute->add_option("--aggregator", aggregator, "Extra composite written to aggregate.csv")
        ->check(CLI::IsMember({"linear", "ces", "geometric", "max", "ciss"}));
    compute->add_option("--rho", ces_rho, "CES curvature for --aggregator ces");
    compute->add_flag("--lagged", lagged, "Use only data published by each date");
    compute->add_option("-o,--out", out_dir, "Output directory");

    // validate
    auto* validate = app.add_subcommand("validate", "Run validation analyses into a run-stamped bundle");
    std::vector<std::string> which;
    std::string events_path = "data/bundled/events.csv", v_weights, v_out = "reports";
    report::RunConfig rc;
    validate->add_option("analyses", which, "eventstudy stationarity hmm connectedness weights ablation sensitivity "
                                            "walkforward holdout lag placebo, or all");
    validate->add_option("--events", events_path, "Crisis event catalog CSV (name,onset_date,type)");
    validate->add_option("--weights", v_weights, "Sub-index weights scr,dlr,cr,or");
    validate->add_option("--threshold", rc.threshold, "Alert threshold for detection");
    validate->add_option("--seed", rc.seed, "Seed for bootstrap, placebo and HMM restarts");
    validate->add_option("--roc-window", rc.roc_window, "Forward label window for ROC/PR, days");
    validate->add_option("--placebo-dates", rc.placebo_dates, "Number of placebo dates");
    validate->add_option("--bootstrap-resamples", rc.bootstrap_resamples, "Block bootstrap resamples");
    validate->add_option("--bootstrap-block", rc.bootstrap_block, "Block bootstrap block length");
    validate->add_option("--hmm-restarts", rc.hmm_restarts, "EM restarts per K");
    validate->add_option("--dy-window", rc.dy_window, "Rolling connectedness window, days");
    validate->add_option("-o,--out", v_out, "Parent directory of the run-stamped bundle");

    // schema-check
    auto* schema = app.add_subcommand("schema-check", "Verify headers and field counts of emitted CSV/JSON files");
    std::string schema_dir;
    schema->add_option("dir", schema_dir, "Directory to check")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(ErrorKind::parameter, e.what());
    }

    try {
        if (*ingest) {
            const fs::path mp = manifest_path;
            require(fs::exists(mp), ErrorKind::missing_data, "manifest not found: " + mp.string());
            const auto m = load_manifest(mp);
            const auto rep = ingest_manifest(m, mp.parent_path(), snapshot_dir);
            const auto store = SnapshotStore::open(snapshot_dir);
            std::cout << "series,points,gaps,interpolated,forward_filled,min_confidence\n";
            for (auto& s : m.series) {
                const auto& ts = store.series(s.desc.id);
                std::size_t interp = 0, ff = 0;
                double minc = 1.0;
                for (auto& o : ts.points) {
                    interp += o.confidence == confidence::interpolated ? 1 : 0;
                    ff += o.confidence == confidence::forward_filled ? 1 : 0;
                    minc = std::min(minc, o.confidence);
                }
                std::cout << s.desc.id << "," << ts.size() << "," << ts.gaps.size() << "," << interp << "," << ff << ","
                          << io::fixed(minc, 2) << "\n";
            }
            std::cerr << rep.written.size() << " written, " << rep.unchanged.size() << " unchanged\n";
            return 0;
        }

        if (*compute) {
            const auto store = SnapshotStore::open(snapshot_dir);
            backtest::BacktestConfig bc;
            bc.weights = parse_weights(weights_s);
            bc.lagged = lagged;
            if (!start_s.empty()) bc.start = parse_date(start_s);
            if (!end_s.empty()) bc.end = parse_date(end_s);
            if (bc.start && bc.end)
                require(*bc.start <= *bc.end, ErrorKind::parameter, "--start is after --end");
            const auto run = backtest::run_backtest(store, bc);
            require(!run.points.empty(), ErrorKind::missing_data, "no index values in the requested date range");
            auto b = report::compute_outputs(run);
            if (aggregator != "linear") {
                auto extra = report::aggregate_outputs(run.points, bc.weights, aggregator, ces_rho);
                b.insert(extra.begin(), extra.end());
            }
            report::write_bundle(out_dir, b);
            std::cerr << run.points.size() << " days computed, " << run.skipped.size() << " skipped -> " << out_dir << "\n";
            return 0;
        }

        if (*validate) {
            const auto sel = report::resolve_selection(which);
            rc.weights = parse_weights(v_weights);
            const auto store = SnapshotStore::open(snapshot_dir);
            const auto events = load_events(events_path);
            const std::string digest = report::snapshot_digest(snapshot_dir);
            report::Context ctx(store, events, rc);
            auto b = report::run_validate(ctx, sel, digest);
            Json stamp_in{{"config", rc.to_json()}, {"analyses", sel}, {"events", to_event_catalog_csv(events)}};
            const fs::path dir = fs::path(v_out) / report::run_stamp(digest, stamp_in);
            report::write_bundle(dir, b);
            std::cout << dir.string() << "\n";
            return 0;
        }

        if (*schema) {
            const auto bad = report::schema_check(schema_dir);
            for (auto& s : bad) std::cout << s << "\n";
            if (!bad.empty()) return report_error(ErrorKind::data, std::to_string(bad.size()) + " schema violation(s)");
            std::cout << "ok\n";
            return 0;
        }
    } catch (const Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_error(ErrorKind::io, e.what());
    }
    return 0;
}
