// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>

#include "../support/synthetic.hpp"
#include "asri/report.hpp"

using namespace asri;
using namespace asri::testing;
using linalg::Matrix;

namespace {

const fs::path kSource = ASRI_SOURCE_DIR;
const fs::path kBundle = kSource / "data" / "bundled";
const std::string kCli = ASRI_CLI_PATH;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) { return io::fixed(v, prec); }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// ------------------------------------------------------------------ 1
Outcome axioms() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1);
    const auto w = WeightVector::theoretical();
    std::size_t bad_mono = 0, bad_bound = 0, bad_decomp = 0, bad_pareto = 0, bad_hhi = 0;
    for (int i = 0; i < 1000; ++i) {
        SubIndexVector s;
        for (auto& x : s) x = rng.uniform(0, 100);
        const auto p = aggregate_linear(s, w);

        // monotone in each coordinate
        const std::size_t j = rng.below(4);
        SubIndexVector up = s;
        up[j] = std::min(100.0, s[j] + rng.uniform(1e-3, 20));
        if (up[j] > s[j] && !(aggregate_linear(up, w).asri > p.asri)) ++bad_mono;

        // bounded for every aggregator
        for (double v : {p.asri, aggregate_ces(s, w, 2.0), aggregate_ces(s, w, -1.0), aggregate_geometric(s, w),
                         aggregate_max(s)})
            if (!(v >= 0.0 && v <= 100.0)) ++bad_bound;

        double sum = 0.0;
        for (double c : p.contributions) sum += c;
        if (std::abs(sum - p.asri) > 1e-9) ++bad_decomp;

        // componentwise dominance
        SubIndexVector dom = s;
        bool strict = false;
        for (auto& x : dom) {
            const double nx = std::min(100.0, x + rng.uniform(0, 5));
            strict |= nx > x;
            x = nx;
        }
        if (strict && !(aggregate_linear(dom, w).asri > p.asri)) ++bad_pareto;

        // concentration end to end: move supply from the smallest coin to the largest
        auto snap = random_snapshot(rng);
        auto& coins = snap.stablecoins;
        auto mx = std::max_element(coins.begin(), coins.end(), [](auto& a, auto& b) { return a.supply < b.supply; });
        auto mn = std::min_element(coins.begin(), coins.end(), [](auto& a, auto& b) { return a.supply < b.supply; });
        const double before = aggregate_linear(compute_subindices(snap).scores(), w).asri;
        std::vector<double> sup0;
        for (auto& c : coins) sup0.push_back(c.supply);
        const double move = (mn->supply - 1.5e9) * rng.uniform(0.1, 1.0);
        mn->supply -= move;
        mx->supply += move;
        std::vector<double> sup1;
        for (auto& c : coins) sup1.push_back(c.supply);
        const double after = aggregate_linear(compute_subindices(snap).scores(), w).asri;
        if (herfindahl(sup1) > herfindahl(sup0) && !(after > before)) ++bad_hhi;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = bad_mono + bad_bound + bad_decomp + bad_pareto + bad_hhi == 0 && secs < 5.0;
    o.detail = "violations mono=" + std::to_string(bad_mono) + " bound=" + std::to_string(bad_bound) +
               " decomp=" + std::to_string(bad_decomp) + " pareto=" + std::to_string(bad_pareto) +
               " hhi=" + std::to_string(bad_hhi) + " in " + fmt(secs, 2) + "s";
    return o;
}

// ------------------------------------------------------------------ 2
Outcome piecewise_maps() {
    bool ok = hhi_risk(1500.0) == 30.0 && hhi_risk(2500.0) == 60.0 && hhi_risk(5000.0) == 90.0;
    // left limits approach the same values
    const double eps = 1e-9;
    ok = ok && std::abs(hhi_risk(1500.0 - eps) - 30.0) < 1e-6 && std::abs(hhi_risk(2500.0 - eps) - 60.0) < 1e-6 &&
         std::abs(hhi_risk(5000.0 - eps) - 90.0) < 1e-6;
    ok = ok && yield_curve_score(-2.0) == 100.0 && yield_curve_score(-50.0) == 100.0 && yield_curve_score(2.0) == 0.0 &&
         yield_curve_score(50.0) == 0.0 && yield_curve_score(0.0) == 50.0;
    ok = ok && multi_issuer_score(36) == 100.0 && multi_issuer_score(500) == 100.0 && multi_issuer_score(0) == 70.0;
    return {ok, "hhi_risk(1500,2500,5000)=" + fmt(hhi_risk(1500.0), 1) + "," + fmt(hhi_risk(2500.0), 1) + "," +
                    fmt(hhi_risk(5000.0), 1) + "; link(-2)=" + fmt(yield_curve_score(-2.0), 1) +
                    "; multi(500)=" + fmt(multi_issuer_score(500), 1)};
}

// ------------------------------------------------------------------ 3
Outcome no_look_ahead() {
    const Date cut = make_date(2024, 6, 30);
    const auto short_dir = truncated_bundle(kBundle, cut, "lookahead_src");
    const fs::path snap_short = scratch_dir("lookahead_short"), snap_full = scratch_dir("lookahead_full");
    ingest_manifest(load_manifest(short_dir / "manifest.json"), short_dir, snap_short);
    ingest_manifest(load_manifest(kBundle / "manifest.json"), kBundle, snap_full);
    const auto a = SnapshotStore::open(snap_short), b = SnapshotStore::open(snap_full);

    backtest::BacktestConfig bc;
    bc.lagged = true;
    bc.end = cut;
    const auto ra = backtest::run_backtest(a, bc), rb = backtest::run_backtest(b, bc);
    bool ok = ra.points.size() == rb.points.size() && !ra.points.empty() && ra.skipped.size() == rb.skipped.size();
    std::size_t diffs = 0;
    for (std::size_t i = 0; ok && i < ra.points.size(); ++i) {
        const auto &p = ra.points[i], &q = rb.points[i];
        if (p.date != q.date || !same_bits(p.asri, q.asri)) ++diffs;
        for (std::size_t k = 0; k < 4; ++k)
            if (!same_bits(p.sub[k], q.sub[k])) ++diffs;
        if (ra.breakdowns[i].to_json().dump() != rb.breakdowns[i].to_json().dump()) ++diffs;
    }
    ok = ok && diffs == 0;
    return {ok, std::to_string(ra.points.size()) + " lagged dates up to " + format_date(cut) + ", " +
                    std::to_string(diffs) + " differing values after appending " +
                    std::to_string(days_between(cut, b.date_range().second)) + " future days"};
}

// ------------------------------------------------------------------ 4
Outcome event_study_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const Date onset = make_date(2022, 6, 1);
    const CrisisEvent ev{"synthetic", onset, CrisisType::exogenous};
    const int seeds = 1000;
    int hits = 0, hits_full = 0;
    double cas_sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(std::uint64_t(s) + 1);
        const auto ts = shifted_series(rng, onset, 40.0, 2.0, 30.0);
        const auto r = cumulative_abnormal_signal(ts, ev);
        cas_sum += r.cas;
        if (std::abs(r.cas - 1230.0) <= 3.0 * r.se_cas && r.t_stat && *r.t_stat > 10.0) ++hits;
        // reference only: SE that also carries the estimation error of the baseline mean
        const double se_full = r.sigma_hat * std::sqrt(41.0 + 41.0 * 41.0 / double(r.n_estimation));
        if (std::abs(r.cas - 1230.0) <= 3.0 * se_full) ++hits_full;
    }
    // constant series
    const auto flat = make_series("flat", daily_dates(onset - Days{120}, 150), std::vector<double>(150, 40.0));
    const auto rf = cumulative_abnormal_signal(flat, ev);
    bool degenerate = false;
    try {
        (void)rf.t();
    } catch (const Error& e) {
        degenerate = e.kind() == ErrorKind::degenerate;
    }
    const double secs = seconds_since(t0);
    const double rate = double(hits) / seeds;
    return {rate >= 0.99 && rf.cas == 0.0 && degenerate && secs < 10.0,
            "within 3 SE and t>10 in " + fmt(100 * rate, 1) + "% of " + std::to_string(seeds) +
                " seeds (mean CAS " + fmt(cas_sum / seeds, 1) + "; " + fmt(100.0 * hits_full / seeds, 1) +
                "% with the baseline-error SE); flat CAS=" + fmt(rf.cas, 1) +
                (degenerate ? ", t degenerate" : ", t NOT flagged") + "; " + fmt(secs, 2) + "s"};
}

// ------------------------------------------------------------------ 5
Outcome bootstrap_exact() {
    const Date onset = make_date(2022, 6, 1);
    const CrisisEvent ev{"synthetic", onset, CrisisType::exogenous};
    Rng rng(5);
    const auto ts = shifted_series(rng, onset, 45.0, 3.0, 12.0);
    EventStudyConfig cfg;
    const std::size_t n_est = std::size_t(cfg.estimation_end - cfg.estimation_start + 1);
    BootstrapConfig bc;
    bc.block = n_est;
    bc.n_resamples = 500;
    const auto r = block_bootstrap_detection(ts, ev, bc, cfg);
    const double mu = estimate_baseline(ts, ev, cfg).mu;
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < r.resample_mu.size(); ++i) {
        if (!same_bits(r.resample_mu[i], mu) || !same_bits(r.resample_cas[i], r.cas_point)) ++mismatches;
        const bool l = !std::isnan(r.resample_lead[i]);
        if (l != r.lead_point.has_value() || (l && r.resample_lead[i] != double(*r.lead_point))) ++mismatches;
    }
    const bool reproduces = mismatches == 0 && r.resample_mu.size() == 500;

    const auto flat = make_series("flat", daily_dates(onset - Days{120}, 150), std::vector<double>(150, 55.0));
    BootstrapConfig fc;
    const auto f = block_bootstrap_detection(flat, ev, fc, cfg);
    const bool zero_width = f.mu_ci_lo == f.mu_ci_hi && f.cas_ci_lo == f.cas_ci_hi && f.lead_ci_lo && f.lead_ci_hi &&
                            *f.lead_ci_lo == *f.lead_ci_hi;
    return {reproduces && zero_width, std::to_string(mismatches) + " of 500 resamples differ at block=" +
                                          std::to_string(n_est) + "; constant-series CI widths mu=" +
                                          fmt(f.mu_ci_hi - f.mu_ci_lo, 6) + " cas=" + fmt(f.cas_ci_hi - f.cas_ci_lo, 6)};
}

// ------------------------------------------------------------------ 6
Outcome hmm_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(6);
    const auto data = regime_data(rng, 1500);
    hmm::FitOptions opt;
    opt.tol = 1e-8;
    const auto m = hmm::fit_hmm(data.x, 3, opt);
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < m.loglik_trace.size(); ++i)
        worst_drop = std::max(worst_drop, m.loglik_trace[i - 1] - m.loglik_trace[i]);
    const double acc = aligned_accuracy(data.states, argmax_rows(hmm::smooth_probs(m, data.x)), 3);
    const auto pi = hmm::ergodic_distribution(m.a);
    double resid = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < 3; ++i) v += pi[i] * m.a(i, j);
        resid = std::max(resid, std::abs(v - pi[j]));
    }
    const double secs = seconds_since(t0);
    return {worst_drop <= 1e-8 && acc >= 0.90 && resid <= 1e-8 && secs < 60.0,
            "max loglik decrease " + io::shortest(worst_drop) + " over " + std::to_string(m.loglik_trace.size()) +
                " iterations; smoothed accuracy " + fmt(100 * acc, 2) + "%; |piA-pi|=" + io::shortest(resid) + "; " +
                fmt(secs, 2) + "s"};
}

// ------------------------------------------------------------------ 7
Outcome gfevd_oracle() {
    const Matrix a{{0.5, 0.2}, {0.1, 0.4}};
    const Matrix sigma{{1.0, 0.3}, {0.3, 0.5}};
    const std::size_t H = 10;
    const auto f = dy::generalized_fevd({a}, sigma, H);

    // Monte Carlo: simulate H steps from a zero state; the endpoint is the H-step forecast error.
    // Variance share of i explained by the shock path of j = R^2 of that regression.
    const std::size_t n = 200000;
    Rng rng(7);
    const auto l = *linalg::cholesky(sigma);
    Matrix shocks0(n, H), shocks1(n, H);
    std::vector<double> e0(n), e1(n);
    for (std::size_t r = 0; r < n; ++r) {
        double y0 = 0.0, y1 = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const double z0 = rng.normal(), z1 = rng.normal();
            const double u0 = l(0, 0) * z0, u1 = l(1, 0) * z0 + l(1, 1) * z1;
            const double n0 = a(0, 0) * y0 + a(0, 1) * y1 + u0;
            const double n1 = a(1, 0) * y0 + a(1, 1) * y1 + u1;
            y0 = n0;
            y1 = n1;
            shocks0(r, h) = u0;
            shocks1(r, h) = u1;
        }
        e0[r] = y0;
        e1[r] = y1;
    }
    auto r2 = [&](const Matrix& u, const std::vector<double>& e) {
        Matrix x(n, H + 1, 1.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t h = 0; h < H; ++h) x(r, h + 1) = u(r, h);
        return linalg::ols(x, e).r2;
    };
    double mc[2][2] = {{r2(shocks0, e0), r2(shocks1, e0)}, {r2(shocks0, e1), r2(shocks1, e1)}};
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double row = mc[i][0] + mc[i][1];
        for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(100.0 * mc[i][j] / row - 100.0 * f.theta(i, j)));
    }

    // A = 0 and diagonal sigma: nothing spills over
    const auto z = dy::generalized_fevd({Matrix(3, 3)}, Matrix{{1.0, 0, 0}, {0, 2.0, 0}, {0, 0, 0.5}}, H);
    const double c0 = dy::total_connectedness(z.theta);

    // relabelling variables permutes the table and leaves the total unchanged
    const Matrix a3{{0.4, 0.1, -0.2}, {0.05, 0.3, 0.1}, {0.2, -0.1, 0.25}};
    const Matrix s3{{1.0, 0.2, 0.1}, {0.2, 0.8, -0.15}, {0.1, -0.15, 1.2}};
    const std::size_t perm[3] = {2, 0, 1};
    Matrix ap(3, 3), sp(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            ap(i, j) = a3(perm[i], perm[j]);
            sp(i, j) = s3(perm[i], perm[j]);
        }
    const auto f3 = dy::generalized_fevd({a3}, s3, H), fp = dy::generalized_fevd({ap}, sp, H);
    double perm_err = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) perm_err = std::max(perm_err, std::abs(fp.theta(i, j) - f3.theta(perm[i], perm[j])));
    const double tot_err = std::abs(dy::total_connectedness(f3.theta) - dy::total_connectedness(fp.theta));
    return {worst <= 2.0 && c0 == 0.0 && perm_err == 0.0 && tot_err == 0.0,
            "max |analytic - MC| " + fmt(worst, 3) + " pp; C(A=0)=" + io::shortest(c0) + "; permutation error " +
                io::shortest(perm_err) + " (cells), " + io::shortest(tot_err) + " (total)"};
}

// ------------------------------------------------------------------ 8
Outcome elastic_net_oracle() {
    Rng rng(8);
    const std::size_t n = 300, k = 4;
    Matrix x(n, k), xi(n, k + 1, 1.0);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.7;
        for (std::size_t j = 0; j < k; ++j) {
            x(i, j) = rng.normal() + (j > 0 ? 0.5 * x(i, j - 1) : 0.0);
            xi(i, j + 1) = x(i, j);
            v += (0.4 - 0.3 * double(j)) * x(i, j);
        }
        y[i] = v + rng.normal(0, 0.5);
    }
    const auto en = econ::elastic_net(x, y, 0.0, 0.5);
    const auto o = linalg::ols(xi, y);
    double diff = std::abs(en.intercept - o.coef[0]);
    for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(en.coef[j] - o.coef[j + 1]));

    std::size_t rises = 0, sweeps = 0;
    for (double alpha : {0.01, 0.1, 0.5})
        for (double l1 : {0.1, 0.5, 0.9}) {
            const auto f = econ::elastic_net(x, y, alpha, l1);
            sweeps += f.objective.size();
            for (std::size_t i = 1; i < f.objective.size(); ++i)
                if (f.objective[i] > f.objective[i - 1]) ++rises;
        }
    return {diff <= 1e-6 && rises == 0,
            "max |enet - ols| " + io::shortest(diff) + "; objective increases " + std::to_string(rises) + " of " +
                std::to_string(sweeps) + " sweeps"};
}

// ------------------------------------------------------------------ 9
Outcome unit_root_size_power() {
    const auto t0 = std::chrono::steady_clock::now();
    int adf_rw = 0, adf_ar = 0, kpss_rw = 0, kpss_ar = 0, l4_rw = 0, l4_ar = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(9000 + std::uint64_t(s));
        const auto rw = random_walk(rng, 500);
        const auto ar = ar1(rng, 500, 0.5);
        adf_rw += econ::adf_test(rw).reject(0.05) ? 1 : 0;
        adf_ar += econ::adf_test(ar).reject(0.05) ? 1 : 0;
        kpss_rw += econ::kpss_test(rw).stationary_5 ? 0 : 1;
        kpss_ar += econ::kpss_test(ar).stationary_5 ? 0 : 1;
        l4_rw += econ::kpss_test(rw, econ::KpssBandwidth::schwert_short).stationary_5 ? 0 : 1;
        l4_ar += econ::kpss_test(ar, econ::KpssBandwidth::schwert_short).stationary_5 ? 0 : 1;
    }
    const double secs = seconds_since(t0);
    auto pct = [&](int c) { return 100.0 * c / seeds; };
    return {pct(adf_rw) <= 10 && pct(adf_ar) >= 95 && pct(kpss_ar) <= 10 && pct(kpss_rw) >= 95 && secs < 60,
            "ADF reject RW " + fmt(pct(adf_rw), 1) + "%, AR(0.5) " + fmt(pct(adf_ar), 1) + "%; KPSS reject AR(0.5) " +
                fmt(pct(kpss_ar), 1) + "%, RW " + fmt(pct(kpss_rw), 1) + "% (fixed l4 bandwidth: " + fmt(pct(l4_ar), 1) +
                "%, " + fmt(pct(l4_rw), 1) + "%); " + fmt(secs, 2) + "s"};
}

// ------------------------------------------------------------------ bundled run shared by 10-14

struct BundledRun {
    bool ok = false;
    std::string error;
    fs::path snapshots, run1, run2;
    double seconds = 0.0;
};

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

std::string run_capture(const std::string& cmd, int* rc) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        *rc = -1;
        return out;
    }
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    *rc = pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

BundledRun& bundled() {
    static BundledRun r = [] {
        BundledRun b;
        b.snapshots = scratch_dir("cli_snapshots");
        const fs::path o1 = scratch_dir("cli_run1"), o2 = scratch_dir("cli_run2");
        const auto t0 = std::chrono::steady_clock::now();
        int rc = 0;
        run_capture(quote(kCli) + " --snapshots " + quote(b.snapshots) + " ingest --manifest " +
                        quote(kBundle / "manifest.json") + " >/dev/null",
                    &rc);
        if (rc != 0) {
            b.error = "ingest exited with " + std::to_string(rc);
            return b;
        }
        const std::string validate = quote(kCli) + " --snapshots " + quote(b.snapshots) + " validate all --seed 42 --events " +
                                     quote(kBundle / "events.csv") + " -o ";
        b.run1 = run_capture(validate + quote(o1), &rc);
        b.seconds = seconds_since(t0);
        if (rc != 0) {
            b.error = "validate exited with " + std::to_string(rc);
            return b;
        }
        b.run2 = run_capture(validate + quote(o2), &rc);
        if (rc != 0) {
            b.error = "second validate exited with " + std::to_string(rc);
            return b;
        }
        b.ok = true;
        return b;
    }();
    return r;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) m[fs::relative(e.path(), dir).generic_string()] = io::read_file(e.path());
    return m;
}

// ------------------------------------------------------------------ 10
Outcome determinism() {
    auto& b = bundled();
    if (!b.ok) return {false, b.error};
    const auto t1 = read_tree(b.run1), t2 = read_tree(b.run2);
    std::size_t differing = 0;
    for (auto& [k, v] : t1) {
        auto it = t2.find(k);
        if (it == t2.end() || it->second != v) ++differing;
    }
    std::size_t analyses = 0;
    for (auto& a : report::kAnalyses) analyses += fs::is_directory(b.run1 / a) ? 1 : 0;
    const bool schema_ok = report::schema_check(b.run1).empty();
    return {differing == 0 && t1.size() == t2.size() && analyses == report::kAnalyses.size() && schema_ok,
            std::to_string(t1.size()) + " files, " + std::to_string(differing) + " differ between runs; " +
                std::to_string(analyses) + "/" + std::to_string(report::kAnalyses.size()) + " analyses present; schema " +
                (schema_ok ? "ok" : "violations")};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    for (auto& line : io::read_lines(p)) {
        if (line.empty()) continue;
        std::vector<std::string> r;
        for (auto f : io::split(line, ',')) r.emplace_back(f);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::data, "missing column " + name);
    return std::size_t(it - header.begin());
}

// ------------------------------------------------------------------ 11
Outcome bundled_event_study() {
    auto& b = bundled();
    if (!b.ok) return {false, b.error};
    const auto t = read_csv(b.run1 / "eventstudy" / "event_study.csv");
    const auto ie = column(t[0], "event"), ic = column(t[0], "cas"), ip = column(t[0], "p_value");
    std::size_t sig = 0;
    std::string largest;
    double best = -1e300;
    std::string detail;
    for (std::size_t r = 1; r < t.size(); ++r) {
        const double p = io::parse_double(t[r][ip]), cas = io::parse_double(t[r][ic]);
        sig += p < 0.05 / double(t.size() - 1) ? 1 : 0;
        if (cas > best) {
            best = cas;
            largest = t[r][ie];
        }
        detail += t[r][ie] + " CAS " + fmt(cas, 1) + "; ";
    }
    return {sig == 4 && t.size() == 5 && largest == "FTX",
            std::to_string(sig) + "/4 significant at 0.0125; largest CAS " + largest + " (" + detail.substr(0, detail.size() - 2) + ")"};
}

// ------------------------------------------------------------------ 12
Outcome bundled_detection() {
    auto& b = bundled();
    if (!b.ok) return {false, b.error};
    const auto t = read_csv(b.run1 / "eventstudy" / "detection_matrix.csv");
    const auto ie = column(t[0], "event"), id = column(t[0], "detected"), it = column(t[0], "threshold");
    std::size_t det = 0;
    std::string missed;
    bool thr50 = true;
    for (std::size_t r = 1; r < t.size(); ++r) {
        thr50 = thr50 && io::parse_double(t[r][it]) == 50.0;
        if (t[r][id] == "true") ++det;
        else missed += (missed.empty() ? "" : ",") + t[r][ie];
    }
    return {thr50 && det == 3 && missed == "Terra/Luna", std::to_string(det) + "/4 detected at 50, missed: " + missed};
}

// ------------------------------------------------------------------ 13
Outcome bundled_connectedness() {
    auto& b = bundled();
    if (!b.ok) return {false, b.error};
    const auto j = nlohmann::json::parse(io::read_file(b.run1 / "connectedness" / "dy_summary.json"));
    const double mean = j["mean"];
    const std::size_t det = j["detected"];
    return {std::abs(mean - 28.7) <= 10.0 && det == 3,
            "mean connectedness " + fmt(mean, 2) + "% (target 28.7 +/- 10); detected " + std::to_string(det) +
                "/4 at mean+1sd = " + fmt(double(j["threshold"]), 2)};
}

// ------------------------------------------------------------------ 14
Outcome bundled_runtime() {
    auto& b = bundled();
    if (!b.ok) return {false, b.error};
    const auto t = read_csv(b.run1 / "eventstudy" / "decomposition.csv");
    return {b.seconds < 300.0 && t.size() > 1800,
            "ingest + " + std::to_string(t.size() - 1) + "-day backtest + all analyses in " + fmt(b.seconds, 2) + "s"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"axiom suite on 1000 random vectors", axioms},
        {"piecewise map continuity and clipping", piecewise_maps},
        {"no look-ahead under appended future data", no_look_ahead},
        {"event-study CAS oracle", event_study_oracle},
        {"block bootstrap exactness", bootstrap_exact},
        {"HMM monotone EM, recovery, stationarity", hmm_recovery},
        {"GFEVD Monte Carlo, null and permutation", gfevd_oracle},
        {"elastic net OLS limit and descent", elastic_net_oracle},
        {"ADF/KPSS size and power", unit_root_size_power},
        {"validate all is byte-deterministic", determinism},
        {"bundled: all events significant, FTX largest", bundled_event_study},
        {"bundled: 3/4 detected at 50, Terra missed", bundled_detection},
        {"bundled: connectedness mean and detection", bundled_connectedness},
        {"bundled: full run under 5 minutes", bundled_runtime},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - std::size_t(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
