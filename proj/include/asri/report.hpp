#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/aggregation.hpp"
#include "asri/backtest.hpp"
#include "asri/connectedness.hpp"
#include "asri/econometrics.hpp"
#include "asri/event_study.hpp"
#include "asri/regime_hmm.hpp"
#include "asri/snapshot_store.hpp"

namespace asri::report {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// Relative path -> file contents. Ordered, so writing and hashing are deterministic.
using Bundle = std::map<std::string, std::string>;

inline const std::vector<std::string> kAnalyses = {"eventstudy", "stationarity", "hmm",     "connectedness",
                                                   "weights",    "ablation",     "sensitivity", "walkforward",
                                                   "holdout",    "lag",          "placebo"};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct RunConfig {
    WeightVector weights;
    double threshold = 50.0;
    std::uint64_t seed = 42;
    int roc_window = 90;
    std::size_t placebo_dates = 500;
    std::size_t bootstrap_resamples = 500;
    std::size_t bootstrap_block = 20;
    std::size_t hmm_restarts = 10;
    std::size_t dy_window = 60;

    [[nodiscard]] Json to_json() const {
        return {{"weights", weights.values()},
                {"threshold", threshold},
                {"seed", seed},
                {"roc_window", roc_window},
                {"placebo_dates", placebo_dates},
                {"bootstrap_resamples", bootstrap_resamples},
                {"bootstrap_block", bootstrap_block},
                {"hmm_restarts", hmm_restarts},
                {"dy_window", dy_window}};
    }
};

// ---------------------------------------------------------------- formatting

inline std::string num(double v, int prec = 6) { return io::fixed(v, prec); }
inline std::string num(std::optional<double> v, int prec = 6) { return v ? io::fixed(*v, prec) : "NA"; }
inline std::string num(std::optional<int> v) { return v ? std::to_string(*v) : "NA"; }
inline std::string flag(bool b) { return b ? "true" : "false"; }

class Csv {
public:
    explicit Csv(std::string header) : text_(std::move(header) + "\n") {}
    template <class... T>
    Csv& row(const T&... f) {
        bool first = true;
        ((text_ += (first ? "" : ","), text_ += cell(f), first = false), ...);
        text_ += "\n";
        return *this;
    }
    [[nodiscard]] const std::string& str() const { return text_; }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v) { return num(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(bool b) { return flag(b); }
    static std::string cell(std::optional<int> v) { return num(v); }
    static std::string cell(std::optional<double> v) { return num(v); }
    static std::string cell(Date d) { return format_date(d); }
    std::string text_;
};

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- schemas

inline const std::map<std::string, std::string>& csv_schemas() {
    static const std::map<std::string, std::string> m = {
        {"asri.csv", kAsriCsvHeader},
        {"alerts.csv", "date,asri,previous_level,level"},
        {"skipped.csv", "date,reason"},
        {"aggregate.csv", "date,method,value"},
        {"event_study.csv",
         "event,onset,type,mu_hat,sigma_hat,n_estimation,n_event,cas,se_cas,t_stat,p_value,df,significant_bonferroni,"
         "lead_sigma,lead_threshold,peak,peak_date,ljung_box_q,ljung_box_p,ar1_phi,ar1_t,ar1_p"},
        {"detection_matrix.csv", "event,onset,threshold,detected,lead_threshold,lead_sigma"},
        {"bootstrap.csv",
         "event,lead_point,detection_rate,lead_ci_lo,lead_median,lead_ci_hi,mu_ci_lo,mu_ci_hi,cas_point,cas_ci_lo,cas_ci_hi"},
        {"roc.csv", "threshold,fpr,tpr"},
        {"pr.csv", "threshold,recall,precision"},
        {"decomposition.csv", "date,scr_contribution,dlr_contribution,cr_contribution,or_contribution,asri"},
        {"stationarity.csv",
         "series,n,adf_stat,adf_p,adf_lag,adf_cv5,kpss_stat,kpss_p,kpss_bandwidth,chow_f,chow_p,chow_break_date,"
         "cusum_max_ratio,cusum_crossed,ols_cusum_stat"},
        {"granger.csv", "cause,effect,lag,f,p_value"},
        {"collinearity.csv", "subindex,vif,eigenvalue,variance_share"},
        {"hmm_selection.csv", "k,log_likelihood,n_params,aic,bic"},
        {"hmm_regimes.csv", "state,frequency,mean_risk,persistence,expected_duration,ergodic"},
        {"var_lag_selection.csv", "p,aic,bic,hq,lr_stat,lr_p"},
        {"connectedness.csv", dy::kConnectednessCsvHeader},
        {"dy_window_sensitivity.csv", "window,n_points,mean,sd,min,max,threshold,detected,events,precision"},
        {"dy_detection.csv", "event,onset,detected,lead_days"},
        {"weights.csv", "method,scr,dlr,cr,or,rank_agreement_vs_theoretical"},
        {"ablation.csv", "excluded,w_scr,w_dlr,w_cr,w_or,detected,significant,mean_cas"},
        {"weight_perturbation.csv", "component,delta,w_scr,w_dlr,w_cr,w_or,detection_rate,mean_lead,rank_correlation"},
        {"threshold_sensitivity.csv",
         "threshold,tp,fp,fn,tn,precision,recall_day,recall_event,specificity,f1_day,f1_event"},
        {"forward_window_sensitivity.csv", "window,auroc,auprc,precision,recall_event,f1_event,mean_lead"},
        {"aggregation_comparison.csv", "method,mean,sd,max,events_detected"},
        {"walkforward.csv",
         "event,train_start,train_end,test_start,test_end,evaluated,skip_reason,oos_peak,lead_days,detected"},
        {"holdout.csv",
         "event,w_scr,w_dlr,w_cr,w_or,train_detected,train_mean_lead,peak_derived,peak_theoretical,lead_derived,"
         "lead_theoretical,detected_derived,detected_theoretical"},
        {"lag_comparison.csv", "event,peak_foresight,peak_lagged,lead_foresight,lead_lagged,degradation_pct"},
        {"placebo.csv", "date,t_stat,p_value"},
    };
    return m;
}

inline std::string hmm_states_header(std::size_t k) {
    std::string h = "date";
    for (std::size_t i = 1; i <= k; ++i) h += ",filtered_p" + std::to_string(i);
    for (std::size_t i = 1; i <= k; ++i) h += ",smoothed_p" + std::to_string(i);
    return h + ",viterbi_state";
}

// Problems found in one file; empty when it conforms.
inline std::vector<std::string> check_file(const std::string& name, std::string_view text) {
    std::vector<std::string> bad;
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
        try {
            const auto parsed = Json::parse(text);
            (void)parsed;
        } catch (const Json::parse_error& e) {
            bad.push_back(name + ": invalid JSON (" + e.what() + ")");
        }
        return bad;
    }
    if (name.size() <= 4 || name.substr(name.size() - 4) != ".csv") {
        bad.push_back(name + ": unexpected file type");
        return bad;
    }
    auto lines = io::split(text, '\n');
    if (lines.empty() || lines[0].empty()) {
        bad.push_back(name + ": empty file");
        return bad;
    }
    const std::string header(lines[0]);
    const auto& m = csv_schemas();
    if (name == "hmm_states.csv") {
        static const std::regex re("date(,filtered_p[0-9]+)+(,smoothed_p[0-9]+)+,viterbi_state");
        const auto fields = io::split(header, ',');
        const std::size_t k = (fields.size() - 2) / 2;
        if (!std::regex_match(header, re) || header != hmm_states_header(k)) bad.push_back(name + ": unexpected header");
    } else if (auto it = m.find(name); it == m.end()) {
        bad.push_back(name + ": no registered schema");
        return bad;
    } else if (header != it->second) {
        bad.push_back(name + ": header '" + header + "' differs from '" + it->second + "'");
    }
    const std::size_t cols = io::split(header, ',').size();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        if (io::split(lines[i], ',').size() != cols) {
            bad.push_back(name + ": row " + std::to_string(i) + " has the wrong field count");
            break;
        }
    }
    return bad;
}

inline std::vector<std::string> schema_check(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorKind::missing_data, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::string> bad;
    for (auto& p : files) {
        auto b = check_file(p.filename().string(), io::read_file(p));
        for (auto& s : b) bad.push_back(fs::relative(p, dir).string() + ": " + s);
    }
    return bad;
}

// ---------------------------------------------------------------- context

class Context {
public:
    Context(const SnapshotStore& store, std::vector<CrisisEvent> events, RunConfig cfg)
        : store_(store), events_(std::move(events)), cfg_(std::move(cfg)) {
        require(!events_.empty(), ErrorKind::missing_data, "event catalog is empty");
        backtest::BacktestConfig bc;
        bc.weights = cfg_.weights;
        foresight_ = backtest::run_backtest(store_, bc);
        require(!foresight_.points.empty(), ErrorKind::missing_data, "no index values could be computed");
        asri_ = asri_series(foresight_.points);
        sub_ = linalg::Matrix(foresight_.points.size(), 4);
        for (std::size_t t = 0; t < foresight_.points.size(); ++t) {
            dates_.push_back(foresight_.points[t].date);
            for (std::size_t k = 0; k < 4; ++k) sub_(t, k) = foresight_.points[t].sub[k];
        }
    }

    [[nodiscard]] const RunConfig& config() const { return cfg_; }
    [[nodiscard]] const std::vector<CrisisEvent>& events() const { return events_; }
    [[nodiscard]] const backtest::BacktestRun& foresight() const { return foresight_; }
    [[nodiscard]] const TimeSeries& asri() const { return asri_; }
    [[nodiscard]] const linalg::Matrix& sub() const { return sub_; }
    [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }

    const backtest::BacktestRun& lagged() {
        if (!lagged_) {
            backtest::BacktestConfig bc;
            bc.weights = cfg_.weights;
            bc.lagged = true;
            lagged_ = backtest::run_backtest(store_, bc);
        }
        return *lagged_;
    }

    [[nodiscard]] EventStudyConfig event_config() const {
        EventStudyConfig c;
        c.threshold = cfg_.threshold;
        return c;
    }

    [[nodiscard]] BootstrapConfig bootstrap_config() const {
        BootstrapConfig b;
        b.n_resamples = cfg_.bootstrap_resamples;
        b.block = cfg_.bootstrap_block;
        b.threshold = cfg_.threshold;
        b.seed = cfg_.seed;
        return b;
    }

private:
    const SnapshotStore& store_;
    std::vector<CrisisEvent> events_;
    RunConfig cfg_;
    backtest::BacktestRun foresight_;
    std::optional<backtest::BacktestRun> lagged_;
    TimeSeries asri_;
    linalg::Matrix sub_;
    std::vector<Date> dates_;
};

// ---------------------------------------------------------------- compute outputs

inline Bundle compute_outputs(const backtest::BacktestRun& run) {
    Bundle b;
    b["asri.csv"] = to_asri_csv(run.points);
    Json comps = Json::array();
    Csv alerts("date,asri,previous_level,level");
    for (std::size_t i = 0; i < run.points.size(); ++i) {
        const auto& p = run.points[i];
        Json j = run.breakdowns[i].to_json();
        j["date"] = format_date(p.date);
        j["asri"] = p.asri;
        j["alert"] = to_string(p.alert);
        comps.push_back(std::move(j));
        if (i > 0 && run.points[i - 1].alert != p.alert)
            alerts.row(p.date, p.asri, to_string(run.points[i - 1].alert), to_string(p.alert));
    }
    b["components.json"] = comps.dump() + "\n";
    b["alerts.csv"] = alerts.str();
    Csv sk("date,reason");
    for (auto& s : run.skipped) {
        std::string r = s.reason;
        std::replace(r.begin(), r.end(), ',', ';');
        sk.row(s.date, r);
    }
    b["skipped.csv"] = sk.str();
    return b;
}

// Alternative composites for comparison; linear stays the headline index.
inline Bundle aggregate_outputs(const std::vector<AsriPoint>& pts, const WeightVector& w, const std::string& method, double rho) {
    Csv c("date,method,value");
    if (method == "ciss") {
        std::vector<Date> d;
        std::vector<SubIndexVector> h;
        for (auto& p : pts) {
            d.push_back(p.date);
            h.push_back(p.sub);
        }
        for (auto& o : aggregate_ciss(d, h).points) c.row(o.date, method, o.value);
    } else {
        for (auto& p : pts) {
            double v = 0.0;
            if (method == "linear") v = p.asri;
            else if (method == "ces") v = aggregate_ces(p.sub, w, rho);
            else if (method == "geometric") v = aggregate_geometric(p.sub, w);
            else if (method == "max") v = aggregate_max(p.sub);
            else fail(ErrorKind::parameter, "unknown aggregator '" + method + "'");
            c.row(p.date, method, v);
        }
    }
    return {{"aggregate.csv", c.str()}};
}

// ---------------------------------------------------------------- analyses

inline Bundle analysis_eventstudy(Context& ctx) {
    const auto cfg = ctx.event_config();
    std::vector<EventStudyResult> res;
    std::vector<double> ps;
    for (auto& e : ctx.events()) {
        res.push_back(run_event_study(ctx.asri(), e, cfg));
        ps.push_back(res.back().p_value.value_or(1.0));
    }
    const auto sig = bonferroni(ps, cfg.alpha);
    Csv es(csv_schemas().at("event_study.csv"));
    Csv dm(csv_schemas().at("detection_matrix.csv"));
    Json summary;
    std::size_t n_sig = 0, n_det = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& r = res[i];
        const auto& e = ctx.events()[i];
        std::optional<double> lbq, lbp;
        if (r.ljung_box) {
            lbq = r.ljung_box->q;
            lbp = r.ljung_box->p_value;
        }
        std::optional<double> phi, at, ap;
        if (r.ar1.available) {
            phi = r.ar1.phi;
            at = r.ar1.t_stat;
            ap = r.ar1.p_value;
        }
        es.row(e.name, e.onset, to_string(e.type), r.mu_hat, r.sigma_hat, r.n_estimation, r.n_event, r.cas, r.se_cas,
               r.t_stat, r.p_value, r.df, bool(sig[i]), r.lead_time_sigma, r.lead_time_threshold, r.peak, r.peak_date, lbq,
               lbp, phi, at, ap);
        dm.row(e.name, e.onset, cfg.threshold, r.lead_time_threshold.has_value(), r.lead_time_threshold, r.lead_time_sigma);
        n_sig += sig[i] ? 1 : 0;
        n_det += r.lead_time_threshold ? 1 : 0;
    }
    std::size_t largest = 0;
    for (std::size_t i = 1; i < res.size(); ++i)
        if (res[i].cas > res[largest].cas) largest = i;
    summary["alpha"] = cfg.alpha;
    summary["bonferroni_alpha"] = cfg.alpha / double(res.size());
    summary["significant"] = n_sig;
    summary["detected_at_threshold"] = n_det;
    summary["events"] = res.size();
    summary["threshold"] = cfg.threshold;
    summary["largest_cas_event"] = res[largest].event;

    Csv bs(csv_schemas().at("bootstrap.csv"));
    const auto bc = ctx.bootstrap_config();
    for (auto& e : ctx.events()) {
        const auto b = block_bootstrap_detection(ctx.asri(), e, bc, cfg);
        bs.row(e.name, b.lead_point, b.detection_rate, b.lead_ci_lo, b.lead_median, b.lead_ci_hi, b.mu_ci_lo, b.mu_ci_hi,
               b.cas_point, b.cas_ci_lo, b.cas_ci_hi);
    }

    const auto labels = forward_crisis_labels(ctx.dates(), ctx.events(), ctx.config().roc_window);
    const auto rp = roc_pr_curves(ctx.asri().values(), labels);
    Csv roc("threshold,fpr,tpr"), pr("threshold,recall,precision");
    for (auto& p : rp.roc) roc.row(p.threshold, p.x, p.y);
    for (auto& p : rp.pr) pr.row(p.threshold, p.x, p.y);
    summary["roc"] = {{"label_window_days", ctx.config().roc_window},
                      {"auroc", rp.auroc},
                      {"auprc", rp.auprc},
                      {"youden_threshold", rp.youden_threshold},
                      {"youden_j", rp.youden_j}};
    const auto dmx = detection_metrics(ctx.asri(), ctx.events(), cfg.threshold, 30);
    summary["daily_confusion"] = {{"tp", dmx.tp},
                                  {"fp", dmx.fp},
                                  {"fn", dmx.fn},
                                  {"tn", dmx.tn},
                                  {"precision", dmx.precision},
                                  {"recall_event", dmx.recall_event}};

    Csv dec(csv_schemas().at("decomposition.csv"));
    for (auto& p : ctx.foresight().points)
        dec.row(p.date, p.contributions[0], p.contributions[1], p.contributions[2], p.contributions[3], p.asri);

    const auto v = ctx.asri().values();
    summary["descriptive"] = {{"n", v.size()},
                              {"mean", stats::mean(v)},
                              {"sd", stats::stddev(v)},
                              {"min", *std::min_element(v.begin(), v.end())},
                              {"max", *std::max_element(v.begin(), v.end())}};
    return {{"eventstudy/event_study.csv", es.str()},     {"eventstudy/detection_matrix.csv", dm.str()},
            {"eventstudy/bootstrap.csv", bs.str()},       {"eventstudy/roc.csv", roc.str()},
            {"eventstudy/pr.csv", pr.str()},              {"eventstudy/decomposition.csv", dec.str()},
            {"eventstudy/event_study.json", dump(summary)}};
}

inline Bundle analysis_stationarity(Context& ctx) {
    Csv st(csv_schemas().at("stationarity.csv"));
    std::vector<std::pair<std::string, std::vector<double>>> series = {{"asri", ctx.asri().values()}};
    for (std::size_t k = 0; k < 4; ++k) series.push_back({kSubIndexNames[k], ctx.sub().col(k)});
    // break candidate: the most severe catalogued event
    std::size_t brk = ctx.dates().size() / 2;
    Date brk_date = ctx.dates()[brk];
    {
        double best = -1;
        for (auto& e : ctx.events()) {
            auto it = std::lower_bound(ctx.dates().begin(), ctx.dates().end(), e.onset);
            if (it == ctx.dates().end()) continue;
            const auto r = cumulative_abnormal_signal(ctx.asri(), e, ctx.event_config());
            if (r.cas > best) {
                best = r.cas;
                brk = std::size_t(it - ctx.dates().begin());
                brk_date = *it;
            }
        }
    }
    for (auto& [name, y] : series) {
        const auto a = econ::adf_test(y);
        const auto k = econ::kpss_test(y);
        const auto c = econ::chow_test(y, brk);
        const auto cu = econ::cusum_test(y);
        st.row(name, y.size(), a.statistic, a.p_value, a.lag, a.cv5, k.statistic, k.p_value, k.bandwidth, c.f, c.p_value,
               brk_date, cu.max_ratio, !cu.crossings.empty(), cu.ols_statistic);
    }
    Csv gr(csv_schemas().at("granger.csv"));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            const auto g = econ::granger_test(ctx.sub().col(i), ctx.sub().col(j));
            gr.row(kSubIndexNames[i], kSubIndexNames[j], g.lag, g.f, g.p_value);
        }
    const auto col = econ::collinearity_diagnostics(ctx.sub());
    Csv cl(csv_schemas().at("collinearity.csv"));
    for (std::size_t k = 0; k < 4; ++k) cl.row(kSubIndexNames[k], col.vif[k], col.eigenvalues[k], col.variance_share[k]);
    Json j;
    j["condition_number"] = col.condition_number;
    j["chow_break_date"] = format_date(brk_date);
    Json corr = Json::array();
    for (std::size_t i = 0; i < 4; ++i) corr.push_back(std::vector<double>(col.correlation.row(i).begin(), col.correlation.row(i).end()));
    j["correlation"] = corr;
    return {{"stationarity/stationarity.csv", st.str()},
            {"stationarity/granger.csv", gr.str()},
            {"stationarity/collinearity.csv", cl.str()},
            {"stationarity/stationarity.json", dump(j)}};
}

inline Bundle analysis_hmm(Context& ctx) {
    hmm::FitOptions opt;
    opt.seed = ctx.config().seed;
    opt.restarts = ctx.config().hmm_restarts;
    Csv sel(csv_schemas().at("hmm_selection.csv"));
    std::optional<hmm::HmmModel> chosen;
    double best_bic = std::numeric_limits<double>::infinity();
    Json fits = Json::array();
    for (std::size_t k : {2, 3, 4}) {
        const auto m = hmm::fit_hmm(ctx.sub(), k, opt);
        const double p = double(m.n_parameters());
        const double aic = -2 * m.log_likelihood + 2 * p;
        const double bic = -2 * m.log_likelihood + p * std::log(double(ctx.sub().rows()));
        sel.row(k, m.log_likelihood, m.n_parameters(), aic, bic);
        // three regimes is the reporting model; selection criteria are shown alongside
        if (k == 3) chosen = m;
        best_bic = std::min(best_bic, bic);
    }
    const auto& m = *chosen;
    const auto filt = hmm::filter_probs(m, ctx.sub());
    const auto smooth = hmm::smooth_probs(m, ctx.sub());
    const auto path = hmm::viterbi(m, ctx.sub());
    Csv states(hmm_states_header(m.k));
    for (std::size_t t = 0; t < ctx.dates().size(); ++t) {
        std::string line = format_date(ctx.dates()[t]);
        for (std::size_t s = 0; s < m.k; ++s) line += "," + num(filt(t, s));
        for (std::size_t s = 0; s < m.k; ++s) line += "," + num(smooth(t, s));
        line += "," + std::to_string(path[t] + 1);
        states.row(line);
    }
    Csv reg(csv_schemas().at("hmm_regimes.csv"));
    std::vector<double> erg;
    Json model = m.to_json();
    try {
        erg = hmm::ergodic_distribution(m.a);
        model["ergodic"] = erg;
    } catch (const Error& e) {
        model["ergodic_error"] = e.what();
        erg.assign(m.k, std::numeric_limits<double>::quiet_NaN());
    }
    for (auto& r : hmm::summarize_regimes(m, ctx.sub()))
        reg.row(r.state + 1, r.frequency, r.mean_risk, r.persistence, r.expected_duration, erg[r.state]);
    model["state_order"] = "ascending mean risk";
    return {{"hmm/hmm_selection.csv", sel.str()},
            {"hmm/hmm_model.json", dump(model)},
            {"hmm/hmm_states.csv", states.str()},
            {"hmm/hmm_regimes.csv", reg.str()}};
}

inline Bundle analysis_connectedness(Context& ctx) {
    const auto ls = dy::select_lag(ctx.sub(), 3);
    Csv lag(csv_schemas().at("var_lag_selection.csv"));
    for (auto& r : ls.rows) {
        std::optional<double> s, p;
        if (!std::isnan(r.lr_stat)) {
            s = r.lr_stat;
            p = r.lr_p;
        }
        lag.row(r.p, r.aic, r.bic, r.hq, s, p);
    }
    const auto full = dy::fit_var(ctx.sub(), ls.chosen());
    Json fj = dy::fevd_to_json(dy::generalized_fevd(full, 10), {"scr", "dlr", "cr", "or"});
    fj["p"] = full.p;
    fj["spectral_radius"] = full.spectral_radius;
    fj["stable"] = full.stable();
    fj["chosen_p"] = {{"aic", ls.chosen_aic}, {"bic", ls.chosen_bic}, {"hq", ls.chosen_hq}};

    const auto roll = dy::rolling_connectedness(ctx.dates(), ctx.sub(), ctx.config().dy_window, 1, 10);
    const auto det = dy::dy_detection(roll.series, ctx.events());
    const auto det_exp = dy::dy_detection(roll.series, ctx.events(), true);
    Csv dd(csv_schemas().at("dy_detection.csv"));
    for (std::size_t i = 0; i < ctx.events().size(); ++i)
        dd.row(ctx.events()[i].name, ctx.events()[i].onset, det.metrics.lead_per_event[i].has_value(),
               det.metrics.lead_per_event[i]);
    const auto v = roll.series.values();
    Json summary;
    summary["window"] = ctx.config().dy_window;
    summary["mean"] = stats::mean(v);
    summary["sd"] = stats::stddev(v);
    summary["min"] = *std::min_element(v.begin(), v.end());
    summary["max"] = *std::max_element(v.begin(), v.end());
    summary["threshold"] = det.threshold;
    summary["detected"] = det.metrics.events_detected;
    summary["precision"] = det.metrics.precision;
    summary["expanding_detected"] = det_exp.metrics.events_detected;
    summary["expanding_precision"] = det_exp.metrics.precision;
    summary["failed_windows"] = roll.failed.size();
    summary["unstable_windows"] = roll.unstable.size();

    Csv ws(csv_schemas().at("dy_window_sensitivity.csv"));
    for (auto& r : dy::window_sensitivity(ctx.dates(), ctx.sub(), ctx.events()))
        ws.row(r.window, r.n_points, r.mean, r.sd, r.min, r.max, r.threshold, r.detected, r.events, r.precision);
    return {{"connectedness/var_lag_selection.csv", lag.str()},
            {"connectedness/fevd_full.json", dump(fj)},
            {"connectedness/connectedness.csv", dy::to_connectedness_csv(roll.series)},
            {"connectedness/dy_detection.csv", dd.str()},
            {"connectedness/dy_summary.json", dump(summary)},
            {"connectedness/dy_window_sensitivity.csv", ws.str()}};
}

inline Bundle analysis_weights(Context& ctx) {
    const auto labels = forward_crisis_labels(ctx.dates(), ctx.events(), 30);
    std::vector<double> y(labels.begin(), labels.end());
    std::vector<econ::WeightDerivation> ds = {econ::derive_weights_pca(ctx.sub()),
                                              econ::derive_weights_pca(ctx.sub(), econ::PcaBasis::covariance),
                                              econ::derive_weights_elastic_net(ctx.sub(), y),
                                              econ::derive_weights_critic(ctx.sub()), econ::derive_weights_entropy(ctx.sub())};
    Csv w(csv_schemas().at("weights.csv"));
    const auto& theo = ctx.config().weights.values();
    w.row("theoretical", theo[0], theo[1], theo[2], theo[3], 1.0);
    Json j = Json::object();
    for (auto& d : ds) {
        w.row(d.method, d.weights[0], d.weights[1], d.weights[2], d.weights[3], econ::weight_rank_agreement(d.weights, theo));
        j[d.method] = {{"weights", d.weights}, {"diagnostics", d.diagnostics}, {"flags", d.flags}};
    }
    j["elastic_net_target"] = "crisis onset within the next 30 days";
    return {{"weights/weights.csv", w.str()}, {"weights/weights.json", dump(j)}};
}

inline Bundle analysis_ablation(Context& ctx) {
    Csv a(csv_schemas().at("ablation.csv"));
    for (auto& r : backtest::ablation_study(ctx.foresight().points, ctx.events(), ctx.config().weights, ctx.event_config()))
        a.row(r.excluded, r.weights[0], r.weights[1], r.weights[2], r.weights[3], r.detected, r.significant, r.mean_cas);
    return {{"ablation/ablation.csv", a.str()}};
}

inline Bundle analysis_sensitivity(Context& ctx) {
    Csv wp(csv_schemas().at("weight_perturbation.csv"));
    for (auto& r : backtest::weight_perturbation(ctx.foresight().points, ctx.events(), ctx.config().weights,
                                                 {-0.15, -0.10, -0.05, 0.05, 0.10, 0.15}, ctx.bootstrap_config(),
                                                 ctx.event_config()))
        wp.row(kSubIndexNames[r.component], r.delta, r.weights[0], r.weights[1], r.weights[2], r.weights[3], r.detection_rate,
               r.mean_lead, r.rank_correlation);
    const auto ts = backtest::threshold_sensitivity(ctx.asri(), ctx.events());
    Csv th(csv_schemas().at("threshold_sensitivity.csv"));
    for (auto& m : ts.rows)
        th.row(m.threshold, m.tp, m.fp, m.fn, m.tn, m.precision, m.recall_day, m.recall_event, m.specificity, m.f1_day,
               m.f1_event);
    const auto fw = backtest::forward_window_sensitivity(ctx.asri(), ctx.events(), {14, 30, 60, 90}, ctx.config().threshold);
    Csv fc(csv_schemas().at("forward_window_sensitivity.csv"));
    for (auto& r : fw.rows)
        fc.row(r.window, r.auroc, r.auprc, r.metrics.precision, r.metrics.recall_event, r.metrics.f1_event, r.mean_lead);

    // alternative composites scored with the same threshold rule
    Csv ag(csv_schemas().at("aggregation_comparison.csv"));
    auto score = [&](const std::string& name, TimeSeries s) {
        const auto v = s.values();
        std::size_t det = 0;
        for (auto& e : ctx.events())
            if (lead_time_threshold(s, e, ctx.config().threshold, 30)) ++det;
        ag.row(name, stats::mean(v), stats::stddev(v), *std::max_element(v.begin(), v.end()), det);
    };
    const auto& pts = ctx.foresight().points;
    const auto& w = ctx.config().weights;
    auto build = [&](auto f) {
        TimeSeries s;
        for (auto& p : pts) s.points.push_back({p.date, f(p)});
        return s;
    };
    score("linear", ctx.asri());
    score("ces_rho_2", build([&](const AsriPoint& p) { return aggregate_ces(p.sub, w, 2.0); }));
    score("geometric", build([&](const AsriPoint& p) { return aggregate_geometric(p.sub, w); }));
    score("max", build([&](const AsriPoint& p) { return aggregate_max(p.sub); }));
    {
        std::vector<SubIndexVector> h;
        for (auto& p : pts) h.push_back(p.sub);
        score("ciss", aggregate_ciss(ctx.dates(), h));
    }
    Json j{{"best_threshold", ts.best_threshold}, {"best_forward_window", fw.best_window}};
    return {{"sensitivity/weight_perturbation.csv", wp.str()},
            {"sensitivity/threshold_sensitivity.csv", th.str()},
            {"sensitivity/forward_window_sensitivity.csv", fc.str()},
            {"sensitivity/aggregation_comparison.csv", ag.str()},
            {"sensitivity/sensitivity.json", dump(j)}};
}

inline Bundle analysis_walkforward(Context& ctx) {
    Csv c(csv_schemas().at("walkforward.csv"));
    std::size_t det = 0, ev = 0;
    for (auto& r : backtest::walk_forward(ctx.foresight().points, ctx.events(), ctx.config().weights, ctx.config().threshold)) {
        std::optional<double> peak;
        if (r.evaluated) peak = r.oos_peak;
        c.row(r.event, r.window.train_start, r.window.train_end, r.window.test_start, r.window.test_end, r.evaluated,
              r.skip_reason.empty() ? std::string("NA") : r.skip_reason, peak, r.lead, r.detected);
        det += r.detected ? 1 : 0;
        ev += r.evaluated ? 1 : 0;
    }
    Json j{{"evaluated", ev}, {"detected", det}, {"standardization", "50 + 10 z, training-window moments"}};
    return {{"walkforward/walkforward.csv", c.str()}, {"walkforward/walkforward.json", dump(j)}};
}

inline Bundle analysis_holdout(Context& ctx) {
    Csv c(csv_schemas().at("holdout.csv"));
    std::size_t match = 0;
    const auto rows = backtest::hold_one_out(ctx.foresight().points, ctx.events(), 0.05, ctx.config().threshold);
    for (auto& r : rows) {
        c.row(r.event, r.derived[0], r.derived[1], r.derived[2], r.derived[3], r.train_detected, r.train_mean_lead,
              r.peak_derived, r.peak_theoretical, r.lead_derived, r.lead_theoretical, r.detected_derived(),
              r.detected_theoretical());
        match += r.detected_derived() == r.detected_theoretical() ? 1 : 0;
    }
    Json j{{"events", rows.size()}, {"detection_matches_theoretical", match}, {"grid_points", backtest::simplex_grid().size()}};
    return {{"holdout/holdout.csv", c.str()}, {"holdout/holdout.json", dump(j)}};
}

inline Bundle analysis_lag(Context& ctx) {
    const auto& lagged = ctx.lagged();
    const auto cmp = backtest::lag_comparison(ctx.asri(), asri_series(lagged.points), ctx.events(), ctx.config().threshold);
    Csv c(csv_schemas().at("lag_comparison.csv"));
    for (auto& r : cmp.rows)
        c.row(r.event, r.peak_foresight, r.peak_lagged, r.lead_foresight, r.lead_lagged, r.degradation_pct);
    Json j{{"mean_degradation_pct", cmp.mean_degradation_pct},
           {"lagged_points", lagged.points.size()},
           {"lagged_skipped", lagged.skipped.size()}};
    return {{"lag/lag_comparison.csv", c.str()}, {"lag/lag_summary.json", dump(j)}};
}

inline Bundle analysis_placebo(Context& ctx) {
    const auto rep = placebo_study(ctx.asri(), ctx.config().placebo_dates, crisis_neighbourhoods(ctx.events()),
                                   ctx.config().seed, ctx.event_config());
    Csv c(csv_schemas().at("placebo.csv"));
    for (std::size_t i = 0; i < rep.dates.size(); ++i) {
        std::optional<double> t, p;
        if (!std::isnan(rep.t_stats[i])) {
            t = rep.t_stats[i];
            p = rep.p_values[i];
        }
        c.row(rep.dates[i], t, p);
    }
    Json j{{"seed", rep.seed},
           {"eligible_dates", rep.eligible},
           {"rejection_rate_05", rep.rejection_rate_05},
           {"rejection_rate_01", rep.rejection_rate_01},
           {"mean_abs_t", rep.mean_abs_t},
           {"max_abs_t", rep.max_abs_t}};
    return {{"placebo/placebo.csv", c.str()}, {"placebo/placebo.json", dump(j)}};
}

inline Bundle run_analysis(Context& ctx, const std::string& name) {
    if (name == "eventstudy") return analysis_eventstudy(ctx);
    if (name == "stationarity") return analysis_stationarity(ctx);
    if (name == "hmm") return analysis_hmm(ctx);
    if (name == "connectedness") return analysis_connectedness(ctx);
    if (name == "weights") return analysis_weights(ctx);
    if (name == "ablation") return analysis_ablation(ctx);
    if (name == "sensitivity") return analysis_sensitivity(ctx);
    if (name == "walkforward") return analysis_walkforward(ctx);
    if (name == "holdout") return analysis_holdout(ctx);
    if (name == "lag") return analysis_lag(ctx);
    if (name == "placebo") return analysis_placebo(ctx);
    fail(ErrorKind::parameter, "unknown analysis '" + name + "'");
}

// Expand "all" and reject unknown or empty selections.
inline std::vector<std::string> resolve_selection(const std::vector<std::string>& which) {
    require(!which.empty(), ErrorKind::parameter, "no analysis selected");
    std::vector<std::string> out;
    for (auto& w : which) {
        if (w == "all") {
            out = kAnalyses;
            break;
        }
        if (std::find(kAnalyses.begin(), kAnalyses.end(), w) == kAnalyses.end())
            fail(ErrorKind::parameter, "unknown analysis '" + w + "'");
        if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

inline Bundle run_validate(Context& ctx, const std::vector<std::string>& which, const std::string& input_digest) {
    const auto sel = resolve_selection(which);
    Bundle all;
    for (auto& a : sel) {
        auto b = run_analysis(ctx, a);
        all.insert(b.begin(), b.end());
    }
    Json meta;
    meta["seed"] = ctx.config().seed;
    meta["analyses"] = sel;
    meta["config"] = ctx.config().to_json();
    meta["input_digest"] = input_digest;
    meta["events"] = Json::array();
    for (auto& e : ctx.events()) meta["events"].push_back({{"name", e.name}, {"onset", format_date(e.onset)}});
    Json files = Json::object();
    for (auto& [k, v] : all) files[k] = hex(fnv1a(v));
    meta["files"] = files;
    all["metadata.json"] = dump(meta);
    return all;
}

// Stamp derived from inputs and configuration, so reruns land in the same place.
inline std::string run_stamp(const std::string& input_digest, const Json& extra) {
    return "run-" + hex(fnv1a(extra.dump(), fnv1a(input_digest))).substr(0, 12);
}

// Digest of every file in a snapshot directory, in path order.
inline std::string snapshot_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != ".writer.lock") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 1469598103934665603ULL;
    for (auto& p : files) {
        h = fnv1a(fs::relative(p, dir).generic_string(), h);
        h = fnv1a(io::read_file(p), h);
    }
    return hex(h);
}

inline void write_bundle(const fs::path& dir, const Bundle& b) {
    for (auto& [rel, text] : b) io::write_file(dir / rel, text);
}

}  // namespace asri::report
