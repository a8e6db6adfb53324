#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "asri/core/error.hpp"
#include "asri/core/linalg.hpp"
#include "asri/core/rng.hpp"

namespace asri::hmm {

using linalg::Matrix;
using Json = nlohmann::json;

struct HmmModel {
    std::size_t k = 0;
    std::vector<double> pi;
    Matrix a;
    std::vector<std::vector<double>> means;
    std::vector<Matrix> covs;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;  // one entry per EM iteration of the winning restart
    std::vector<std::string> flags;

    [[nodiscard]] std::size_t dim() const { return means.empty() ? 0 : means[0].size(); }

    // Mean of the per-state means; states are ordered by this.
    [[nodiscard]] double mean_risk(std::size_t s) const {
        double m = 0.0;
        for (double v : means[s]) m += v;
        return m / double(means[s].size());
    }

    // Free parameters: initial distribution, transitions, means and full covariances.
    [[nodiscard]] std::size_t n_parameters() const {
        const std::size_t d = dim();
        return (k - 1) + k * (k - 1) + k * (d + d * (d + 1) / 2);
    }

    [[nodiscard]] Json to_json() const {
        Json j;
        j["K"] = k;
        j["pi"] = pi;
        Json rows = Json::array();
        for (std::size_t i = 0; i < k; ++i) rows.push_back(std::vector<double>(a.row(i).begin(), a.row(i).end()));
        j["A"] = rows;
        j["means"] = means;
        Json cv = Json::array();
        for (auto& c : covs) {
            Json m = Json::array();
            for (std::size_t i = 0; i < c.rows(); ++i) m.push_back(std::vector<double>(c.row(i).begin(), c.row(i).end()));
            cv.push_back(m);
        }
        j["covariances"] = cv;
        j["log_likelihood"] = log_likelihood;
        j["seed"] = seed;
        j["iterations"] = iterations;
        j["converged"] = converged;
        j["flags"] = flags;
        return j;
    }
};

struct FitOptions {
    std::size_t restarts = 10;
    double tol = 1e-4;
    int max_iter = 1000;
    std::uint64_t seed = 42;
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// log N(x_t; mu_k, Sigma_k) for every t, k.
inline Matrix log_emissions(const HmmModel& m, const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    Matrix lb(n, m.k);
    std::vector<double> diff(d);
    for (std::size_t s = 0; s < m.k; ++s) {
        auto l = linalg::cholesky(m.covs[s]);
        if (!l) fail(ErrorKind::degenerate, "HMM state covariance is not positive definite");
        const double logdet = linalg::log_det_from_cholesky(*l);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t i = 0; i < d; ++i) diff[i] = x(t, i) - m.means[s][i];
            const auto z = linalg::forward_subst(*l, diff);
            double q = 0.0;
            for (double v : z) q += v * v;
            lb(t, s) = -0.5 * (double(d) * kLog2Pi + logdet + q);
        }
    }
    return lb;
}

struct ForwardBackward {
    Matrix alpha;  // filtered
    Matrix gamma;  // smoothed
    Matrix xi_sum;
    double loglik = 0.0;
};

// Scaled forward pass; emissions are shifted by their per-step max before exponentiating.
inline double forward(const HmmModel& m, const Matrix& lb, Matrix& alpha, Matrix& bt, std::vector<double>& scale) {
    const std::size_t n = lb.rows(), k = m.k;
    alpha = Matrix(n, k);
    bt = Matrix(n, k);
    scale.assign(n, 0.0);
    double ll = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < k; ++s) mx = std::max(mx, lb(t, s));
        for (std::size_t s = 0; s < k; ++s) bt(t, s) = std::exp(lb(t, s) - mx);
        double c = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            double pred = 0.0;
            if (t == 0) pred = m.pi[s];
            else
                for (std::size_t r = 0; r < k; ++r) pred += alpha(t - 1, r) * m.a(r, s);
            alpha(t, s) = pred * bt(t, s);
            c += alpha(t, s);
        }
        if (!(c > 0) || !std::isfinite(c)) fail(ErrorKind::numerical, "HMM forward pass underflow");
        for (std::size_t s = 0; s < k; ++s) alpha(t, s) /= c;
        scale[t] = c;
        ll += mx + std::log(c);
    }
    return ll;
}

inline ForwardBackward forward_backward(const HmmModel& m, const Matrix& x) {
    const Matrix lb = log_emissions(m, x);
    const std::size_t n = x.rows(), k = m.k;
    ForwardBackward fb;
    Matrix bt;
    std::vector<double> c;
    fb.loglik = forward(m, lb, fb.alpha, bt, c);
    Matrix beta(n, k, 1.0);
    fb.xi_sum = Matrix(k, k);
    fb.gamma = Matrix(n, k);
    for (std::size_t t = n - 1; t-- > 0;) {
        for (std::size_t r = 0; r < k; ++r) {
            double s = 0.0;
            for (std::size_t q = 0; q < k; ++q) s += m.a(r, q) * bt(t + 1, q) * beta(t + 1, q);
            beta(t, r) = s / c[t + 1];
        }
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t q = 0; q < k; ++q)
                fb.xi_sum(r, q) += fb.alpha(t, r) * m.a(r, q) * bt(t + 1, q) * beta(t + 1, q) / c[t + 1];
    }
    for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            fb.gamma(t, r) = fb.alpha(t, r) * beta(t, r);
            s += fb.gamma(t, r);
        }
        for (std::size_t r = 0; r < k; ++r) fb.gamma(t, r) /= s;
    }
    return fb;
}

inline Matrix sample_covariance_ml(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> mu(d, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < d; ++i) mu[i] += x(t, i) / double(n);
    Matrix c(d, d);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) c(i, j) += (x(t, i) - mu[i]) * (x(t, j) - mu[j]) / double(n);
    return c;
}

// Reorder states by ascending mean risk.
inline void canonicalize(HmmModel& m) {
    std::vector<std::size_t> ord(m.k);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return m.mean_risk(a) < m.mean_risk(b); });
    HmmModel c = m;
    for (std::size_t i = 0; i < m.k; ++i) {
        c.pi[i] = m.pi[ord[i]];
        c.means[i] = m.means[ord[i]];
        c.covs[i] = m.covs[ord[i]];
        for (std::size_t j = 0; j < m.k; ++j) c.a(i, j) = m.a(ord[i], ord[j]);
    }
    m = std::move(c);
}

struct EmRun {
    HmmModel model;
    bool ok = false;
};

inline EmRun run_em(HmmModel m, const Matrix& x, const FitOptions& opt, double eps) {
    const std::size_t n = x.rows(), d = x.cols(), k = m.k;
    EmRun out;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iter; ++it) {
        ForwardBackward fb;
        try {
            fb = forward_backward(m, x);
        } catch (const Error&) {
            return out;
        }
        m.loglik_trace.push_back(fb.loglik);
        m.log_likelihood = fb.loglik;
        m.iterations = it + 1;
        if (it > 0 && std::abs(fb.loglik - prev) < opt.tol) {
            m.converged = true;
            break;
        }
        prev = fb.loglik;
        // M-step
        for (std::size_t s = 0; s < k; ++s) m.pi[s] = fb.gamma(0, s);
        for (std::size_t r = 0; r < k; ++r) {
            double row = 0.0;
            for (std::size_t q = 0; q < k; ++q) row += fb.xi_sum(r, q);
            if (row > 0)
                for (std::size_t q = 0; q < k; ++q) m.a(r, q) = fb.xi_sum(r, q) / row;
        }
        for (std::size_t s = 0; s < k; ++s) {
            double w = 0.0;
            std::vector<double> mu(d, 0.0);
            for (std::size_t t = 0; t < n; ++t) {
                w += fb.gamma(t, s);
                for (std::size_t i = 0; i < d; ++i) mu[i] += fb.gamma(t, s) * x(t, i);
            }
            if (!(w > 1e-10)) return out;  // empty state
            for (double& v : mu) v /= w;
            Matrix cov(d, d);
            for (std::size_t t = 0; t < n; ++t) {
                const double g = fb.gamma(t, s);
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j) cov(i, j) += g * (x(t, i) - mu[i]) * (x(t, j) - mu[j]);
            }
            cov *= 1.0 / w;
            if (!linalg::cholesky(cov)) {
                for (std::size_t i = 0; i < d; ++i) cov(i, i) += eps;
                if (!linalg::cholesky(cov)) return out;
                if (std::find(m.flags.begin(), m.flags.end(), "covariance_regularized") == m.flags.end())
                    m.flags.push_back("covariance_regularized");
            }
            m.means[s] = std::move(mu);
            m.covs[s] = std::move(cov);
        }
    }
    out.model = std::move(m);
    out.ok = true;
    return out;
}

}  // namespace detail

inline HmmModel fit_hmm(const Matrix& x, std::size_t k, const FitOptions& opt = {}) {
    const std::size_t n = x.rows(), d = x.cols();
    require(k >= 1, ErrorKind::parameter, "HMM needs at least one state");
    require(d >= 1, ErrorKind::parameter, "HMM needs at least one observed dimension");
    require(n > k * (d + d * (d + 1) / 2 + k), ErrorKind::insufficient_data, "too few observations for the HMM size");
    require(opt.restarts >= 1, ErrorKind::parameter, "HMM needs at least one restart");

    const Matrix global = detail::sample_covariance_ml(x);
    double mean_var = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean_var += global(i, i) / double(d);
    const double eps = 1e-6 * std::max(mean_var, 1e-300);

    if (k == 1) {
        HmmModel m;
        m.k = 1;
        m.seed = opt.seed;
        m.pi = {1.0};
        m.a = Matrix::identity(1);
        std::vector<double> mu(d, 0.0);
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t i = 0; i < d; ++i) mu[i] += x(t, i) / double(n);
        m.means = {mu};
        Matrix cov = global;
        if (!linalg::cholesky(cov)) {
            for (std::size_t i = 0; i < d; ++i) cov(i, i) += eps;
            m.flags.push_back("covariance_regularized");
        }
        m.covs = {cov};
        auto fb = detail::forward_backward(m, x);
        m.log_likelihood = fb.loglik;
        m.loglik_trace = {fb.loglik};
        m.iterations = 1;
        m.converged = true;
        return m;
    }

    Matrix init_cov = global;
    if (!linalg::cholesky(init_cov))
        for (std::size_t i = 0; i < d; ++i) init_cov(i, i) += eps;

    Rng rng(opt.seed);
    detail::EmRun best;
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        HmmModel m;
        m.k = k;
        m.seed = opt.seed;
        m.pi.assign(k, 1.0 / double(k));
        m.a = Matrix(k, k, 0.1 / double(k - 1));
        for (std::size_t i = 0; i < k; ++i) m.a(i, i) = 0.9;
        // distinct rows (by value) as starting means
        std::vector<std::size_t> picks;
        for (int tries = 0; picks.size() < k && tries < 10000; ++tries) {
            const std::size_t t = std::size_t(rng.below(n));
            bool dup = false;
            for (auto p : picks) {
                bool same = true;
                for (std::size_t i = 0; i < d; ++i)
                    if (x(p, i) != x(t, i)) same = false;
                if (same) dup = true;
            }
            if (!dup) picks.push_back(t);
        }
        if (picks.size() < k) fail(ErrorKind::degenerate, "fewer distinct observations than HMM states");
        for (auto p : picks) m.means.push_back(std::vector<double>(x.row(p).begin(), x.row(p).end()));
        m.covs.assign(k, init_cov);
        auto run = detail::run_em(std::move(m), x, opt, eps);
        if (!run.ok) continue;
        if (!best.ok || run.model.log_likelihood > best.model.log_likelihood) best = std::move(run);
    }
    if (!best.ok) fail(ErrorKind::numerical, "every HMM restart collapsed");
    detail::canonicalize(best.model);
    return best.model;
}

inline Matrix filter_probs(const HmmModel& m, const Matrix& x) {
    Matrix alpha, bt;
    std::vector<double> c;
    detail::forward(m, detail::log_emissions(m, x), alpha, bt, c);
    return alpha;
}

inline Matrix smooth_probs(const HmmModel& m, const Matrix& x) { return detail::forward_backward(m, x).gamma; }

inline double log_likelihood(const HmmModel& m, const Matrix& x) {
    Matrix alpha, bt;
    std::vector<double> c;
    return detail::forward(m, detail::log_emissions(m, x), alpha, bt, c);
}

inline std::vector<std::size_t> viterbi(const HmmModel& m, const Matrix& x) {
    const Matrix lb = detail::log_emissions(m, x);
    const std::size_t n = x.rows(), k = m.k;
    auto lg = [](double v) { return v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity(); };
    Matrix delta(n, k);
    std::vector<std::vector<std::size_t>> back(n, std::vector<std::size_t>(k, 0));
    for (std::size_t s = 0; s < k; ++s) delta(0, s) = lg(m.pi[s]) + lb(0, s);
    for (std::size_t t = 1; t < n; ++t)
        for (std::size_t s = 0; s < k; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t r = 0; r < k; ++r) {
                const double v = delta(t - 1, r) + lg(m.a(r, s));
                if (v > best) {
                    best = v;
                    arg = r;
                }
            }
            delta(t, s) = best + lb(t, s);
            back[t][s] = arg;
        }
    std::vector<std::size_t> path(n);
    std::size_t arg = 0;
    for (std::size_t s = 1; s < k; ++s)
        if (delta(n - 1, s) > delta(n - 1, arg)) arg = s;
    path[n - 1] = arg;
    for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
    return path;
}

struct SelectionRow {
    std::size_t k = 0;
    double loglik = 0.0;
    std::size_t n_params = 0;
    double aic = 0.0;
    double bic = 0.0;
};

inline std::vector<SelectionRow> select_k(const Matrix& x, const std::vector<std::size_t>& ks, const FitOptions& opt = {}) {
    std::vector<SelectionRow> rows;
    for (auto k : ks) {
        const HmmModel m = fit_hmm(x, k, opt);
        SelectionRow r;
        r.k = k;
        r.loglik = m.log_likelihood;
        r.n_params = m.n_parameters();
        r.aic = -2.0 * r.loglik + 2.0 * double(r.n_params);
        r.bic = -2.0 * r.loglik + double(r.n_params) * std::log(double(x.rows()));
        rows.push_back(r);
    }
    return rows;
}

// Stationary distribution of an irreducible row-stochastic matrix.
inline std::vector<double> ergodic_distribution(const Matrix& a, double tol = 1e-10) {
    const std::size_t k = a.rows();
    require(k >= 1 && a.cols() == k, ErrorKind::parameter, "transition matrix must be square");
    for (std::size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            require(a(i, j) >= 0, ErrorKind::parameter, "transition matrix has a negative entry");
            s += a(i, j);
        }
        require(std::abs(s - 1.0) <= 1e-9, ErrorKind::parameter, "transition matrix rows must sum to 1");
    }
    // reachability closure
    std::vector<std::vector<bool>> reach(k, std::vector<bool>(k, false));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) reach[i][j] = (i == j) || a(i, j) > 0;
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (reach[i][m] && reach[m][j]) reach[i][j] = true;
    bool irreducible = true;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (!reach[i][j]) irreducible = false;
    if (!irreducible) {
        // closed classes: a class C is closed when nothing outside C is reachable from it
        std::string msg = "reducible transition matrix; closed classes:";
        std::vector<bool> seen(k, false);
        for (std::size_t i = 0; i < k; ++i) {
            if (seen[i]) continue;
            std::vector<std::size_t> cls;
            for (std::size_t j = 0; j < k; ++j)
                if (reach[i][j] && reach[j][i]) cls.push_back(j);
            for (auto j : cls) seen[j] = true;
            bool closed = true;
            for (auto j : cls)
                for (std::size_t q = 0; q < k; ++q)
                    if (reach[j][q] && std::find(cls.begin(), cls.end(), q) == cls.end()) closed = false;
            if (!closed) continue;
            msg += " {";
            for (std::size_t c = 0; c < cls.size(); ++c) msg += (c ? "," : "") + std::to_string(cls[c]);
            msg += "}";
        }
        fail(ErrorKind::degenerate, msg);
    }
    // lazy chain (A + I) / 2 has the same stationary law and no periodicity
    std::vector<double> pi(k, 1.0 / double(k)), next(k);
    for (long it = 0; it < 100000000L; ++it) {
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.5 * pi[j];
            for (std::size_t i = 0; i < k; ++i) s += 0.5 * pi[i] * a(i, j);
            next[j] = s;
        }
        double tot = 0.0, diff = 0.0;
        for (double v : next) tot += v;
        for (std::size_t j = 0; j < k; ++j) {
            next[j] /= tot;
            diff += std::abs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (diff < tol) return pi;
    }
    fail(ErrorKind::numerical, "ergodic distribution did not converge");
}

struct RegimeSummary {
    std::size_t state = 0;
    double frequency = 0.0;  // share of days assigned by the smoothed posterior argmax
    double mean_risk = 0.0;
    double persistence = 0.0;
    double expected_duration = 0.0;
    std::vector<double> means;
};

inline std::vector<RegimeSummary> summarize_regimes(const HmmModel& m, const Matrix& x) {
    const Matrix g = smooth_probs(m, x);
    std::vector<std::size_t> count(m.k, 0);
    for (std::size_t t = 0; t < x.rows(); ++t) {
        std::size_t arg = 0;
        for (std::size_t s = 1; s < m.k; ++s)
            if (g(t, s) > g(t, arg)) arg = s;
        ++count[arg];
    }
    std::vector<RegimeSummary> out;
    for (std::size_t s = 0; s < m.k; ++s) {
        RegimeSummary r;
        r.state = s;
        r.frequency = double(count[s]) / double(x.rows());
        r.mean_risk = m.mean_risk(s);
        r.persistence = m.a(s, s);
        r.expected_duration = m.a(s, s) < 1.0 ? 1.0 / (1.0 - m.a(s, s)) : std::numeric_limits<double>::infinity();
        r.means = m.means[s];
        out.push_back(r);
    }
    return out;
}

}  // namespace asri::hmm
