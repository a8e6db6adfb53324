#include <catch2/catch_amalgamated.hpp>

#include "../support/synthetic.hpp"

using namespace asri;
using namespace asri::testing;
using Catch::Approx;
using linalg::Matrix;

namespace {

std::vector<double> white(Rng& rng, std::size_t n, double sd = 1.0) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.normal(0.0, sd));
    return v;
}

Matrix columns(const std::vector<std::vector<double>>& cols) {
    Matrix m(cols[0].size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < cols[j].size(); ++i) m(i, j) = cols[j][i];
    return m;
}

}  // namespace

TEST_CASE("ADF separates stationary from unit-root series") {
    Rng rng(101);
    int stat_rej = 0, rw_rej = 0;
    for (int s = 0; s < 50; ++s) {
        stat_rej += econ::adf_test(ar1(rng, 400, 0.5)).p_value < 0.05;
        rw_rej += econ::adf_test(random_walk(rng, 400)).p_value < 0.05;
    }
    CHECK(stat_rej >= 45);
    CHECK(rw_rej <= 8);
    CHECK_THROWS_AS(econ::adf_test(std::vector<double>(100, 3.0)), Error);
}

TEST_CASE("KPSS on white noise and on a trend") {
    Rng rng(202);
    int below = 0;
    for (int s = 0; s < 50; ++s) below += econ::kpss_test(white(rng, 500)).statistic < econ::kKpssCv5;
    CHECK(below >= 45);

    std::vector<double> trend;
    for (int t = 0; t < 500; ++t) trend.push_back(0.05 * t + rng.normal());
    const auto k = econ::kpss_test(trend);
    CHECK(k.statistic > econ::kKpssCv1);
    CHECK_FALSE(k.stationary_1);
    CHECK(k.p_value == Approx(0.01));
}

TEST_CASE("Chow test") {
    Rng rng(303);
    auto half = white(rng, 100);
    std::vector<double> same(half);
    same.insert(same.end(), half.begin(), half.end());
    CHECK(econ::chow_test(same, 100, econ::BreakModel::constant_mean).p_value > 0.99);

    auto shifted = white(rng, 200);
    for (std::size_t i = 100; i < 200; ++i) shifted[i] += 10.0;
    const auto c = econ::chow_test(shifted, 100, econ::BreakModel::constant_mean);
    CHECK(c.p_value < 0.001);
    CHECK(econ::chow_test(shifted, 100, econ::BreakModel::ar1).p_value < 0.001);
    CHECK_THROWS_AS(econ::chow_test(shifted, 1), Error);
}

TEST_CASE("CUSUM stability") {
    Rng rng(404);
    int quiet = 0;
    for (int s = 0; s < 50; ++s) quiet += econ::cusum_test(white(rng, 300)).crossings.empty();
    CHECK(quiet >= 45);

    auto y = white(rng, 300);
    for (std::size_t i = 150; i < 300; ++i) y[i] += 3.0;
    const auto r = econ::cusum_test(y);
    REQUIRE_FALSE(r.crossings.empty());
    CHECK(r.crossings.front() >= 150);
    CHECK(r.crossings.front() < 200);
    CHECK(r.ols_reject());
    CHECK(r.ols_argmax == Approx(150).margin(15));
}

TEST_CASE("Granger causality") {
    Rng rng(505);
    auto cause = white(rng, 400);
    std::vector<double> effect(400, 0.0);
    for (std::size_t t = 1; t < 400; ++t) effect[t] = 0.8 * cause[t - 1] + 0.3 * rng.normal();
    CHECK(econ::granger_test(cause, effect).p_value < 1e-10);
    auto unrelated = white(rng, 400);
    CHECK(econ::granger_test(unrelated, effect).p_value > 0.001);
}

TEST_CASE("collinearity diagnostics") {
    Rng rng(606);
    auto a = white(rng, 300), b = white(rng, 300), c = white(rng, 300);
    auto r = econ::collinearity_diagnostics(columns({a, b, c}));
    for (double v : r.vif) CHECK(v == Approx(1.0).margin(0.05));

    r = econ::collinearity_diagnostics(columns({a, b, a}));
    CHECK(std::isinf(r.vif[0]));
    CHECK(std::isinf(r.vif[2]));
    CHECK(r.vif[1] == Approx(1.0).margin(0.05));
}

TEST_CASE("PCA weights") {
    Rng rng(707);
    auto a = white(rng, 200);
    std::vector<double> shifted(a);
    for (auto& x : shifted) x = 2.0 * x + 1.0;
    const auto d = econ::derive_weights_pca(columns({a, a, shifted, a}));
    for (double w : d.weights) CHECK(w == Approx(0.25).margin(1e-9));
}

TEST_CASE("elastic net weights") {
    Rng rng(808);
    auto a = white(rng, 500), b = white(rng, 500), c = white(rng, 500), e = white(rng, 500);
    const auto d = econ::derive_weights_elastic_net(columns({a, b, c, e}), a);
    CHECK(d.weights[0] == Approx(1.0).margin(1e-6));
    CHECK(d.weights[1] == Approx(0.0).margin(1e-6));

    // coordinate descent: objective never rises
    const auto f = econ::elastic_net(columns({a, b, c, e}), b, 0.1, 0.5, 1e-12, 5000);
    for (std::size_t i = 1; i < f.objective.size(); ++i) CHECK(f.objective[i] <= f.objective[i - 1]);
    CHECK(f.converged);
    CHECK_THROWS_AS(econ::blocked_folds(3, 5), Error);
}

TEST_CASE("CRITIC weights") {
    Rng rng(909);
    auto a = white(rng, 4000), b = white(rng, 4000), c = white(rng, 4000), e = white(rng, 4000);
    auto d = econ::derive_weights_critic(columns({a, b, c, e}));
    for (double w : d.weights) CHECK(w == Approx(0.25).margin(0.02));

    d = econ::derive_weights_critic(columns({a, b, c, std::vector<double>(4000, 7.0)}));
    CHECK(d.weights[3] == 0.0);
    CHECK(d.weights[0] + d.weights[1] + d.weights[2] == Approx(1.0));
}

TEST_CASE("entropy weights") {
    Rng rng(111);
    std::vector<double> a;
    for (int i = 0; i < 300; ++i) a.push_back(rng.uniform(1, 100));
    auto d = econ::derive_weights_entropy(columns({a, a, a, a}));
    for (double w : d.weights) CHECK(w == Approx(0.25).margin(1e-12));
    CHECK(econ::weight_rank_agreement({0.3, 0.25, 0.25, 0.2}, {0.4, 0.3, 0.3, 0.0}) == Approx(1.0));
}
