#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include <doctest.h>

#include "psa/errors.hpp"
#include "psa/estimation.hpp"
#include "psa/tilt.hpp"

using namespace psa;

namespace {

EvaluatedSample tiny_sample() {
    // Four 1-d points; g <= 0 at rows 0 and 3.
    return EvaluatedSample({0.0, 1.0, 2.0, 3.0}, {-1.0, 1.0, 1.0, -1.0},
                           {DistributionSpec::normal(0, 1)}, std::nullopt);
}

TiltSolution identity_tilt(const DistributionSpec& d) {
    TiltSolution s;
    s.tau = 0.0;
    s.delta = 0.0;
    s.psi_tau = 0.0;
    s.perturbed = d;
    return s;
}

}  // namespace

TEST_CASE("pairwise_sum matches sequential sum and is order-fixed") {
    std::vector<double> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(1.0 / i);
    double seq = 0.0;
    for (double x : v) seq += x;
    CHECK(pairwise_sum(v) == doctest::Approx(seq).epsilon(1e-12));
    CHECK(pairwise_sum({}) == 0.0);
    CHECK(pairwise_sum({2.5}) == 2.5);
}

TEST_CASE("estimate_pf on hand-checkable samples") {
    const auto s = tiny_sample();
    const FailureEstimate e = estimate_pf(s);
    CHECK(e.p_hat == 0.5);
    CHECK(e.failures == 2);
    CHECK(e.n == 4);
    CHECK(e.var_hat == doctest::Approx(0.5 * 0.5 / 4.0).epsilon(1e-14));
    CHECK(e.ess == doctest::Approx(2.0));

    const EvaluatedSample safe({0.0, 1.0}, {0.5, 2.0}, {DistributionSpec::normal(0, 1)},
                               std::nullopt);
    const FailureEstimate z = estimate_pf(safe);
    CHECK(z.p_hat == 0.0);
    CHECK(z.failures == 0);
    CHECK(z.var_hat == 0.0);
}

TEST_CASE("identity tilt reproduces the plain estimate bit for bit") {
    const auto s = tiny_sample();
    const FailureEstimate plain = estimate_pf(s);
    const FailureEstimate rw =
        estimate_perturbed_pf(s, 0, identity_tilt(DistributionSpec::normal(0, 1)));
    CHECK(rw.p_hat == plain.p_hat);
    CHECK(rw.var_hat == plain.var_hat);
    CHECK(rw.ess == plain.ess);
}

TEST_CASE("reweighting with a known weight function") {
    // Base N(0,1), perturbed N(1,1): w(x) = exp(x - 1/2).
    const auto s = tiny_sample();
    TiltSolution t;
    t.tau = 1.0;
    t.delta = 0.5;
    t.psi_tau = 0.5;
    t.perturbed = DistributionSpec::normal(1, 1);
    const FailureEstimate e = estimate_perturbed_pf(s, 0, t);
    const double w0 = std::exp(0.0 - 0.5);
    const double w3 = std::exp(3.0 - 0.5);
    CHECK(e.p_hat == doctest::Approx((w0 + w3) / 4.0).epsilon(1e-14));
    const double m2 = (w0 * w0 + w3 * w3) / 4.0;
    CHECK(e.var_hat == doctest::Approx((m2 - e.p_hat * e.p_hat) / 4.0).epsilon(1e-12));
    CHECK(e.ess ==
          doctest::Approx((w0 + w3) * (w0 + w3) / (w0 * w0 + w3 * w3)).epsilon(1e-12));
}

TEST_CASE("interaction estimate") {
    const std::vector<double> pts = {0.0, 0.0, 1.0, -1.0, 2.0, 0.5, 3.0, 1.5};
    const EvaluatedSample s(pts, {-1.0, 1.0, 1.0, -1.0},
                            {DistributionSpec::normal(0, 1), DistributionSpec::normal(0, 1)},
                            std::nullopt);
    TiltSolution t;
    t.tau = 1.0;
    t.delta = 0.5;
    t.psi_tau = 0.5;
    t.perturbed = DistributionSpec::normal(1, 1);
    const TiltSolution id = identity_tilt(DistributionSpec::normal(0, 1));

    // Perturbing (i, identity_j) must equal the single-variable estimate exactly.
    const FailureEstimate both = estimate_interaction_pf(s, 0, 1, t, id);
    const FailureEstimate solo = estimate_perturbed_pf(s, 0, t);
    CHECK(both.p_hat == solo.p_hat);
    CHECK(both.var_hat == solo.var_hat);

    CHECK_THROWS_AS(estimate_interaction_pf(s, 1, 1, t, t), parameter_error);
}

TEST_CASE("index_variance and covariance formulas") {
    FailureEstimate pf;
    pf.p_hat = 0.01;
    pf.n = 1000;
    pf.var_hat = 0.01 * 0.99 / 1000.0;
    pf.failures = 10;

    FailureEstimate pd;
    pd.p_hat = 0.02;
    pd.n = 1000;
    pd.var_hat = 4e-5;
    pd.failures = 10;

    const IndexVariance v = index_variance(pf, pd);
    const double expect = pd.var_hat / (pf.p_hat * pf.p_hat) -
                          pd.p_hat * pd.p_hat * (1.0 - pf.p_hat) /
                              (1000.0 * pf.p_hat * pf.p_hat * pf.p_hat);
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-14));
    CHECK_FALSE(v.floored);

    // Force the plug-in difference negative: tiny var_hat, huge ratio term.
    FailureEstimate pd2 = pd;
    pd2.var_hat = 0.0;
    const IndexVariance v2 = index_variance(pf, pd2);
    CHECK(v2.value == 0.0);
    CHECK(v2.floored);

    CHECK(covariance_pf_pdelta(pf, pd) ==
          doctest::Approx(pd.p_hat * (1.0 - pf.p_hat) / 1000.0).epsilon(1e-14));
}

TEST_CASE("sensitivity_index core") {
    FailureEstimate pf;
    pf.p_hat = 0.01;
    pf.n = 100000;
    pf.var_hat = 0.01 * 0.99 / 100000.0;
    pf.failures = 1000;
    pf.ess = 1000.0;

    FailureEstimate pd;
    pd.p_hat = 0.02;
    pd.n = 100000;
    pd.var_hat = 6e-7;
    pd.failures = 1000;
    pd.ess = 400.0;

    const SensitivityRecord r = sensitivity_index(pd, pf);
    CHECK(r.s_hat == doctest::Approx(1.0).epsilon(1e-12));  // 0.02/0.01 - 1
    CHECK(r.ci_lo < r.s_hat);
    CHECK(r.ci_hi > r.s_hat);
    CHECK(r.ci_hi - r.s_hat == doctest::Approx(r.s_hat - r.ci_lo).epsilon(1e-12));
    CHECK_FALSE(r.low_ess);

    FailureEstimate starved = pd;
    starved.ess = 3.0;
    CHECK(sensitivity_index(starved, pf).low_ess);

    FailureEstimate zero;
    zero.n = 100;
    CHECK_THROWS_AS(sensitivity_index(pd, zero), undefined_index_error);
}

TEST_CASE("sweep basics") {
    // 1-d standard normal, failure iff x <= -1 => g = x + 1.
    std::vector<double> pts, gs;
    RngStream rng(123);
    const auto d = DistributionSpec::normal(0, 1);
    for (int k = 0; k < 20000; ++k) {
        const double x = sample_one(d, rng);
        pts.push_back(x);
        gs.push_back(x + 1.0);
    }
    const EvaluatedSample s(pts, gs, {d}, std::nullopt);

    CHECK(sweep(s, {}).empty());

    PlanEntry entry;
    entry.variables = {0};
    entry.mode_literal = "tilt.mean";
    entry.branches = {Branch::Negative, Branch::Positive};
    entry.deltas = {0.0, 0.1, 0.5};
    const auto recs = sweep(s, {entry});
    REQUIRE(recs.size() == 6);

    // delta = 0 cells are exact zeros on both branches.
    for (const auto& r : recs) {
        if (r.delta == 0.0) {
            CHECK(r.s_hat == 0.0);
            CHECK(r.std_err == 0.0);
            CHECK(r.tau == 0.0);
        }
    }
    // Shifting the mean down raises the failure probability.
    for (const auto& r : recs) {
        if (r.delta == 0.5) {
            if (r.branch == Branch::Negative)
                CHECK(r.s_hat > 0.2);
            else
                CHECK(r.s_hat < -0.2);
        }
    }
    // Sorted by (variable, mode, branch, delta).
    for (std::size_t i = 1; i < recs.size(); ++i) {
        const auto key = [](const SensitivityRecord& r) {
            return std::make_tuple(r.variable, r.mode_literal, r.branch, r.delta);
        };
        CHECK(key(recs[i - 1]) < key(recs[i]));
    }

    // Thread count must not change any numeric field.
    const auto recs8 = sweep(s, {entry}, 0.95, 8);
    REQUIRE(recs8.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(recs8[i].s_hat == recs[i].s_hat);
        CHECK(recs8[i].std_err == recs[i].std_err);
        CHECK(recs8[i].p_delta == recs[i].p_delta);
    }
}

TEST_CASE("sweep flags infeasible cells instead of dropping them") {
    std::vector<double> pts, gs;
    RngStream rng(5);
    const auto d = DistributionSpec::poisson(0.5);
    for (int k = 0; k < 2000; ++k) {
        const double x = sample_one(d, rng);
        pts.push_back(x);
        gs.push_back(2.5 - x);  // fails when x >= 3
    }
    const EvaluatedSample s(pts, gs, {d}, std::nullopt);
    PlanEntry entry;
    entry.variables = {0};
    entry.mode_literal = "tilt.rate";
    entry.branches = {Branch::Negative};
    entry.deltas = {0.8};  // exceeds lambda: no negative-branch root
    const auto recs = sweep(s, {entry});
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].infeasible);
    CHECK(std::isnan(recs[0].s_hat));
    CHECK(recs[0].flags().find("infeasible") != std::string::npos);
}

TEST_CASE("sweep throws undefined_index_error when no failures occur") {
    const EvaluatedSample s({0.0, 1.0}, {1.0, 2.0}, {DistributionSpec::normal(0, 1)},
                            std::nullopt);
    PlanEntry entry;
    entry.variables = {0};
    entry.mode_literal = "tilt.mean";
    entry.branches = {Branch::Positive};
    entry.deltas = {0.1};
    CHECK_THROWS_AS(sweep(s, {entry}), undefined_index_error);
}

TEST_CASE("EvaluatedSample validation") {
    CHECK_THROWS_AS(EvaluatedSample({}, {}, {DistributionSpec::normal(0, 1)}, std::nullopt),
                    parameter_error);
    CHECK_THROWS_AS(EvaluatedSample({1.0, 2.0}, {1.0}, {DistributionSpec::normal(0, 1)},
                                    std::nullopt),
                    parameter_error);
    CHECK_THROWS_AS(EvaluatedSample({1.0}, {1.0}, {}, std::nullopt), parameter_error);
}
