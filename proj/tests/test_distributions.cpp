#include <cmath>
#include <vector>

#include <doctest.h>

#include "psa/distribution.hpp"
#include "psa/errors.hpp"
#include "psa/quadrature.hpp"
#include "psa/rng.hpp"

using namespace psa;

namespace {

// Quadrature/summation oracle for the cumulant function:
// log integral exp(tau T(t)) f(t) dt over the effective support.
double psi_oracle(const DistributionSpec& d, double tau, TiltComponent comp) {
    if (d.family == Family::Poisson) {
        const double cutoff =
            std::ceil(d.rate * std::exp(std::max(tau, 0.0)) + 20.0 * std::sqrt(d.rate) + 60.0);
        double sum = 0.0;
        for (double k = 0.0; k <= cutoff; k += 1.0)
            sum += std::exp(tau * k + log_density(d, k));
        return std::log(sum);
    }
    if (d.family == Family::Normal || d.family == Family::LogNormal) {
        // The tilted integrand is Gaussian in x (Normal) or in y = log x
        // (LogNormal); widen the domain to cover the tilted bell as well as
        // the base one. For the second component c = 1 - 2 tau sigma^2.
        double m = d.mu;
        double s = d.sigma;
        if (comp == TiltComponent::First) {
            m = d.mu + tau * d.sigma * d.sigma;
        } else {
            const double c = 1.0 - 2.0 * tau * d.sigma * d.sigma;
            REQUIRE(c > 0.0);
            m = d.mu / c;
            s = d.sigma / std::sqrt(c);
        }
        const double hw = 15.0 * std::max(s, d.sigma);
        const double lo = std::min(m, d.mu) - hw;
        const double hi = std::max(m, d.mu) + hw;
        if (d.family == Family::Normal) {
            auto f = [&](double x) {
                const double t = comp == TiltComponent::First ? x : x * x;
                return std::exp(tau * t + log_density(d, x));
            };
            return std::log(integrate(f, lo, hi, 1e-12));
        }
        auto f = [&](double y) {
            const double x = std::exp(y);
            const double t = comp == TiltComponent::First ? y : y * y;
            return std::exp(tau * t + log_density(d, x)) * x;
        };
        return std::log(integrate(f, lo, hi, 1e-12));
    }
    if (d.family == Family::Exponential) {
        // Tilted rate is lambda - tau.
        REQUIRE(tau < d.rate);
        const double hi = 60.0 / std::min(d.rate, d.rate - tau);
        auto f = [&](double x) { return std::exp(tau * x + log_density(d, x)); };
        return std::log(integrate(f, 0.0, hi, 1e-12));
    }
    const Interval r = effective_range(d);
    auto f = [&](double x) {
        const double t = sufficient_statistic(d, x, comp);
        const double ld = log_density(d, x);
        return std::isfinite(ld) ? std::exp(tau * t + ld) : 0.0;
    };
    return std::log(integrate(f, r.lo, r.hi, 1e-12));
}

std::vector<DistributionSpec> all_families() {
    return {DistributionSpec::normal(0.3, 1.4),
            DistributionSpec::lognormal(0.1, 0.5),
            DistributionSpec::exponential(2.0),
            DistributionSpec::poisson(3.0),
            DistributionSpec::uniform(-1.0, 2.0),
            DistributionSpec::triangular(-1.0, 0.5, 2.0),
            DistributionSpec::truncnormal(0.0, 1.0, -1.0, 1.0),
            DistributionSpec::tilted_uniform(-1.0, 1.0, 0.8)};
}

}  // namespace

TEST_CASE("log_density spot values") {
    CHECK(log_density(DistributionSpec::normal(0, 1), 0.0) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
    CHECK(log_density(DistributionSpec::uniform(-1, 1), 0.0) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(log_density(DistributionSpec::exponential(2), 1.0) ==
          doctest::Approx(std::log(2.0) - 2.0).epsilon(1e-12));
    CHECK(log_density(DistributionSpec::uniform(0, 1), 1.5) ==
          -std::numeric_limits<double>::infinity());
    CHECK(log_density(DistributionSpec::poisson(3), 2.5) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("densities are normalized") {
    for (const auto& d : all_families()) {
        CAPTURE(format_distribution(d));
        double total;
        if (d.family == Family::Poisson) {
            const double cutoff = effective_range(d).hi;
            total = 0.0;
            for (double k = 0.0; k <= cutoff; k += 1.0) total += std::exp(log_density(d, k));
        } else if (d.family == Family::LogNormal) {
            auto f = [&](double y) {
                const double x = std::exp(y);
                return std::exp(log_density(d, x)) * x;
            };
            total = integrate(f, d.mu - 12.0 * d.sigma, d.mu + 12.0 * d.sigma, 1e-12);
        } else {
            const Interval r = effective_range(d);
            auto f = [&](double x) {
                const double ld = log_density(d, x);
                return std::isfinite(ld) ? std::exp(ld) : 0.0;
            };
            total = integrate(f, r.lo, r.hi, 1e-12);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("mean and variance agree with quadrature") {
    for (const auto& d : all_families()) {
        CAPTURE(format_distribution(d));
        if (d.family == Family::Poisson) continue;
        const Interval r = d.family == Family::LogNormal
                               ? Interval{std::exp(d.mu - 12.0 * d.sigma),
                                          std::exp(d.mu + 12.0 * d.sigma)}
                               : effective_range(d);
        auto moment = [&](int k) {
            return integrate(
                [&](double x) {
                    const double ld = log_density(d, x);
                    return std::isfinite(ld) ? std::pow(x, k) * std::exp(ld) : 0.0;
                },
                r.lo, r.hi, 1e-12);
        };
        const double m1 = moment(1);
        const double m2 = moment(2);
        CHECK(mean(d) == doctest::Approx(m1).epsilon(1e-7));
        CHECK(variance(d) == doctest::Approx(m2 - m1 * m1).epsilon(1e-6));
    }
}

TEST_CASE("sufficient statistics per family") {
    CHECK(sufficient_statistic(DistributionSpec::normal(0, 1), 2.0, TiltComponent::Second) == 4.0);
    CHECK(sufficient_statistic(DistributionSpec::lognormal(0, 1), std::exp(1.0),
                               TiltComponent::First) == doctest::Approx(1.0));
    CHECK(sufficient_statistic(DistributionSpec::exponential(1), 0.7, TiltComponent::First) ==
          0.7);
    CHECK_THROWS_AS(
        sufficient_statistic(DistributionSpec::exponential(1), 0.7, TiltComponent::Second),
        std::domain_error);
    CHECK_THROWS_AS(
        sufficient_statistic(DistributionSpec::triangular(0, 0.5, 1), 0.7, TiltComponent::First),
        std::domain_error);
}

TEST_CASE("psi at zero and identities") {
    struct Case {
        DistributionSpec dist;
        TiltComponent comp;
    };
    const std::vector<Case> cases = {
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::First},
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::Second},
        {DistributionSpec::lognormal(0.1, 0.5), TiltComponent::First},
        {DistributionSpec::exponential(2.0), TiltComponent::First},
        {DistributionSpec::poisson(3.0), TiltComponent::First},
        {DistributionSpec::uniform(-1.0, 2.0), TiltComponent::First},
    };
    for (const auto& c : cases) {
        CAPTURE(format_distribution(c.dist));
        CHECK(std::abs(cumulant_psi(c.dist, 0.0, c.comp)) < 1e-10);
        const PsiDerivatives der = psi_derivatives(c.dist, 0.0, c.comp);
        if (c.comp == TiltComponent::First && c.dist.family != Family::LogNormal) {
            CHECK(der.psi1 == doctest::Approx(mean(c.dist)).epsilon(1e-10));
            CHECK(der.psi2 == doctest::Approx(variance(c.dist)).epsilon(1e-10));
        }
    }
    // Closed-form example: Normal(3,2) first component at tau = 1.
    CHECK(cumulant_psi(DistributionSpec::normal(3, 2), 1.0, TiltComponent::First) ==
          doctest::Approx(5.0).epsilon(1e-14));
    // Uniform(-1,1) at tau = 1: log((e - 1/e)/2).
    CHECK(cumulant_psi(DistributionSpec::uniform(-1, 1), 1.0, TiltComponent::First) ==
          doctest::Approx(std::log((std::exp(1.0) - std::exp(-1.0)) / 2.0)).epsilon(1e-12));
}

TEST_CASE("psi agrees with the quadrature oracle") {
    struct Case {
        DistributionSpec dist;
        TiltComponent comp;
        std::vector<double> taus;
    };
    const std::vector<Case> cases = {
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::First, {-1.0, -0.2, 0.4, 1.2}},
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::Second, {-0.8, -0.1, 0.1, 0.2}},
        {DistributionSpec::lognormal(0.1, 0.5), TiltComponent::First, {-1.0, 0.5, 1.5}},
        {DistributionSpec::lognormal(0.1, 0.5), TiltComponent::Second, {-0.5, 0.3, 1.0}},
        {DistributionSpec::exponential(2.0), TiltComponent::First, {-3.0, -0.5, 0.5, 1.5}},
        {DistributionSpec::poisson(3.0), TiltComponent::First, {-1.0, -0.2, 0.3, 0.8}},
        {DistributionSpec::uniform(-1.0, 2.0), TiltComponent::First, {-2.0, -1e-8, 1e-8, 1.7}},
    };
    for (const auto& c : cases) {
        for (double tau : c.taus) {
            CAPTURE(format_distribution(c.dist));
            CAPTURE(tau);
            const double closed = cumulant_psi(c.dist, tau, c.comp);
            const double oracle = psi_oracle(c.dist, tau, c.comp);
            CHECK(std::abs(closed - oracle) < 1e-7);
        }
    }
}

TEST_CASE("psi derivatives agree with central differences") {
    struct Case {
        DistributionSpec dist;
        TiltComponent comp;
        double tau;
    };
    const std::vector<Case> cases = {
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::First, 0.7},
        {DistributionSpec::normal(0.3, 1.4), TiltComponent::Second, 0.15},
        {DistributionSpec::lognormal(0.1, 0.5), TiltComponent::Second, 0.6},
        {DistributionSpec::exponential(2.0), TiltComponent::First, 0.9},
        {DistributionSpec::poisson(3.0), TiltComponent::First, 0.4},
        {DistributionSpec::uniform(0.0, 1.0), TiltComponent::First, 0.5},
    };
    const double h = 1e-5;
    for (const auto& c : cases) {
        CAPTURE(format_distribution(c.dist));
        const PsiDerivatives der = psi_derivatives(c.dist, c.tau, c.comp);
        const double p = cumulant_psi(c.dist, c.tau + h, c.comp);
        const double m = cumulant_psi(c.dist, c.tau - h, c.comp);
        const double mid = cumulant_psi(c.dist, c.tau, c.comp);
        const double fd1 = (p - m) / (2.0 * h);
        const double fd2 = (p - 2.0 * mid + m) / (h * h);
        CHECK(std::abs(der.psi1 - fd1) < 1e-5 * std::max(1.0, std::abs(fd1)));
        CHECK(std::abs(der.psi2 - fd2) < 1e-4 * std::max(1.0, std::abs(fd2)));
        CHECK(der.psi2 > 0.0);  // psi is strictly convex on its domain
    }
}

TEST_CASE("psi domain errors name the constraint") {
    CHECK_THROWS_AS(cumulant_psi(DistributionSpec::exponential(2.0), 2.5, TiltComponent::First),
                    std::domain_error);
    CHECK_THROWS_AS(
        cumulant_psi(DistributionSpec::normal(0, 1), 0.6, TiltComponent::Second),
        std::domain_error);
}

TEST_CASE("sampling is deterministic and matches moments") {
    const std::size_t n = 100000;
    {
        RngStream rng(7);
        const auto xs = sample(DistributionSpec::uniform(0, 1), rng, n);
        double s = 0.0;
        for (double x : xs) s += x;
        CHECK(std::abs(s / n - 0.5) < 0.01);
    }
    {
        RngStream rng(7);
        const auto xs = sample(DistributionSpec::truncnormal(0, 1, -1, 1), rng, n);
        for (double x : xs) {
            REQUIRE(x >= -1.0);
            REQUIRE(x <= 1.0);
        }
    }
    {
        RngStream rng(7);
        const auto xs = sample(DistributionSpec::poisson(3), rng, n);
        double s = 0.0;
        for (double x : xs) s += x;
        CHECK(std::abs(s / n - 3.0) < 0.02);
    }
    {
        // Large-lambda path of the Poisson sampler.
        RngStream rng(11);
        const auto xs = sample(DistributionSpec::poisson(80), rng, 50000);
        double s = 0.0;
        for (double x : xs) s += x;
        CHECK(std::abs(s / 50000 - 80.0) < 0.25);
    }
    {
        RngStream a(42), b(42);
        const auto xs = sample(DistributionSpec::normal(0, 1), a, 1000);
        const auto ys = sample(DistributionSpec::normal(0, 1), b, 1000);
        CHECK(xs == ys);
    }
}

TEST_CASE("empirical distributions match log_density (tilted uniform, triangular)") {
    for (const auto& d : {DistributionSpec::tilted_uniform(-1, 1, 1.0),
                          DistributionSpec::triangular(-1, 0.5, 2)}) {
        CAPTURE(format_distribution(d));
        RngStream rng(99);
        const std::size_t n = 200000;
        const auto xs = sample(d, rng, n);
        // Compare the empirical CDF at a few points against quadrature.
        for (double q : {-0.5, 0.0, 0.5, 0.9}) {
            const double expect = integrate(
                [&](double x) { return std::exp(log_density(d, x)); }, d.a, q, 1e-10);
            std::size_t count = 0;
            for (double x : xs) count += x <= q;
            CHECK(std::abs(static_cast<double>(count) / n - expect) < 0.01);
        }
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(DistributionSpec::normal(0, -1), parameter_error);
    CHECK_THROWS_AS(DistributionSpec::exponential(0), parameter_error);
    CHECK_THROWS_AS(DistributionSpec::uniform(1, 1), parameter_error);
    CHECK_THROWS_AS(DistributionSpec::triangular(0, 2, 1), parameter_error);
    CHECK_THROWS_AS(DistributionSpec::truncnormal(0, 1, 2, 1), parameter_error);
}

TEST_CASE("distribution literals round-trip") {
    for (const auto& d : all_families()) {
        const DistributionSpec back = parse_distribution(format_distribution(d));
        CHECK(back == d);
    }
    CHECK(parse_distribution("normal(0, 1)").family == Family::Normal);
    CHECK_THROWS_AS(parse_distribution("gamma(1,1)"), parameter_error);
    CHECK_THROWS_AS(parse_distribution("normal(1)"), parameter_error);
    CHECK_THROWS_AS(parse_distribution("normal(a,b)"), parameter_error);
}
