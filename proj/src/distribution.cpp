#include "psa/distribution.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "psa/errors.hpp"
#include "psa/special.hpp"

namespace psa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cumulant function of the exponential tilt of U[a,b] and its derivatives,
// written in terms of w = tau*(b-a)/2 around the removable singularity at 0.
double uniform_psi(double a, double b, double tau) {
    const double m = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double w = tau * h;
    if (std::abs(w) < 1e-4) {
        const double w2 = w * w;
        return tau * m + w2 / 6.0 - w2 * w2 / 180.0;
    }
    return tau * m + std::log(std::sinh(w) / w);
}

double uniform_psi1(double a, double b, double tau) {
    const double m = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double w = tau * h;
    if (std::abs(w) < 1e-4) {
        const double w2 = w * w;
        return m + h * (w / 3.0 - w * w2 / 45.0);
    }
    return m + h * (1.0 / std::tanh(w) - 1.0 / w);
}

double uniform_psi2(double a, double b, double tau) {
    const double h = 0.5 * (b - a);
    const double w = tau * h;
    if (std::abs(w) < 1e-3) {
        const double w2 = w * w;
        return h * h * (1.0 / 3.0 - w2 / 15.0 + 2.0 * w2 * w2 / 189.0);
    }
    const double sh = std::sinh(w);
    return h * h * (1.0 / (w * w) - 1.0 / (sh * sh));
}

double trunc_norm_log_z(const DistributionSpec& d) {
    const double alpha = (d.a - d.mu) / d.sigma;
    const double beta = (d.b - d.mu) / d.sigma;
    return std::log(norm_cdf(beta) - norm_cdf(alpha));
}

double log_norm_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * M_PI); }

bool is_nonneg_integer(double x) { return x >= 0.0 && x == std::floor(x) && std::isfinite(x); }

}  // namespace

DistributionSpec DistributionSpec::normal(double mu, double sigma) {
    DistributionSpec d;
    d.family = Family::Normal;
    d.mu = mu;
    d.sigma = sigma;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::lognormal(double mu, double sigma) {
    DistributionSpec d;
    d.family = Family::LogNormal;
    d.mu = mu;
    d.sigma = sigma;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::exponential(double lambda) {
    DistributionSpec d;
    d.family = Family::Exponential;
    d.rate = lambda;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::poisson(double lambda) {
    DistributionSpec d;
    d.family = Family::Poisson;
    d.rate = lambda;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::uniform(double a, double b) {
    DistributionSpec d;
    d.family = Family::Uniform;
    d.a = a;
    d.b = b;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::triangular(double a, double c, double b) {
    DistributionSpec d;
    d.family = Family::Triangular;
    d.a = a;
    d.c = c;
    d.b = b;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::truncnormal(double mu, double sigma, double a, double b) {
    DistributionSpec d;
    d.family = Family::TruncatedNormal;
    d.mu = mu;
    d.sigma = sigma;
    d.a = a;
    d.b = b;
    validate(d);
    return d;
}

DistributionSpec DistributionSpec::tilted_uniform(double a, double b, double tau) {
    DistributionSpec d;
    d.family = Family::TiltedUniform;
    d.a = a;
    d.b = b;
    d.tau = tau;
    validate(d);
    return d;
}

void validate(const DistributionSpec& d) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw parameter_error(msg);
    };
    switch (d.family) {
        case Family::Normal:
        case Family::LogNormal:
            require(std::isfinite(d.mu), "location must be finite");
            require(d.sigma > 0.0 && std::isfinite(d.sigma), "scale must be > 0");
            break;
        case Family::Exponential:
        case Family::Poisson:
            require(d.rate > 0.0 && std::isfinite(d.rate), "rate must be > 0");
            break;
        case Family::Uniform:
        case Family::TiltedUniform:
            require(std::isfinite(d.a) && std::isfinite(d.b), "bounds must be finite");
            require(d.b > d.a, "bounds must satisfy b > a");
            require(std::isfinite(d.tau), "tilt parameter must be finite");
            break;
        case Family::Triangular:
            require(std::isfinite(d.a) && std::isfinite(d.b) && std::isfinite(d.c),
                    "bounds must be finite");
            require(d.b > d.a, "bounds must satisfy b > a");
            require(d.c >= d.a && d.c <= d.b, "mode must lie in [a, b]");
            break;
        case Family::TruncatedNormal:
            require(std::isfinite(d.mu), "location must be finite");
            require(d.sigma > 0.0 && std::isfinite(d.sigma), "scale must be > 0");
            require(std::isfinite(d.a) && std::isfinite(d.b), "bounds must be finite");
            require(d.b > d.a, "bounds must satisfy b > a");
            break;
    }
}

double log_density(const DistributionSpec& d, double x) {
    validate(d);
    switch (d.family) {
        case Family::Normal:
            return log_norm_pdf((x - d.mu) / d.sigma) - std::log(d.sigma);
        case Family::LogNormal:
            if (x <= 0.0) return -kInf;
            return log_norm_pdf((std::log(x) - d.mu) / d.sigma) - std::log(d.sigma) - std::log(x);
        case Family::Exponential:
            if (x < 0.0) return -kInf;
            return std::log(d.rate) - d.rate * x;
        case Family::Poisson:
            if (!is_nonneg_integer(x)) return -kInf;
            return x * std::log(d.rate) - d.rate - std::lgamma(x + 1.0);
        case Family::Uniform:
            if (x < d.a || x > d.b) return -kInf;
            return -std::log(d.b - d.a);
        case Family::Triangular: {
            if (x < d.a || x > d.b) return -kInf;
            const double span = d.b - d.a;
            if (x <= d.c) {
                if (d.c == d.a) return std::log(2.0 / span);  // x == a == c
                return std::log(2.0 * (x - d.a) / (span * (d.c - d.a)));
            }
            if (d.c == d.b) return std::log(2.0 / span);
            return std::log(2.0 * (d.b - x) / (span * (d.b - d.c)));
        }
        case Family::TruncatedNormal:
            if (x < d.a || x > d.b) return -kInf;
            return log_norm_pdf((x - d.mu) / d.sigma) - std::log(d.sigma) - trunc_norm_log_z(d);
        case Family::TiltedUniform:
            if (x < d.a || x > d.b) return -kInf;
            return d.tau * x - uniform_psi(d.a, d.b, d.tau) - std::log(d.b - d.a);
    }
    return -kInf;
}

double mean(const DistributionSpec& d) {
    switch (d.family) {
        case Family::Normal:
            return d.mu;
        case Family::LogNormal:
            return std::exp(d.mu + 0.5 * d.sigma * d.sigma);
        case Family::Exponential:
            return 1.0 / d.rate;
        case Family::Poisson:
            return d.rate;
        case Family::Uniform:
            return 0.5 * (d.a + d.b);
        case Family::Triangular:
            return (d.a + d.b + d.c) / 3.0;
        case Family::TruncatedNormal: {
            const double alpha = (d.a - d.mu) / d.sigma;
            const double beta = (d.b - d.mu) / d.sigma;
            const double z = norm_cdf(beta) - norm_cdf(alpha);
            const double pa = std::exp(log_norm_pdf(alpha));
            const double pb = std::exp(log_norm_pdf(beta));
            return d.mu + d.sigma * (pa - pb) / z;
        }
        case Family::TiltedUniform:
            return uniform_psi1(d.a, d.b, d.tau);
    }
    return 0.0;
}

double variance(const DistributionSpec& d) {
    switch (d.family) {
        case Family::Normal:
            return d.sigma * d.sigma;
        case Family::LogNormal: {
            const double s2 = d.sigma * d.sigma;
            return (std::exp(s2) - 1.0) * std::exp(2.0 * d.mu + s2);
        }
        case Family::Exponential:
            return 1.0 / (d.rate * d.rate);
        case Family::Poisson:
            return d.rate;
        case Family::Uniform: {
            const double span = d.b - d.a;
            return span * span / 12.0;
        }
        case Family::Triangular:
            return (d.a * d.a + d.b * d.b + d.c * d.c - d.a * d.b - d.a * d.c - d.b * d.c) / 18.0;
        case Family::TruncatedNormal: {
            const double alpha = (d.a - d.mu) / d.sigma;
            const double beta = (d.b - d.mu) / d.sigma;
            const double z = norm_cdf(beta) - norm_cdf(alpha);
            const double pa = std::exp(log_norm_pdf(alpha));
            const double pb = std::exp(log_norm_pdf(beta));
            const double r = (pa - pb) / z;
            return d.sigma * d.sigma * (1.0 + (alpha * pa - beta * pb) / z - r * r);
        }
        case Family::TiltedUniform:
            return uniform_psi2(d.a, d.b, d.tau);
    }
    return 0.0;
}

Interval support(const DistributionSpec& d) {
    switch (d.family) {
        case Family::Normal:
            return {-kInf, kInf};
        case Family::LogNormal:
            return {0.0, kInf};
        case Family::Exponential:
        case Family::Poisson:
            return {0.0, kInf};
        default:
            return {d.a, d.b};
    }
}

Interval effective_range(const DistributionSpec& d) {
    switch (d.family) {
        case Family::Normal:
            return {d.mu - 10.0 * d.sigma, d.mu + 10.0 * d.sigma};
        case Family::LogNormal:
            return {std::exp(d.mu - 10.0 * d.sigma), std::exp(d.mu + 10.0 * d.sigma)};
        case Family::Exponential:
            return {0.0, 45.0 / d.rate};
        case Family::Poisson:
            return {0.0, std::ceil(d.rate + 20.0 * std::sqrt(d.rate) + 30.0)};
        default:
            return {d.a, d.b};
    }
}

namespace {

double sample_poisson(double lambda, RngStream& rng) {
    if (lambda <= 30.0) {
        // Sequential inversion.
        const double u = rng.uniform();
        double p = std::exp(-lambda);
        double cum = p;
        double k = 0.0;
        while (u > cum && k < 10000.0) {
            k += 1.0;
            p *= lambda / k;
            cum += p;
        }
        return k;
    }
    // Hormann's PTRS transformed-rejection sampler.
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return k;
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        if (lhs <= k * log_lambda - lambda - std::lgamma(k + 1.0)) return k;
    }
}

}  // namespace

double sample_one(const DistributionSpec& d, RngStream& rng) {
    switch (d.family) {
        case Family::Normal:
            return d.mu + d.sigma * norm_quantile(rng.uniform());
        case Family::LogNormal:
            return std::exp(d.mu + d.sigma * norm_quantile(rng.uniform()));
        case Family::Exponential:
            return -std::log(rng.uniform()) / d.rate;
        case Family::Poisson:
            return sample_poisson(d.rate, rng);
        case Family::Uniform:
            return d.a + (d.b - d.a) * rng.uniform();
        case Family::Triangular: {
            const double u = rng.uniform();
            const double span = d.b - d.a;
            const double fc = (d.c - d.a) / span;
            if (u < fc) return d.a + std::sqrt(u * span * (d.c - d.a));
            return d.b - std::sqrt((1.0 - u) * span * (d.b - d.c));
        }
        case Family::TruncatedNormal: {
            const double alpha = (d.a - d.mu) / d.sigma;
            const double beta = (d.b - d.mu) / d.sigma;
            const double pa = norm_cdf(alpha);
            const double pb = norm_cdf(beta);
            const double u = pa + (pb - pa) * rng.uniform();
            double x = d.mu + d.sigma * norm_quantile(u);
            if (x < d.a) x = d.a;
            if (x > d.b) x = d.b;
            return x;
        }
        case Family::TiltedUniform: {
            const double u = rng.uniform();
            if (std::abs(d.tau) < 1e-12) return d.a + (d.b - d.a) * u;
            // Inverse CDF: F(x) = (e^{tau(x-a)} - 1) / (e^{tau(b-a)} - 1).
            const double x =
                d.a + std::log1p(u * std::expm1(d.tau * (d.b - d.a))) / d.tau;
            return std::min(std::max(x, d.a), d.b);
        }
    }
    return 0.0;
}

std::vector<double> sample(const DistributionSpec& d, RngStream& rng, std::size_t n) {
    if (n < 1) throw parameter_error("sample: n must be >= 1");
    validate(d);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = sample_one(d, rng);
    return out;
}

bool tilt_supported(Family family, TiltComponent comp) {
    switch (family) {
        case Family::Normal:
        case Family::LogNormal:
            return true;
        case Family::Exponential:
        case Family::Poisson:
        case Family::Uniform:
            return comp == TiltComponent::First;
        default:
            return false;
    }
}

bool boundary_shift_supported(Family family) {
    return family == Family::Uniform || family == Family::Triangular ||
           family == Family::TruncatedNormal;
}

double sufficient_statistic(const DistributionSpec& d, double x, TiltComponent comp) {
    if (!tilt_supported(d.family, comp))
        throw std::domain_error("sufficient_statistic: component not defined for this family");
    switch (d.family) {
        case Family::Normal:
            return comp == TiltComponent::First ? x : x * x;
        case Family::LogNormal: {
            if (x <= 0.0) throw std::domain_error("sufficient_statistic: x must be > 0");
            const double lx = std::log(x);
            return comp == TiltComponent::First ? lx : lx * lx;
        }
        default:
            return x;
    }
}

double cumulant_psi(const DistributionSpec& d, double tau, TiltComponent comp) {
    validate(d);
    if (!tilt_supported(d.family, comp))
        throw std::domain_error("cumulant_psi: tilt not defined for this family/component");
    switch (d.family) {
        case Family::Normal:
        case Family::LogNormal: {
            const double s2 = d.sigma * d.sigma;
            if (comp == TiltComponent::First) return d.mu * tau + 0.5 * tau * tau * s2;
            // T(x) = x^2: direct integration of exp(tau x^2) against N(mu, s2)
            // gives psi = mu^2 tau / (1 - 2 tau s2) - log(1 - 2 tau s2) / 2.
            // (The tilted variable is N(mu/c, s2/c) with c = 1 - 2 tau s2.)
            const double c = 1.0 - 2.0 * tau * s2;
            if (c <= 0.0)
                throw std::domain_error("cumulant_psi: requires 1 - 2*tau*sigma^2 > 0");
            return d.mu * d.mu * tau / c - 0.5 * std::log(c);
        }
        case Family::Exponential:
            if (tau >= d.rate)
                throw std::domain_error("cumulant_psi: requires tau < lambda");
            return std::log(d.rate / (d.rate - tau));
        case Family::Poisson:
            return d.rate * std::expm1(tau);
        case Family::Uniform:
            return uniform_psi(d.a, d.b, tau);
        default:
            throw std::domain_error("cumulant_psi: unsupported family");
    }
}

PsiDerivatives psi_derivatives(const DistributionSpec& d, double tau, TiltComponent comp) {
    validate(d);
    if (!tilt_supported(d.family, comp))
        throw std::domain_error("psi_derivatives: tilt not defined for this family/component");
    switch (d.family) {
        case Family::Normal:
        case Family::LogNormal: {
            const double s2 = d.sigma * d.sigma;
            if (comp == TiltComponent::First) return {d.mu + tau * s2, s2};
            const double c = 1.0 - 2.0 * tau * s2;
            if (c <= 0.0)
                throw std::domain_error("psi_derivatives: requires 1 - 2*tau*sigma^2 > 0");
            const double m2 = d.mu * d.mu;
            return {m2 / (c * c) + s2 / c,
                    4.0 * m2 * s2 / (c * c * c) + 2.0 * s2 * s2 / (c * c)};
        }
        case Family::Exponential: {
            if (tau >= d.rate)
                throw std::domain_error("psi_derivatives: requires tau < lambda");
            const double r = d.rate - tau;
            return {1.0 / r, 1.0 / (r * r)};
        }
        case Family::Poisson: {
            const double m = d.rate * std::exp(tau);
            return {m, m};
        }
        case Family::Uniform:
            return {uniform_psi1(d.a, d.b, tau), uniform_psi2(d.a, d.b, tau)};
        default:
            throw std::domain_error("psi_derivatives: unsupported family");
    }
}

namespace {

std::vector<double> parse_args(const std::string& literal, std::size_t open,
                               std::size_t close) {
    std::vector<double> args;
    std::string body = literal.substr(open + 1, close - open - 1);
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw parameter_error("bad distribution literal: " + literal);
        }
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw parameter_error("bad distribution literal: " + literal);
        args.push_back(v);
    }
    return args;
}

}  // namespace

DistributionSpec parse_distribution(const std::string& literal) {
    const std::size_t open = literal.find('(');
    const std::size_t close = literal.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw parameter_error("bad distribution literal: " + literal);
    std::string name = literal.substr(0, open);
    // trim
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
        name.erase(name.begin());
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
        name.pop_back();
    const std::vector<double> v = parse_args(literal, open, close);

    auto need = [&](std::size_t n) {
        if (v.size() != n)
            throw parameter_error("distribution " + name + " expects " + std::to_string(n) +
                                  " parameters");
    };
    if (name == "normal") { need(2); return DistributionSpec::normal(v[0], v[1]); }
    if (name == "lognormal") { need(2); return DistributionSpec::lognormal(v[0], v[1]); }
    if (name == "exponential") { need(1); return DistributionSpec::exponential(v[0]); }
    if (name == "poisson") { need(1); return DistributionSpec::poisson(v[0]); }
    if (name == "uniform") { need(2); return DistributionSpec::uniform(v[0], v[1]); }
    if (name == "triangular") { need(3); return DistributionSpec::triangular(v[0], v[1], v[2]); }
    if (name == "truncnormal") {
        need(4);
        return DistributionSpec::truncnormal(v[0], v[1], v[2], v[3]);
    }
    if (name == "tilteduniform") {
        need(3);
        return DistributionSpec::tilted_uniform(v[0], v[1], v[2]);
    }
    throw parameter_error("unknown distribution family: " + name);
}

std::string format_distribution(const DistributionSpec& d) {
    char buf[160];
    switch (d.family) {
        case Family::Normal:
            std::snprintf(buf, sizeof buf, "normal(%.17g,%.17g)", d.mu, d.sigma);
            break;
        case Family::LogNormal:
            std::snprintf(buf, sizeof buf, "lognormal(%.17g,%.17g)", d.mu, d.sigma);
            break;
        case Family::Exponential:
            std::snprintf(buf, sizeof buf, "exponential(%.17g)", d.rate);
            break;
        case Family::Poisson:
            std::snprintf(buf, sizeof buf, "poisson(%.17g)", d.rate);
            break;
        case Family::Uniform:
            std::snprintf(buf, sizeof buf, "uniform(%.17g,%.17g)", d.a, d.b);
            break;
        case Family::Triangular:
            std::snprintf(buf, sizeof buf, "triangular(%.17g,%.17g,%.17g)", d.a, d.c, d.b);
            break;
        case Family::TruncatedNormal:
            std::snprintf(buf, sizeof buf, "truncnormal(%.17g,%.17g,%.17g,%.17g)", d.mu, d.sigma,
                          d.a, d.b);
            break;
        case Family::TiltedUniform:
            std::snprintf(buf, sizeof buf, "tilteduniform(%.17g,%.17g,%.17g)", d.a, d.b, d.tau);
            break;
    }
    return buf;
}

}  // namespace psa
