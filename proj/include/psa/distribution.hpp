#pragma once

#include <string>
#include <vector>

#include "psa/rng.hpp"

namespace psa {

enum class Family {
    Normal,
    LogNormal,
    Exponential,
    Poisson,
    Uniform,
    Triangular,
    TruncatedNormal,
    TiltedUniform,  // exponentially tilted uniform on [a, b], parameter tau
};

// Which component of the sufficient-statistic vector is tilted.
// First: T(x) = x (log x for LogNormal). Second: T(x) = x^2 ((log x)^2),
// available only for Normal and LogNormal.
enum class TiltComponent { First, Second };

struct Interval {
    double lo;
    double hi;
};

// One marginal input distribution. Parameter slots are family-specific; the
// factory functions validate and fill the relevant ones.
struct DistributionSpec {
    Family family = Family::Normal;
    double mu = 0.0;     // Normal, LogNormal, TruncatedNormal
    double sigma = 1.0;  // Normal, LogNormal, TruncatedNormal
    double rate = 1.0;   // Exponential, Poisson
    double a = 0.0;      // lower bound
    double b = 1.0;      // upper bound
    double c = 0.5;      // Triangular mode
    double tau = 0.0;    // TiltedUniform

    static DistributionSpec normal(double mu, double sigma);
    static DistributionSpec lognormal(double mu, double sigma);
    static DistributionSpec exponential(double lambda);
    static DistributionSpec poisson(double lambda);
    static DistributionSpec uniform(double a, double b);
    static DistributionSpec triangular(double a, double c, double b);
    static DistributionSpec truncnormal(double mu, double sigma, double a, double b);
    static DistributionSpec tilted_uniform(double a, double b, double tau);

    bool operator==(const DistributionSpec&) const = default;
};

// Throws parameter_error if the spec violates a family invariant.
void validate(const DistributionSpec& dist);

// Natural log of the density (probability mass for Poisson) at x.
// Returns -inf outside the support (or at non-integer x for Poisson).
double log_density(const DistributionSpec& dist, double x);

double mean(const DistributionSpec& dist);
double variance(const DistributionSpec& dist);

// Support of the density; endpoints may be +-inf.
Interval support(const DistributionSpec& dist);

// Finite interval holding all but a negligible (< 1e-14) fraction of the mass;
// used as a quadrature domain. For Poisson, [0, summation cutoff].
Interval effective_range(const DistributionSpec& dist);

// One draw. Deterministic given the stream state.
double sample_one(const DistributionSpec& dist, RngStream& rng);

std::vector<double> sample(const DistributionSpec& dist, RngStream& rng, std::size_t n);

// Sufficient-statistic component value at x (Table of exponential-family
// representations: Normal -> x / x^2, LogNormal -> log x / (log x)^2,
// Exponential, Poisson, Uniform -> x).
double sufficient_statistic(const DistributionSpec& dist, double x, TiltComponent comp);

bool tilt_supported(Family family, TiltComponent comp);
bool boundary_shift_supported(Family family);

// Cumulant generating function of the tilt, psi(tau) = log E[exp(tau T(x))],
// in closed form per family. Throws std::domain_error when tau is outside the
// domain of psi.
double cumulant_psi(const DistributionSpec& dist, double tau, TiltComponent comp);

struct PsiDerivatives {
    double psi1;  // psi'(tau)  = mean of the tilted variable's statistic
    double psi2;  // psi''(tau) = its variance
};

PsiDerivatives psi_derivatives(const DistributionSpec& dist, double tau, TiltComponent comp);

// Textual literal, e.g. "normal(0,1)" or "truncnormal(0,1,-1,1)".
DistributionSpec parse_distribution(const std::string& literal);
std::string format_distribution(const DistributionSpec& dist);

}  // namespace psa
