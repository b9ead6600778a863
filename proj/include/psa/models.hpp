#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "psa/estimation.hpp"

namespace psa {

// Performance function of the system; failure is g(x) <= 0.
// LinearGaussian carries an evaluation counter so tests can prove that a
// sweep performs no model calls beyond the initial sample.
struct PerformanceModel {
    enum class Kind { LinearGaussian, Tabulated };
    Kind kind = Kind::LinearGaussian;

    // LinearGaussian: g(x) = intercept - sum(coefficients[i] * x[i]).
    double intercept = 0.0;
    std::vector<double> coefficients;

    // Tabulated: precomputed sample, no evaluate().
    std::shared_ptr<EvaluatedSample> tabulated;

    std::shared_ptr<std::atomic<std::uint64_t>> eval_count =
        std::make_shared<std::atomic<std::uint64_t>>(0);

    static PerformanceModel linear(double intercept, std::vector<double> coefficients);
    static PerformanceModel from_table(std::shared_ptr<EvaluatedSample> sample);
};

double evaluate(const PerformanceModel& model, const std::vector<double>& x);

// Exact failure probability of a linear combination of independent normals:
// g ~ N(intercept - sum c_i mu_i, sum c_i^2 sigma_i^2), p_f = Phi(-m/s).
double analytic_pf_linear(const PerformanceModel& model,
                          const std::vector<DistributionSpec>& marginals);

// Draws n points (one substream per input column) and evaluates g.
EvaluatedSample build_sample(const PerformanceModel& model,
                             const std::vector<DistributionSpec>& marginals, std::size_t n,
                             std::uint64_t seed);

// CSV sample file: header "x1,...,xd,g", one row per point, LF line endings,
// full round-trip precision.
void write_sample(const EvaluatedSample& sample, const std::string& path);

// Reads a sample file back. The declared marginals are trusted; a per-variable
// mean check (6 standard errors) attaches a warning, never an error.
EvaluatedSample ingest_sample(const std::string& path,
                              const std::vector<DistributionSpec>& marginals);

}  // namespace psa
