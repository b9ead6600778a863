#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psa/distribution.hpp"
#include "psa/tilt.hpp"

namespace psa {

// An evaluated Monte Carlo sample: N points in d dimensions plus their
// performance-function values. Immutable after construction; failure indices
// (g <= 0) are cached so perturbed estimates never touch the model again.
class EvaluatedSample {
public:
    EvaluatedSample(std::vector<double> points, std::vector<double> g_values,
                    std::vector<DistributionSpec> marginals,
                    std::optional<std::uint64_t> seed);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    double point(std::size_t k, std::size_t i) const { return points_[k * d_ + i]; }
    double g(std::size_t k) const { return g_values_[k]; }
    const std::vector<double>& g_values() const { return g_values_; }
    const std::vector<DistributionSpec>& marginals() const { return marginals_; }
    std::optional<std::uint64_t> seed() const { return seed_; }
    const std::vector<std::size_t>& failure_indices() const { return failures_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<double> points_;  // row-major n x d
    std::vector<double> g_values_;
    std::vector<DistributionSpec> marginals_;
    std::optional<std::uint64_t> seed_;
    std::vector<std::size_t> failures_;
    std::vector<std::string> warnings_;
};

struct FailureEstimate {
    double p_hat = 0.0;
    std::size_t n = 0;
    double var_hat = 0.0;
    std::size_t failures = 0;
    double ess = 0.0;  // effective sample size of the weighted failure set
};

double pairwise_sum(const std::vector<double>& values);

FailureEstimate estimate_pf(const EvaluatedSample& sample);

// Likelihood-ratio reweighting over the cached failure points only. Weights
// are computed in log space; log weights below -700 flush to zero.
FailureEstimate estimate_perturbed_pf(const EvaluatedSample& sample, std::size_t variable,
                                      const TiltSolution& tilt);

FailureEstimate estimate_interaction_pf(const EvaluatedSample& sample, std::size_t i,
                                        std::size_t j, const TiltSolution& tilt_i,
                                        const TiltSolution& tilt_j);

struct IndexVariance {
    double value = 0.0;
    bool floored = false;  // plug-in difference went negative and was clipped at 0
};

// Delta-method variance of S_hat: VAR[p_hat_delta]/pf^2 - pd^2 (1-pf)/(N pf^3).
IndexVariance index_variance(const FailureEstimate& p_f, const FailureEstimate& p_delta);

// Same-sample covariance of (p_hat_f, p_hat_delta): p_delta (1 - p_f) / N.
double covariance_pf_pdelta(const FailureEstimate& p_f, const FailureEstimate& p_delta);

struct SensitivityRecord {
    std::size_t variable = 0;  // 0-based
    std::string mode_literal;
    Branch branch = Branch::Positive;
    double delta = 0.0;
    double tau = 0.0;
    double p_delta = 0.0;
    double s_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double ess = 0.0;
    bool infeasible = false;
    bool var_floored = false;
    bool low_ess = false;
    bool branch_substituted = false;

    std::string flags() const;
};

// Index core for one cell. Throws undefined_index_error when p_f is zero.
SensitivityRecord sensitivity_index(const FailureEstimate& p_delta, const FailureEstimate& p_f,
                                    double confidence = 0.95);

struct PlanEntry {
    std::vector<std::size_t> variables;  // 0-based
    std::string mode_literal;
    std::vector<Branch> branches;
    std::vector<double> deltas;
};

// Runs every (variable, branch, delta) cell of the plan. Infeasible cells are
// reported with the infeasible flag instead of being dropped; delta = 0 cells
// are exact zeros. Records come back sorted by (variable, mode, branch, delta).
// threads = 0 picks the hardware concurrency; results do not depend on it.
std::vector<SensitivityRecord> sweep(const EvaluatedSample& sample,
                                     const std::vector<PlanEntry>& plan,
                                     double confidence = 0.95, unsigned threads = 1);

}  // namespace psa
