#include "psa/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <tuple>

#include "psa/errors.hpp"
#include "psa/special.hpp"

namespace psa {

EvaluatedSample::EvaluatedSample(std::vector<double> points, std::vector<double> g_values,
                                 std::vector<DistributionSpec> marginals,
                                 std::optional<std::uint64_t> seed)
    : n_(g_values.size()),
      d_(marginals.size()),
      points_(std::move(points)),
      g_values_(std::move(g_values)),
      marginals_(std::move(marginals)),
      seed_(seed) {
    if (n_ < 1) throw parameter_error("EvaluatedSample: N must be >= 1");
    if (d_ < 1) throw parameter_error("EvaluatedSample: need at least one marginal");
    if (points_.size() != n_ * d_)
        throw parameter_error("EvaluatedSample: points size does not match N x d");
    for (const auto& m : marginals_) validate(m);
    failures_.reserve(64);
    for (std::size_t k = 0; k < n_; ++k)
        if (g_values_[k] <= 0.0) failures_.push_back(k);
}

double pairwise_sum(const std::vector<double>& values) {
    // Fixed-order tree reduction, independent of thread count.
    struct Rec {
        static double sum(const double* v, std::size_t n) {
            if (n <= 8) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += v[i];
                return s;
            }
            const std::size_t half = n / 2;
            return sum(v, half) + sum(v + half, n - half);
        }
    };
    return Rec::sum(values.data(), values.size());
}

FailureEstimate estimate_pf(const EvaluatedSample& sample) {
    FailureEstimate est;
    est.n = sample.size();
    est.failures = sample.failure_indices().size();
    est.p_hat = static_cast<double>(est.failures) / static_cast<double>(est.n);
    est.var_hat = est.p_hat * (1.0 - est.p_hat) / static_cast<double>(est.n);
    est.ess = static_cast<double>(est.failures);
    return est;
}

namespace {

FailureEstimate weighted_estimate(const EvaluatedSample& sample,
                                  const std::vector<double>& weights) {
    const double n = static_cast<double>(sample.size());
    std::vector<double> sq(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) sq[i] = weights[i] * weights[i];
    const double sum_w = pairwise_sum(weights);
    const double sum_w2 = pairwise_sum(sq);

    FailureEstimate est;
    est.n = sample.size();
    est.failures = sample.failure_indices().size();
    est.p_hat = sum_w / n;
    est.var_hat = std::max(0.0, (sum_w2 / n - est.p_hat * est.p_hat) / n);
    est.ess = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
    return est;
}

double log_weight(const DistributionSpec& perturbed, const DistributionSpec& original, double x) {
    const double lp = log_density(perturbed, x);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    return lp - log_density(original, x);
}

}  // namespace

FailureEstimate estimate_perturbed_pf(const EvaluatedSample& sample, std::size_t variable,
                                      const TiltSolution& tilt) {
    if (variable >= sample.dim())
        throw parameter_error("estimate_perturbed_pf: variable index out of range");
    const DistributionSpec& original = sample.marginals()[variable];
    const auto& fail = sample.failure_indices();
    std::vector<double> w(fail.size());
    for (std::size_t i = 0; i < fail.size(); ++i) {
        const double x = sample.point(fail[i], variable);
        const double lw = log_weight(tilt.perturbed, original, x);
        w[i] = lw > -700.0 ? std::exp(lw) : 0.0;
    }
    return weighted_estimate(sample, w);
}

FailureEstimate estimate_interaction_pf(const EvaluatedSample& sample, std::size_t i,
                                        std::size_t j, const TiltSolution& tilt_i,
                                        const TiltSolution& tilt_j) {
    if (i == j)
        throw parameter_error(
            "estimate_interaction_pf: indices must differ (use the single-variable estimator)");
    if (i >= sample.dim() || j >= sample.dim())
        throw parameter_error("estimate_interaction_pf: variable index out of range");
    const auto& fail = sample.failure_indices();
    std::vector<double> w(fail.size());
    for (std::size_t k = 0; k < fail.size(); ++k) {
        const double lw = log_weight(tilt_i.perturbed, sample.marginals()[i],
                                     sample.point(fail[k], i)) +
                          log_weight(tilt_j.perturbed, sample.marginals()[j],
                                     sample.point(fail[k], j));
        w[k] = lw > -700.0 ? std::exp(lw) : 0.0;
    }
    return weighted_estimate(sample, w);
}

IndexVariance index_variance(const FailureEstimate& p_f, const FailureEstimate& p_delta) {
    if (!(p_f.p_hat > 0.0))
        throw undefined_index_error("index_variance: reference failure probability is zero");
    const double pf = p_f.p_hat;
    const double pd = p_delta.p_hat;
    const double n = static_cast<double>(p_f.n);
    const double v = p_delta.var_hat / (pf * pf) - pd * pd * (1.0 - pf) / (n * pf * pf * pf);
    if (v < 0.0) return {0.0, true};
    return {v, false};
}

double covariance_pf_pdelta(const FailureEstimate& p_f, const FailureEstimate& p_delta) {
    return p_delta.p_hat * (1.0 - p_f.p_hat) / static_cast<double>(p_f.n);
}

std::string SensitivityRecord::flags() const {
    std::string out;
    auto add = [&](const char* f) {
        if (!out.empty()) out += '|';
        out += f;
    };
    if (infeasible) add("infeasible");
    if (var_floored) add("var_floored");
    if (low_ess) add("low_ess");
    if (branch_substituted) add("branch_substituted");
    return out;
}

SensitivityRecord sensitivity_index(const FailureEstimate& p_delta, const FailureEstimate& p_f,
                                    double confidence) {
    if (!(p_f.p_hat > 0.0))
        throw undefined_index_error(
            "sensitivity_index: p_hat_f = 0, the index is not estimable from this sample");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw parameter_error("sensitivity_index: confidence must lie in (0,1)");

    SensitivityRecord rec;
    rec.p_delta = p_delta.p_hat;
    rec.s_hat = p_delta.p_hat / p_f.p_hat - 1.0;
    const IndexVariance v = index_variance(p_f, p_delta);
    rec.std_err = std::sqrt(v.value);
    rec.var_floored = v.floored;
    const double z = norm_quantile(0.5 + 0.5 * confidence);
    rec.ci_lo = rec.s_hat - z * rec.std_err;
    rec.ci_hi = rec.s_hat + z * rec.std_err;
    rec.ess = p_delta.ess;
    rec.low_ess = p_delta.ess < 5.0;
    return rec;
}

namespace {

struct Cell {
    std::size_t variable;
    std::string mode_literal;
    Branch branch;
    double delta;
};

SensitivityRecord run_cell(const EvaluatedSample& sample, const FailureEstimate& pf,
                           const Cell& cell, double confidence) {
    const DistributionSpec& marginal = sample.marginals()[cell.variable];
    const PerturbationMode mode = parse_mode(cell.mode_literal, marginal.family);

    if (cell.delta == 0.0) {
        // The weight is identically 1: the record is exact.
        SensitivityRecord rec;
        rec.variable = cell.variable;
        rec.mode_literal = cell.mode_literal;
        rec.branch = cell.branch;
        rec.delta = 0.0;
        rec.tau = 0.0;
        rec.p_delta = pf.p_hat;
        rec.s_hat = 0.0;
        rec.std_err = 0.0;
        rec.ci_lo = 0.0;
        rec.ci_hi = 0.0;
        rec.ess = static_cast<double>(pf.failures);
        rec.low_ess = rec.ess < 5.0;
        return rec;
    }

    try {
        const TiltSolution sol = solve_tau(marginal, mode, cell.delta, cell.branch);
        const FailureEstimate est = estimate_perturbed_pf(sample, cell.variable, sol);
        SensitivityRecord rec = sensitivity_index(est, pf, confidence);
        rec.variable = cell.variable;
        rec.mode_literal = cell.mode_literal;
        rec.branch = cell.branch;
        rec.delta = cell.delta;
        rec.tau = sol.tau;
        rec.branch_substituted = sol.branch_substituted;
        return rec;
    } catch (const no_solution_error&) {
        SensitivityRecord rec;
        rec.variable = cell.variable;
        rec.mode_literal = cell.mode_literal;
        rec.branch = cell.branch;
        rec.delta = cell.delta;
        rec.tau = std::numeric_limits<double>::quiet_NaN();
        rec.p_delta = std::numeric_limits<double>::quiet_NaN();
        rec.s_hat = std::numeric_limits<double>::quiet_NaN();
        rec.std_err = std::numeric_limits<double>::quiet_NaN();
        rec.ci_lo = std::numeric_limits<double>::quiet_NaN();
        rec.ci_hi = std::numeric_limits<double>::quiet_NaN();
        rec.infeasible = true;
        return rec;
    }
}

}  // namespace

std::vector<SensitivityRecord> sweep(const EvaluatedSample& sample,
                                     const std::vector<PlanEntry>& plan, double confidence,
                                     unsigned threads) {
    const FailureEstimate pf = estimate_pf(sample);
    if (!(pf.p_hat > 0.0))
        throw undefined_index_error("sweep: no failure points in the sample, p_hat_f = 0");

    std::vector<Cell> cells;
    for (const auto& entry : plan) {
        for (std::size_t var : entry.variables) {
            if (var >= sample.dim()) throw parameter_error("sweep: variable index out of range");
            const Family fam = sample.marginals()[var].family;
            const PerturbationMode mode = parse_mode(entry.mode_literal, fam);  // validates
            if (mode.kind == PerturbationMode::Kind::BoundaryShift) {
                // Boundary modes have one direction each; branch follows the side.
                const Branch b =
                    mode.side == BoundarySide::Lower ? Branch::Positive : Branch::Negative;
                for (double delta : entry.deltas)
                    cells.push_back({var, entry.mode_literal, b, delta});
            } else {
                for (Branch b : entry.branches)
                    for (double delta : entry.deltas)
                        cells.push_back({var, entry.mode_literal, b, delta});
            }
        }
    }

    std::vector<SensitivityRecord> records(cells.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<std::size_t>(threads, std::max<std::size_t>(1, cells.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            records[i] = run_cell(sample, pf, cells[i], confidence);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < cells.size(); i += threads)
                    records[i] = run_cell(sample, pf, cells[i], confidence);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::stable_sort(records.begin(), records.end(),
                     [](const SensitivityRecord& a, const SensitivityRecord& b) {
                         return std::tie(a.variable, a.mode_literal, a.branch, a.delta) <
                                std::tie(b.variable, b.mode_literal, b.branch, b.delta);
                     });
    return records;
}

}  // namespace psa
