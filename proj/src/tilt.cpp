#include "psa/tilt.hpp"

#include <cmath>
#include <limits>

#include "psa/brent.hpp"
#include "psa/errors.hpp"
#include "psa/quadrature.hpp"
#include "psa/special.hpp"

namespace psa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double kl_gap(const DistributionSpec& dist, TiltComponent comp, double tau) {
    const PsiDerivatives d = psi_derivatives(dist, tau, comp);
    return tau * d.psi1 - cumulant_psi(dist, tau, comp);
}

// Upper end of the domain of psi on the positive side; -inf side is always open.
double psi_domain_hi(const DistributionSpec& dist, TiltComponent comp) {
    if ((dist.family == Family::Normal || dist.family == Family::LogNormal) &&
        comp == TiltComponent::Second)
        return 1.0 / (2.0 * dist.sigma * dist.sigma);
    if (dist.family == Family::Exponential) return dist.rate;
    return kInf;
}

// Newton polish on G(tau) = tau psi'(tau) - psi(tau) - delta; G'(tau) = tau psi''.
double polish_root(const DistributionSpec& dist, TiltComponent comp, double delta, double tau) {
    for (int it = 0; it < 8; ++it) {
        const double g = kl_gap(dist, comp, tau) - delta;
        if (std::abs(g) < 1e-12) break;
        const PsiDerivatives d = psi_derivatives(dist, tau, comp);
        const double slope = tau * d.psi2;
        if (slope == 0.0) break;
        tau -= g / slope;
    }
    if (std::abs(kl_gap(dist, comp, tau) - delta) > 1e-10)
        throw numerical_error("solve_tau: KL-budget residual did not converge");
    return tau;
}

// Bracket and solve G on the requested side of zero. G(0) = -delta < 0 and G is
// strictly monotone on each side, so the first sign change brackets the root.
double solve_branch_numeric(const DistributionSpec& dist, TiltComponent comp, double delta,
                            Branch branch) {
    const double sign = branch == Branch::Positive ? 1.0 : -1.0;
    const double bound = branch == Branch::Positive ? psi_domain_hi(dist, comp) : kInf;

    double lo = 0.0;  // G(lo) < 0
    double hi = 0.0;
    bool bracketed = false;
    for (int k = 1; k <= 200; ++k) {
        double t;
        if (std::isfinite(bound)) {
            t = sign * bound * (1.0 - std::pow(2.0, -k));
        } else {
            t = sign * 1e-6 * std::pow(2.0, k - 1);
            if (!std::isfinite(t)) break;
        }
        const double g = kl_gap(dist, comp, t) - delta;
        if (g > 0.0) {
            hi = t;
            bracketed = true;
            break;
        }
        lo = t;
    }
    if (!bracketed)
        throw no_solution_error(
            "solve_tau: no root on the requested branch (G stays below delta on this side of the "
            "psi domain)");
    auto g = [&](double t) { return kl_gap(dist, comp, t) - delta; };
    const double tau = brent_root(g, lo, hi, 1e-14, 200);
    return polish_root(dist, comp, delta, tau);
}

DistributionSpec tilted_spec(const DistributionSpec& dist, TiltComponent comp, double tau) {
    switch (dist.family) {
        case Family::Normal:
        case Family::LogNormal: {
            const double s2 = dist.sigma * dist.sigma;
            double mu, sigma;
            if (comp == TiltComponent::First) {
                mu = dist.mu + tau * s2;
                sigma = dist.sigma;
            } else {
                const double c = 1.0 - 2.0 * tau * s2;
                mu = dist.mu / c;
                sigma = dist.sigma / std::sqrt(c);
            }
            return dist.family == Family::Normal ? DistributionSpec::normal(mu, sigma)
                                                : DistributionSpec::lognormal(mu, sigma);
        }
        case Family::Exponential:
            return DistributionSpec::exponential(dist.rate - tau);
        case Family::Poisson:
            return DistributionSpec::poisson(dist.rate * std::exp(tau));
        case Family::Uniform:
            return DistributionSpec::tilted_uniform(dist.a, dist.b, tau);
        default:
            throw parameter_error("tilt not supported for this family");
    }
}

TiltSolution solve_boundary_shift(const DistributionSpec& dist, BoundarySide side, double delta) {
    if (!boundary_shift_supported(dist.family))
        throw parameter_error("boundary shift requires a bounded-support family");
    const double width = dist.b - dist.a;
    if (delta >= width)
        throw no_solution_error("boundary shift delta must be smaller than the support width");

    const double new_a = side == BoundarySide::Lower ? dist.a + delta : dist.a;
    const double new_b = side == BoundarySide::Upper ? dist.b - delta : dist.b;

    TiltSolution sol;
    sol.delta = delta;
    sol.psi_tau = 0.0;
    // Moving the lower bound up is the positive direction, the upper bound down
    // the negative one.
    sol.branch = side == BoundarySide::Lower ? Branch::Positive : Branch::Negative;
    sol.tau = side == BoundarySide::Lower ? delta : -delta;
    switch (dist.family) {
        case Family::Uniform:
            sol.perturbed = DistributionSpec::uniform(new_a, new_b);
            break;
        case Family::TruncatedNormal:
            sol.perturbed = DistributionSpec::truncnormal(dist.mu, dist.sigma, new_a, new_b);
            break;
        case Family::Triangular: {
            const double c = std::min(std::max(dist.c, new_a), new_b);
            sol.perturbed = DistributionSpec::triangular(new_a, c, new_b);
            break;
        }
        default:
            throw parameter_error("boundary shift not supported for this family");
    }
    return sol;
}

}  // namespace

TiltSolution solve_tau(const DistributionSpec& dist, const PerturbationMode& mode, double delta,
                       Branch branch) {
    validate(dist);
    if (!(delta > 0.0)) throw parameter_error("solve_tau: delta must be > 0");

    if (mode.kind == PerturbationMode::Kind::BoundaryShift)
        return solve_boundary_shift(dist, mode.side, delta);

    const TiltComponent comp = mode.comp;
    if (!tilt_supported(dist.family, comp))
        throw parameter_error("solve_tau: tilt not supported for this family/component");

    TiltSolution sol;
    sol.delta = delta;
    sol.branch = branch;

    switch (dist.family) {
        case Family::Normal:
        case Family::LogNormal:
            if (comp == TiltComponent::First) {
                const double mag = std::sqrt(2.0 * delta) / dist.sigma;
                sol.tau = branch == Branch::Positive ? mag : -mag;
            } else {
                try {
                    sol.tau = solve_branch_numeric(dist, comp, delta, branch);
                } catch (const no_solution_error&) {
                    // Only one root lies inside 1 - 2 tau sigma^2 > 0; return it.
                    const Branch other =
                        branch == Branch::Positive ? Branch::Negative : Branch::Positive;
                    sol.tau = solve_branch_numeric(dist, comp, delta, other);
                    sol.branch = other;
                    sol.branch_substituted = true;
                }
            }
            break;
        case Family::Exponential: {
            // Lambert-W closed form. Empirically W0 yields the negative root and
            // Wm1 the positive one (tau = lambda (w+1)/w with w < 0).
            const double arg = -std::exp(-1.0 - delta);
            const double w = lambert_w(
                branch == Branch::Negative ? LambertBranch::W0 : LambertBranch::Wm1, arg);
            sol.tau = polish_root(dist, comp, delta, dist.rate * (w + 1.0) / w);
            break;
        }
        case Family::Poisson: {
            // tau = W(-(lambda - delta)/(e lambda)) + 1; W0 gives tau > 0, Wm1
            // tau < 0. Wm1 needs a strictly negative argument, i.e. delta < lambda.
            const double arg = -(dist.rate - delta) / (std::exp(1.0) * dist.rate);
            if (branch == Branch::Negative && arg >= 0.0)
                throw no_solution_error(
                    "solve_tau: Poisson negative branch requires delta < lambda");
            const double w = lambert_w(
                branch == Branch::Positive ? LambertBranch::W0 : LambertBranch::Wm1, arg);
            sol.tau = polish_root(dist, comp, delta, w + 1.0);
            break;
        }
        case Family::Uniform:
            sol.tau = solve_branch_numeric(dist, comp, delta, branch);
            break;
        default:
            throw parameter_error("solve_tau: tilt not supported for this family");
    }

    sol.psi_tau = cumulant_psi(dist, sol.tau, comp);
    sol.perturbed = tilted_spec(dist, comp, sol.tau);
    return sol;
}

PerturbationMode parse_mode(const std::string& literal, Family family) {
    const bool normal_like = family == Family::Normal || family == Family::LogNormal;
    if (literal == "tilt.mean") {
        if (!normal_like)
            throw parameter_error("mode tilt.mean requires a normal or lognormal marginal");
        return PerturbationMode::tilt(TiltComponent::First);
    }
    if (literal == "tilt.variance") {
        if (!normal_like)
            throw parameter_error("mode tilt.variance requires a normal or lognormal marginal");
        return PerturbationMode::tilt(TiltComponent::Second);
    }
    if (literal == "tilt.rate") {
        if (family != Family::Exponential && family != Family::Poisson)
            throw parameter_error("mode tilt.rate requires an exponential or poisson marginal");
        return PerturbationMode::tilt(TiltComponent::First);
    }
    if (literal == "tilt.exp") {
        if (family != Family::Uniform)
            throw parameter_error("mode tilt.exp requires a uniform marginal");
        return PerturbationMode::tilt(TiltComponent::First);
    }
    if (literal == "boundary.lower" || literal == "boundary.upper") {
        if (!boundary_shift_supported(family))
            throw parameter_error("mode " + literal + " requires a bounded-support marginal");
        return PerturbationMode::boundary(literal == "boundary.lower" ? BoundarySide::Lower
                                                                      : BoundarySide::Upper);
    }
    throw parameter_error("unknown perturbation mode: " + literal);
}

Branch parse_branch(const std::string& literal) {
    if (literal == "neg") return Branch::Negative;
    if (literal == "pos") return Branch::Positive;
    throw parameter_error("unknown branch literal: " + literal + " (expected neg or pos)");
}

std::string branch_literal(Branch branch) {
    return branch == Branch::Negative ? "neg" : "pos";
}

namespace {

bool support_contained(const Interval& inner, const Interval& outer) {
    return inner.lo >= outer.lo - 1e-12 && inner.hi <= outer.hi + 1e-12;
}

double kl_poisson(const DistributionSpec& p, const DistributionSpec& q) {
    const double cutoff = effective_range(p).hi;
    double sum = 0.0;
    for (double k = 0.0; k <= cutoff; k += 1.0) {
        const double lp = log_density(p, k);
        const double lq = log_density(q, k);
        const double mass = std::exp(lp);
        if (mass > 0.0) sum += mass * (lp - lq);
    }
    return sum;
}

}  // namespace

double kl_divergence(const DistributionSpec& p, const DistributionSpec& q) {
    validate(p);
    validate(q);
    if (p == q) return 0.0;

    if (p.family == Family::Poisson || q.family == Family::Poisson) {
        if (p.family != Family::Poisson || q.family != Family::Poisson)
            throw std::domain_error("kl_divergence: cannot mix discrete and continuous supports");
        return kl_poisson(p, q);
    }

    if (!support_contained(support(p), support(q)))
        throw std::domain_error("kl_divergence: support(p) not contained in support(q)");

    if (p.family == Family::LogNormal && q.family == Family::LogNormal) {
        // Substitute x = e^y; the integrand becomes smooth and compact in y.
        const double lo = p.mu - 10.0 * p.sigma;
        const double hi = p.mu + 10.0 * p.sigma;
        auto f = [&](double y) {
            const double x = std::exp(y);
            const double lp = log_density(p, x);
            if (lp == -kInf) return 0.0;
            const double lq = log_density(q, x);
            return std::exp(lp) * (lp - lq) * x;
        };
        return integrate(f, lo, hi, 1e-10);
    }

    const Interval r = effective_range(p);
    auto f = [&](double x) {
        const double lp = log_density(p, x);
        if (lp == -kInf) return 0.0;
        const double lq = log_density(q, x);
        return std::exp(lp) * (lp - lq);
    };
    return integrate(f, r.lo, r.hi, 1e-10);
}

double delta_max(const DistributionSpec& p, const DistributionSpec& q) {
    validate(p);
    validate(q);
    if (p == q) return 0.0;

    const Interval sp = support(p);
    const Interval sq = support(q);
    if (!std::isfinite(sp.lo) || !std::isfinite(sp.hi) || !std::isfinite(sq.lo) ||
        !std::isfinite(sq.hi))
        return kInf;  // likelihood ratio unbounded on an infinite support

    // Ratio extremization over a dense grid on support(p), endpoints included.
    const int n = 10000;
    double r_min = kInf;
    double r_max = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = sp.lo + (sp.hi - sp.lo) * static_cast<double>(i) / n;
        const double lp = log_density(p, x);
        if (lp == -kInf) continue;  // p vanishes here; ratio bound taken on support(p) only
        const double lq = log_density(q, x);
        if (lq == -kInf) return kInf;  // q vanishes where p does not
        const double ratio = std::exp(lp - lq);
        r_min = std::min(r_min, ratio);
        r_max = std::max(r_max, ratio);
    }
    if (!(r_min > 0.0) || !std::isfinite(r_max)) return kInf;
    const double diff = r_max - r_min;
    return diff * diff / (4.0 * r_min * r_max);
}

}  // namespace psa
