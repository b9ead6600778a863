#pragma once

#include <string>

#include "psa/distribution.hpp"

namespace psa {

enum class Branch { Negative, Positive };

enum class BoundarySide { Lower, Upper };

// A density perturbation: either an exponential tilt of one sufficient-
// statistic component, or a shift of one support boundary by delta (in the
// variable's units).
struct PerturbationMode {
    enum class Kind { Tilt, BoundaryShift };
    Kind kind = Kind::Tilt;
    TiltComponent comp = TiltComponent::First;  // Tilt only
    BoundarySide side = BoundarySide::Lower;    // BoundaryShift only

    static PerturbationMode tilt(TiltComponent comp) {
        PerturbationMode m;
        m.kind = Kind::Tilt;
        m.comp = comp;
        return m;
    }
    static PerturbationMode boundary(BoundarySide side) {
        PerturbationMode m;
        m.kind = Kind::BoundaryShift;
        m.side = side;
        return m;
    }
    bool operator==(const PerturbationMode&) const = default;
};

// Mode literal valid for a given family ("tilt.mean", "tilt.variance",
// "tilt.rate", "tilt.exp", "boundary.lower", "boundary.upper").
PerturbationMode parse_mode(const std::string& literal, Family family);
Branch parse_branch(const std::string& literal);
std::string branch_literal(Branch branch);

struct TiltSolution {
    double tau = 0.0;      // solved tilt parameter; +-delta for boundary shifts
    double delta = 0.0;    // KL budget in nats (tilts) or displacement (shifts)
    double psi_tau = 0.0;  // psi(tau); 0 for boundary shifts
    DistributionSpec perturbed;
    Branch branch = Branch::Positive;  // branch actually realized
    bool branch_substituted = false;   // requested side had no root; unique root returned
};

// Solves tau * psi'(tau) - psi(tau) = delta on the requested branch and
// constructs the perturbed distribution. Closed forms are used where they
// exist (Normal/LogNormal mean tilt, Lambert W for Exponential and Poisson);
// the remaining cases use bracketed Brent iteration. Every solution is
// polished to |tau psi' - psi - delta| < 1e-10.
TiltSolution solve_tau(const DistributionSpec& dist, const PerturbationMode& mode, double delta,
                       Branch branch);

// KL divergence D(p || q) by adaptive quadrature (summation for Poisson).
// Requires support(p) to be contained in support(q).
double kl_divergence(const DistributionSpec& p, const DistributionSpec& q);

// Largest KL budget certified by the bounded-likelihood-ratio inequality
// (R - r)^2 / (4 r R) with r <= p/q <= R on support(p). Returns +inf when the
// ratio is unbounded (any unbounded-support pair).
double delta_max(const DistributionSpec& p, const DistributionSpec& q);

}  // namespace psa
