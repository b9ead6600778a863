#include "psa/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace psa {

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Acklam's coefficients for the inverse normal CDF.
constexpr double kA[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                          -2.759285104469687e+02, 1.383577518672690e+02,
                          -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                          -1.556989798598866e+02, 6.680131188771972e+01,
                          -1.328068155288572e+01};
constexpr double kC[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                          -2.400758277161838e+00, -2.549732539343734e+00,
                          4.374664141464968e+00,  2.938163982698783e+00};
constexpr double kD[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                          2.445134137142996e+00, 3.754408661907416e+00};

double acklam_estimate(double p) {
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
               ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
               ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
           (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

}  // namespace

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_quantile: p must lie in (0,1), got " + std::to_string(p));
    double x = acklam_estimate(p);
    // One Halley refinement: e = Phi(x) - p, phi = standard normal pdf.
    const double e = norm_cdf(x) - p;
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double u = e / phi;
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

double lambert_initial(LambertBranch branch, double x) {
    const double inv_e = std::exp(-1.0);
    if (branch == LambertBranch::W0) {
        if (x < -0.25) {
            // Branch-point series in p = sqrt(2(e x + 1)).
            const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
            return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
        }
        if (x < 3.0) {
            // Pade-like start near zero.
            return x * (1.0 + 1.5 * x) / (1.0 + x * (2.5 + 0.875 * x));
        }
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        return l1 - l2 + l2 / l1;
    }
    // Wm1: x in [-1/e, 0).
    if (x < -0.25 * inv_e) {
        const double p = -std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    }
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w(LambertBranch branch, double x) {
    const double x_min = -std::exp(-1.0);
    if (branch == LambertBranch::W0) {
        if (x < x_min)
            throw std::domain_error("lambert_w: W0 requires x >= -1/e, got " + std::to_string(x));
    } else {
        if (x < x_min || x >= 0.0)
            throw std::domain_error("lambert_w: Wm1 requires -1/e <= x < 0, got " +
                                    std::to_string(x));
    }
    if (x == 0.0) return 0.0;
    if (x <= x_min * (1.0 - 1e-15)) return -1.0;  // clamp tiny round-off below the branch point
    if (x == x_min) return -1.0;

    double w = lambert_initial(branch, x);
    for (int it = 0; it < 50; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::abs(f) <= 1e-13 * std::max(1.0, std::abs(x))) break;
        const double wp1 = w + 1.0;
        // Halley step.
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        w -= f / denom;
    }
    return w;
}

}  // namespace psa
