#pragma once

namespace psa {

// Standard normal CDF, computed via erfc for full double accuracy in both tails.
double norm_cdf(double x);

// Inverse standard normal CDF on (0,1).
// Peter Acklam's rational approximation (relative error < 1.15e-9) refined by
// one Halley step against norm_cdf, which brings it to ~1e-15 relative in the
// central region and keeps the tails accurate.
double norm_quantile(double p);

enum class LambertBranch { W0, Wm1 };

// Real branches of the Lambert W function: w * exp(w) = x.
// W0 is defined for x >= -1/e, Wm1 for -1/e <= x < 0.
// Halley iteration from a branch-specific initial guess; converges to a
// residual |w e^w - x| below 1e-12 * max(1, |x|).
double lambert_w(LambertBranch branch, double x);

}  // namespace psa
