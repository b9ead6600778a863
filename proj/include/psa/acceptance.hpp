#pragma once

#include <iosfwd>

namespace psa {

struct AcceptanceOptions {
    bool fast = false;     // scale Monte Carlo sample sizes down 10x
    unsigned threads = 1;  // sweep parallelism (results are independent of it)
};

// Runs the built-in verification suite: reference-probability and closed-form
// checks, KL budget exactness, reweighting oracles, ranking reproduction,
// estimator variance/covariance formulas, boundary-shift semantics, the
// evaluation-economy invariant, and output determinism. Prints one pass/fail
// line per criterion; returns 0 iff all pass.
int run_acceptance(const AcceptanceOptions& opts, std::ostream& out);

}  // namespace psa
