#pragma once

#include <stdexcept>
#include <string>

namespace psa {

struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested perturbation has no solution within the domain of psi.
struct no_solution_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reference failure probability is zero: the sensitivity index is undefined.
struct undefined_index_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace psa
