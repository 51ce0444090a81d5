#pragma once

#include <stdexcept>
#include <string>

namespace crosslayer {

// Precondition or input-contract violation (non-finite entries, bad shapes).
class InvalidInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Matrix too ill-conditioned for the requested operation.
class ConditioningError : public std::runtime_error {
public:
    ConditioningError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

// Numerical optimization backend gave up or returned garbage.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problem proved infeasible where the caller required feasibility.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace crosslayer
