#pragma once

#include <stdexcept>
#include <string>

namespace cloudradar {

// Matrix failed a positive-definiteness (or eigenvalue floor) check.
class SingularMatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownScenario : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// No strictly feasible point could be found for a convex subproblem.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MaxIterations : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimizer was handed a starting point that violates a constraint.
class InfeasibleInit : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InsufficientTrials : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigInvalid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised by the experiment runner; carries the sweep point that failed.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, int sweep_index)
        : std::runtime_error(what), sweep_index_(sweep_index) {}
    int sweep_index() const noexcept { return sweep_index_; }

private:
    int sweep_index_;
};

}  // namespace cloudradar
