#pragma once

#include <stdexcept>
#include <string>

namespace lob {

// Invalid model or estimator parameter (non-positive rate, alpha <= 1, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operation that would break a book invariant (crossing deposit, out-of-window price).
class BookViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Both sides of the book empty in the middle of a run.
class DegenerateState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Run rejected after the fact, e.g. window-drop budget exceeded.
class RunRejected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Estimator input too short or too sparse.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fit did not converge or is not identifiable from the data.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical boundary-value solve failed (singular system, domain too small).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration file missing, unreadable, or failing schema validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lob
