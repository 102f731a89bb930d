#pragma once

#include <stdexcept>
#include <string>

namespace lagflm {

// Error taxonomy. Each condition named by the module contracts gets its own
// type so callers (and tests) can discriminate without parsing messages.

struct InvalidIntervalError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Non-finite value met where a finite one is required; message carries the location.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularDesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficientFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyPairingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NoSignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfValidRangeError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FoldDegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedNpeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lagflm
