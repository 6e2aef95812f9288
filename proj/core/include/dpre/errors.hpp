#pragma once

#include <stdexcept>
#include <string>

namespace dpre {

// Bad user input: out-of-range parameters, malformed documents, refused
// configurations. Maps to exit status 2 in the command-line tool.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inverse temperature outside the set where the log-moment generating
// function is finite.
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Request would exceed memory or time budgets of the exact algorithms.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dpre
