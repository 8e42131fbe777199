#pragma once

#include <stdexcept>
#include <string>

namespace jumplab {

/// Raised when an argument violates an operation's precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot continue (non-finite state, singular flow, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) {
        throw DomainError(message);
    }
}

}  // namespace jumplab
