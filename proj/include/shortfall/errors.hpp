#pragma once

#include <stdexcept>
#include <string>

namespace shortfall {

// Input outside an operation's mathematical domain (negative budget, x < 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// The request is well-formed but beyond what the solver supports
// (mu <= 0 in Black-Scholes, too many lattice periods, non-rational roots).
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition the caller is expected to check did not hold; callers
// typically fall back to a more general routine.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Root-finding or other numerical procedure failed.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shortfall
