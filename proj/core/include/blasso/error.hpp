#pragma once

#include <stdexcept>
#include <string>

namespace blasso {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain numeric input.
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& what, double condition_estimate)
        : Error(what), condition_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

}  // namespace blasso
