#ifndef KKL_ERRORS_HPP
#define KKL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kkl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Raised when a symmetric solve loses definiteness; carries the smallest pivot seen.
class ConditioningError : public NumericError {
public:
    ConditioningError(const std::string& what, double smallest_pivot)
        : NumericError(what + " (smallest pivot " + std::to_string(smallest_pivot) + ")"),
          smallest_pivot_(smallest_pivot) {}

    double smallest_pivot() const noexcept { return smallest_pivot_; }

private:
    double smallest_pivot_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kkl

#endif
