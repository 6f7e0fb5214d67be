#pragma once

#include <stdexcept>
#include <string>

namespace faae {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation (log of a
// non-positive value, mean of an empty tensor).
class DomainError : public Error {
public:
    using Error::Error;
};

// Violated precondition of an API call.
class ContractError : public Error {
public:
    using Error::Error;
};

// Bad configuration text or inconsistent configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system failure or malformed file content.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite loss, gradient or parameter encountered while training or
// checking gradients.
class NumericalError : public Error {
public:
    using Error::Error;
};

// A latent combination that collapses to (nearly) the zero vector.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

}  // namespace faae
