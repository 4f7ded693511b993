#pragma once

#include <stdexcept>
#include <string>

namespace lossysync {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter or argument outside its admissible range.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Graph topology violates an invariant (disconnected, self-loop, duplicate edge).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Vector/matrix dimensions do not agree with the model.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Two algebraically equivalent computations disagree; indicates a bug.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or network file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace lossysync
