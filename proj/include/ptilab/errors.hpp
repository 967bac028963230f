#pragma once

#include <stdexcept>
#include <string>

namespace ptilab {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or violated precondition on user-supplied values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// NaN/inf in a loss, latent or function value.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Mismatched vector or tensor dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Checkpoint written with an unsupported schema_version.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Unparseable or truncated checkpoint contents.
class CorruptionError : public Error {
public:
    using Error::Error;
};

}  // namespace ptilab
