#pragma once

#include <stdexcept>
#include <string>

namespace mustangs {

// Error taxonomy used across the library. The CLI maps ConfigError to
// exit code 1 and everything else to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension violations (e.g. batch width vs. input layer).
struct StructuralError : Error {
    using Error::Error;
};

// Non-finite values or numerically invalid states.
struct NumericError : Error {
    using Error::Error;
};

// API misuse: empty inputs, missing caches, wrong call order.
struct UsageError : Error {
    using Error::Error;
};

// Malformed serialized data (checkpoints, CSV artifacts).
struct FormatError : Error {
    using Error::Error;
};

// Invalid experiment configuration; message may aggregate several issues.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mustangs
