#pragma once

#include <stdexcept>
#include <string>

namespace factsearch {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration; the CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data (corpus rows, fixtures, vector files, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

// Network-level failure after retries were exhausted.
class TransportError : public Error {
public:
    using Error::Error;
};

// The provider answered with an error status.
class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& what) : Error(what), status(status) {}
    int status;
};

// A scripted mock had no entry matching the request.
class FixtureMissError : public Error {
public:
    using Error::Error;
};

}  // namespace factsearch
