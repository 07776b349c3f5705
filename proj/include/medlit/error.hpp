#pragma once

#include <stdexcept>
#include <string>

namespace medlit {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Serialized artifact failed validation (bad magic, version, checksum or truncation).
class CorruptArtifact : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// A model provider (local or remote) could not produce a result.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Internal cross-module invariant violated.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace medlit
