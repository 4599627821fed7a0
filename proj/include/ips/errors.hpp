#pragma once

#include <stdexcept>
#include <string>

namespace ips {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing or unreadable input (names the offending file).
class IoError : public Error {
public:
    using Error::Error;
};

/// Structurally broken input: dimension mismatch, non-monotone timestamps.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Malformed text record; message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented range.
class ParamError : public Error {
public:
    using Error::Error;
};

/// Sample times fall outside sensor coverage.
class AlignError : public Error {
public:
    using Error::Error;
};

/// Regression could not be performed or did not converge.
class FitError : public Error {
public:
    using Error::Error;
};

/// Query outside a model's valid time span.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace ips
