#pragma once

#include <stdexcept>
#include <string>

namespace oga {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    data = 3,
    backend = 4,
    numeric = 5,
};

/// Base of every error thrown by the library.  Each subclass maps onto one
/// exit code so the CLI can translate failures without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::data; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

/// Malformed or inconsistent input data (files, ids, shapes).
class DataError : public Error {
public:
    using Error::Error;
};

/// Binary or textual file does not follow its declared layout.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

class BackendError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::backend; }
};

/// The LLM endpoint could not be reached or kept failing after retries.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int attempts)
        : BackendError(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// An LLM response did not contain any parenthesised label.
class ParseError : public BackendError {
public:
    ParseError(const std::string& what, std::string raw_response)
        : BackendError(what), raw_response_(std::move(raw_response)) {}
    const std::string& raw_response() const noexcept { return raw_response_; }

private:
    std::string raw_response_;
};

/// Training produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numeric; }
};

} // namespace oga
