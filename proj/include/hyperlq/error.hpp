#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperlq {

/// Process exit codes used by the command line front end.
enum class ExitCode : int {
    ok = 0,
    validation = 2,
    blowup = 3,
    numerical = 4,
    verification = 5,
};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
    virtual const char* kind() const noexcept { return "numerical"; }
};

/// Problem data, grid, or configuration rejected before any solve.
class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::validation; }
    const char* kind() const noexcept override { return "validation"; }
};

/// Riccati gain left the admissible range while marching.
class RiccatiBlowup : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::blowup; }
    const char* kind() const noexcept override { return "riccati_blowup"; }
};

/// Non-finite values, singular systems, internal invariant failures.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed expression text. `offset` is the 0-based character position.
class SyntaxError : public ValidationError {
public:
    SyntaxError(std::size_t offset, const std::string& expected, const std::string& text)
        : ValidationError("syntax error at offset " + std::to_string(offset) + ": expected " +
                          expected + " in \"" + text + "\""),
          offset_(offset),
          expected_(expected) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }
    const char* kind() const noexcept override { return "syntax"; }

private:
    std::size_t offset_;
    std::string expected_;
};

/// Expression evaluation failed (unbound symbol, division by zero, overflow, ...).
class EvaluationError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "evaluation"; }
};

}  // namespace hyperlq
