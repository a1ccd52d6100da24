#pragma once

#include <stdexcept>
#include <string>

namespace roadcap {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    validation = 2,
    non_convergence = 3,
    io = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::validation; }
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Configuration is incomplete or malformed (missing table entries, unknown keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A configured resource budget would be exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::non_convergence; }
};

/// NaN or Inf appeared in a solved field.
class DivergenceError : public ConvergenceError {
public:
    DivergenceError(std::string equation, int iteration)
        : ConvergenceError("divergence in equation '" + equation + "' at iteration " + std::to_string(iteration))
        , equation_(std::move(equation))
        , iteration_(iteration)
    {
    }

    [[nodiscard]] const std::string& equation() const noexcept { return equation_; }
    [[nodiscard]] int iteration() const noexcept { return iteration_; }

private:
    std::string equation_;
    int iteration_;
};

class IoError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

} // namespace roadcap
