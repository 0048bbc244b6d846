#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbv {

/// Failure categories surfaced by the library. The CLI maps them to exit
/// codes and diagnostic ids, so the set is closed.
enum class ErrorKind {
    membership,   // node id not part of the network
    domain,       // argument outside its admissible range
    regime,       // inputs do not match the informational regime
    validation,   // shapes or ids inconsistent
    stability,    // spectral / invertibility gate failed
    convergence,  // iteration budget exhausted
    sign,         // index denominators not strictly positive
    protocol,     // cross-period comparison rules violated
    integrity,    // file hash mismatch
    package,      // missing or malformed package content
    emission,     // document cannot be emitted (missing required field)
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when an iterative scheme hits its iteration cap; carries the last
/// residual so callers can decide whether the partial answer is usable.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double last_residual, int iterations)
        : Error(ErrorKind::convergence, message),
          last_residual_(last_residual),
          iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

/// Raised by a failed SHA-256 check; names the offending file.
class IntegrityError : public Error {
public:
    IntegrityError(const std::string& file, const std::string& message)
        : Error(ErrorKind::integrity, message), file_(file) {}

    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace cbv
