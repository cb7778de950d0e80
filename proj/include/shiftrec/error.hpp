#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shiftrec {

// Categories mirror the process exit codes used by the CLI and the C ABI.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, malformed files, unreadable paths. Exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Value-domain violations (e.g. nonpositive entries for the unit-consistent
// bridge). Exit code 3.
struct DomainError : Error {
    using Error::Error;
};

// The canonical shifting sweep hit its sweep cap before the per-sweep
// variance dropped below epsilon. Exit code 4.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double last_variance, std::int64_t sweeps)
        : Error(msg), last_variance(last_variance), sweeps(sweeps) {}
    double last_variance;
    std::int64_t sweeps;
};

}  // namespace shiftrec
