#pragma once

#include <stdexcept>
#include <string>

namespace mimodet {

enum class ErrorKind {
    Config = 1,
    Domain = 2,
    Numerical = 3,
    Refusal = 4,
    Integrity = 5,
    Io = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Bad configuration values, unknown names, shape mismatches between
// parameters and data.
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

// Inputs outside an operation's domain (off-alphabet symbols, bad lengths).
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

// Singular systems, non-finite losses.
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};

// Exhaustive searches beyond the enumeration guard.
struct RefusalError : Error {
    explicit RefusalError(const std::string& w) : Error(ErrorKind::Refusal, w) {}
};

// Corrupt or truncated checkpoint files, metadata mismatches.
struct IntegrityError : Error {
    explicit IntegrityError(const std::string& w) : Error(ErrorKind::Integrity, w) {}
};

struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

}  // namespace mimodet
