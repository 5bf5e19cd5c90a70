#pragma once

#include <stdexcept>
#include <string>

namespace frontlab {

// Failure categories map onto process exit codes in the CLI:
//   0 success, 2 config, 3 numerical, 4 precondition, 5 negative verdict.
enum class ErrorKind { config, domain, numerical, precondition };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Bad runtime inputs (point outside a potential's window, level out of range, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

// Instability, overflow, window escape, path/population caps.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::precondition, what) {}
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::domain: return 2;
    case ErrorKind::numerical: return 3;
    case ErrorKind::precondition: return 4;
    }
    return 3;
}

}
