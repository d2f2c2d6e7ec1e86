#pragma once

#include <stdexcept>
#include <string>

namespace irlkf {

/// Broad category of a failure, used by the CLI and the service to map
/// errors onto exit codes and HTTP statuses.
enum class ErrorKind {
    ContractViolation,
    NumericalDegeneracy,
    Infeasible,
    Unsupported,
    NotFound,
    Conflict,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ContractViolation : Error {
    explicit ContractViolation(const std::string& what)
        : Error(ErrorKind::ContractViolation, "contract violation: " + what) {}
};

struct NumericalDegeneracy : Error {
    explicit NumericalDegeneracy(const std::string& what)
        : Error(ErrorKind::NumericalDegeneracy, "numerical degeneracy: " + what) {}
};

struct Infeasible : Error {
    explicit Infeasible(const std::string& what) : Error(ErrorKind::Infeasible, "infeasible: " + what) {}
};

struct Unsupported : Error {
    explicit Unsupported(const std::string& what)
        : Error(ErrorKind::Unsupported, "unsupported: " + what) {}
};

struct NotFound : Error {
    explicit NotFound(const std::string& what) : Error(ErrorKind::NotFound, "not found: " + what) {}
};

struct Conflict : Error {
    explicit Conflict(const std::string& what) : Error(ErrorKind::Conflict, "conflict: " + what) {}
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace irlkf
