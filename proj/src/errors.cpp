#include "irlkf/errors.hpp"

namespace irlkf {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ContractViolation: return "contract_violation";
        case ErrorKind::NumericalDegeneracy: return "numerical_degeneracy";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Conflict: return "conflict";
    }
    return "error";
}

}  // namespace irlkf
