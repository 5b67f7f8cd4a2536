#include "fwlab/errors.hpp"

namespace fwlab {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::RejectedSpec: return "REJECTED_SPEC";
        case ErrorCode::OutOfSpan: return "OUT_OF_SPAN";
        case ErrorCode::NonfiniteState: return "NONFINITE_STATE";
        case ErrorCode::CflViolation: return "CFL_VIOLATION";
        case ErrorCode::MeshTooSmall: return "MESH_TOO_SMALL";
        case ErrorCode::SingularRegression: return "SINGULAR_REGRESSION";
        case ErrorCode::WrongStart: return "WRONG_START";
        case ErrorCode::IncompatibleGrid: return "INCOMPATIBLE_GRID";
        case ErrorCode::InsufficientRows: return "INSUFFICIENT_ROWS";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

} // namespace fwlab
