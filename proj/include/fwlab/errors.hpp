#pragma once

#include <stdexcept>
#include <string>

namespace fwlab {

enum class ErrorCode {
    RejectedSpec,        // problem data outside the standing assumptions
    OutOfSpan,           // query outside a grid/mesh span
    NonfiniteState,      // state left the representable range (blow-up)
    CflViolation,        // explicit scheme stability bound unattainable
    MeshTooSmall,        // flow leaves the spatial box
    SingularRegression,  // rank-deficient normal equations
    WrongStart,          // path does not start at the prescribed point
    IncompatibleGrid,    // grids of two inputs do not match
    InsufficientRows,    // not enough usable sweep rows for a fit
    ConfigError,         // malformed or unknown configuration
};

const char* error_name(ErrorCode code);

class SolverError : public std::runtime_error {
public:
    SolverError(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace fwlab
