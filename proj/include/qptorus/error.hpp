#pragma once

#include <stdexcept>
#include <string>

namespace qpt {

enum class ErrorCode {
    DimensionTooLarge,
    ShapeError,
    AliasingError,
    StencilError,
    ConstraintMismatch,
    FoldHandling,
    BranchStall,
    NotAnNSPoint,
    NumericalBlowup,
    Blowup,
    ConfigError,
    IoError,
    InvalidArgument,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

/// Single exception type carried through the library; the code decides
/// how the C API and the CLI report it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace qpt
