#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgbohm {

enum class ErrorCode {
    InvalidArgument,
    NonFinite,
    SpeedNotSubluminal,
    NotUnitTimelike,
    BadArity,
    NonpositiveMass,
    EmptyExpansion,
    TooManyTerms,
    AlreadySymmetrized,
    TooManyParticles,
    ArityMismatch,
    IndexOutOfRange,
    NodeEncountered,
    NonuniformSpacing,
    NotOnSurface,
    InitialDensityNegative,
    TooManyUnresolved,
    MaxDensityNotFound,
    PatchMismatch,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a machine-readable code so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace kgbohm
