#include "kgbohm/error.hpp"

namespace kgbohm {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SpeedNotSubluminal: return "SpeedNotSubluminal";
    case ErrorCode::NotUnitTimelike: return "NotUnitTimelike";
    case ErrorCode::BadArity: return "BadArity";
    case ErrorCode::NonpositiveMass: return "NonpositiveMass";
    case ErrorCode::EmptyExpansion: return "EmptyExpansion";
    case ErrorCode::TooManyTerms: return "TooManyTerms";
    case ErrorCode::AlreadySymmetrized: return "AlreadySymmetrized";
    case ErrorCode::TooManyParticles: return "TooManyParticles";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NodeEncountered: return "NodeEncountered";
    case ErrorCode::NonuniformSpacing: return "NonuniformSpacing";
    case ErrorCode::NotOnSurface: return "NotOnSurface";
    case ErrorCode::InitialDensityNegative: return "InitialDensityNegative";
    case ErrorCode::TooManyUnresolved: return "TooManyUnresolved";
    case ErrorCode::MaxDensityNotFound: return "MaxDensityNotFound";
    case ErrorCode::PatchMismatch: return "PatchMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace kgbohm
