#include "excursion/error.hpp"

namespace excursion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::GridMisaligned: return "GridMisaligned";
    case ErrorCode::NonStationaryCoefficients: return "NonStationaryCoefficients";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoValidShifts: return "NoValidShifts";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingBootstrap: return "MissingBootstrap";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DivergedToNonFinite: return "DivergedToNonFinite";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace excursion
