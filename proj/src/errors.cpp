#include "infosample/errors.hpp"

namespace infosample {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Format: return "format_error";
    case ErrorCode::Factorization: return "factorization_failure";
    case ErrorCode::DegenerateField: return "degenerate_field";
    case ErrorCode::GridMismatch: return "grid_mismatch";
    case ErrorCode::SessionExhausted: return "session_exhausted";
    case ErrorCode::InvalidCell: return "invalid_cell";
    case ErrorCode::NoCandidates: return "no_candidates";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
  }
  return "unknown";
}

}  // namespace infosample
