#include "osclab/error.hpp"

namespace osc {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation: return "ValidationError";
    case ErrorCode::schema: return "SchemaError";
    case ErrorCode::singular_matrix: return "SingularMatrix";
    case ErrorCode::not_asserted: return "NotAsserted";
    case ErrorCode::degenerate_wedge: return "DegenerateWedge";
    case ErrorCode::root_in_range: return "RootInRange";
    case ErrorCode::negative_phase: return "NegativePhase";
    case ErrorCode::hypothesis_violated: return "HypothesisViolated";
    case ErrorCode::not_applicable: return "NotApplicable";
    case ErrorCode::unresolved_support: return "UnresolvedSupport";
    case ErrorCode::negative_symbol: return "NegativeSymbol";
    case ErrorCode::delta_too_large: return "DeltaTooLarge";
    case ErrorCode::zero_symbol_mode: return "ZeroSymbolMode";
    case ErrorCode::mixed_phases: return "MixedPhases";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::io: return "IOError";
    case ErrorCode::budget_exceeded: return "BudgetExceeded";
    case ErrorCode::ill_conditioned: return "IllConditioned";
    case ErrorCode::not_converging: return "NotConverging";
    case ErrorCode::overflow: return "Overflow";
    case ErrorCode::internal: return "InternalError";
  }
  return "InternalError";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::budget_exceeded:
    case ErrorCode::ill_conditioned:
    case ErrorCode::not_converging:
    case ErrorCode::overflow:
    case ErrorCode::internal:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

}  // namespace osc
