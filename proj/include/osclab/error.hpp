#pragma once

#include <stdexcept>
#include <string>

namespace osc {

enum class ErrorCode {
  validation,
  schema,
  singular_matrix,
  not_asserted,
  degenerate_wedge,
  root_in_range,
  negative_phase,
  hypothesis_violated,
  not_applicable,
  unresolved_support,
  negative_symbol,
  delta_too_large,
  zero_symbol_mode,
  mixed_phases,
  insufficient_data,
  io,
  budget_exceeded,
  ill_conditioned,
  not_converging,
  overflow,
  internal,
};

/// Stable identifier such as "BudgetExceeded".
const char* error_name(ErrorCode code) noexcept;

/// True for failures of the numerics rather than of the inputs.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace osc
