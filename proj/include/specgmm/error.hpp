#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specgmm {

enum class ErrorCode {
  DimensionTooSmall,
  InfeasibleBalance,
  InvalidSpec,
  NoConvergence,
  RankRequestTooLarge,
  ShapeMismatch,
  KExceedsN,
  InstanceTooLarge,
  EmptyInputClass,
  LengthMismatch,
  LabelOutOfRange,
  ZeroGap,
  RankDeficiency,
  NoiseModelNotIsotropic,
  InsufficientUncensoredPoints,
  MissingInput,
  IoError,
};

/// Stable kebab-case name used in CLI diagnostics.
constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionTooSmall: return "dimension-too-small";
    case ErrorCode::InfeasibleBalance: return "infeasible-balance";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::RankRequestTooLarge: return "rank-request-too-large";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::KExceedsN: return "k-exceeds-n";
    case ErrorCode::InstanceTooLarge: return "instance-too-large";
    case ErrorCode::EmptyInputClass: return "empty-input-class";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::LabelOutOfRange: return "label-out-of-range";
    case ErrorCode::ZeroGap: return "zero-gap";
    case ErrorCode::RankDeficiency: return "rank-deficiency";
    case ErrorCode::NoiseModelNotIsotropic: return "noise-model-not-isotropic";
    case ErrorCode::InsufficientUncensoredPoints: return "insufficient-uncensored-points";
    case ErrorCode::MissingInput: return "missing-input";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace specgmm
