#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctrlpower {

enum class ErrorCode {
  DegenerateGeometry,
  DegeneratePlant,
  NotPositiveDefinite,
  NoConvergence,
  SingularInnerMatrix,
  StabilityUnattainable,
  BelowStabilityThreshold,
  InfeasibleStability,
  UnequalCycleTimes,
  KTooLarge,
  UnstableClosedLoop,
  Schema,
  Validation,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DegeneratePlant: return "DegeneratePlant";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularInnerMatrix: return "SingularInnerMatrix";
    case ErrorCode::StabilityUnattainable: return "StabilityUnattainable";
    case ErrorCode::BelowStabilityThreshold: return "BelowStabilityThreshold";
    case ErrorCode::InfeasibleStability: return "InfeasibleStability";
    case ErrorCode::UnequalCycleTimes: return "UnequalCycleTimes";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Base exception for every failure reported by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when the minimum stabilizing powers alone exhaust the budget.
class InfeasibleError : public Error {
 public:
  InfeasibleError(double p_min_sum_w, double p_max_w, std::vector<std::size_t> offending)
      : Error(ErrorCode::InfeasibleStability,
              "sum of minimum stabilizing powers " + std::to_string(p_min_sum_w) +
                  " W >= budget " + std::to_string(p_max_w) + " W (deficit " +
                  std::to_string(p_min_sum_w - p_max_w) + " W)"),
        p_min_sum_w_(p_min_sum_w),
        p_max_w_(p_max_w),
        offending_(std::move(offending)) {}

  double deficit_w() const noexcept { return p_min_sum_w_ - p_max_w_; }
  double p_min_sum_w() const noexcept { return p_min_sum_w_; }
  double p_max_w() const noexcept { return p_max_w_; }
  /// Loops whose own threshold exceeds an equal share of the budget.
  const std::vector<std::size_t>& offending_loops() const noexcept { return offending_; }

 private:
  double p_min_sum_w_;
  double p_max_w_;
  std::vector<std::size_t> offending_;
};

}  // namespace ctrlpower
