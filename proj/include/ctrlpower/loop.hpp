#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctrlpower/error.hpp"
#include "ctrlpower/plant.hpp"
#include "ctrlpower/ratecost.hpp"
#include "ctrlpower/riccati.hpp"

namespace ctrlpower {

/// A plant served over one channel, with its Riccati solution and cost curve
/// computed once at construction.
class ControlLoop {
 public:
  ControlLoop(PlantModel plant, ChannelModel channel, const RiccatiOptions& opts = {})
      : plant_(std::move(plant)), channel_(channel), riccati_(solve(plant_, channel_, opts)),
        h_bits_(clamp_entropy(intrinsic_entropy(plant_))),
        entropy_power_(entropy_power_gaussian(plant_.Sigma)),
        curve_(LoopConstants{static_cast<int>(plant_.state_dim()), h_bits_, entropy_power_,
                             riccati_.log_det_M_abs, riccati_.cost_floor, channel_.gain,
                             channel_.noise_power_w, channel_.bandwidth_hz, plant_.cycle_s}) {}

  const PlantModel& plant() const { return plant_; }
  const ChannelModel& channel() const { return channel_; }
  const RiccatiSolution& riccati() const { return riccati_; }
  const LoopCurve& curve() const { return curve_; }
  double h_bits() const { return h_bits_; }
  double entropy_power() const { return entropy_power_; }
  double p_min_w() const { return curve_.p_min_w(); }

 private:
  static RiccatiSolution solve(const PlantModel& plant, const ChannelModel& channel,
                               const RiccatiOptions& opts) {
    validate(plant, true);
    validate(channel);
    return solve_riccati(plant, opts);
  }

  // Stable-but-not-contracting plants round to tiny negative entropies.
  static double clamp_entropy(double h) {
    if (h < 0.0 && h > -1e-12) return 0.0;
    if (h < 0.0) {
      throw Error(ErrorCode::Validation,
                  "plant has negative intrinsic entropy rate " + std::to_string(h) +
                      " (|det A| < 1); only h >= 0 is supported");
    }
    return h;
  }

  PlantModel plant_;
  ChannelModel channel_;
  RiccatiSolution riccati_;
  double h_bits_;
  double entropy_power_;
  LoopCurve curve_;
};

struct AllocationProblem {
  std::vector<ControlLoop> loops;
  double p_max_w = 0.0;

  std::size_t size() const { return loops.size(); }

  double p_min_sum_w() const {
    double sum = 0.0;
    for (const auto& l : loops) sum += l.p_min_w();
    return sum;
  }

  double floor_cost() const {
    double sum = 0.0;
    for (const auto& l : loops) sum += l.curve().floor();
    return sum;
  }
};

inline void validate(const AllocationProblem& problem) {
  if (problem.loops.empty()) throw Error(ErrorCode::Validation, "problem needs at least one loop");
  if (!(problem.p_max_w > 0.0) || !std::isfinite(problem.p_max_w)) {
    throw Error(ErrorCode::Validation, "p_max_w must be positive");
  }
}

enum class Method { exact, closed_form, water_filling, brute_force };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::closed_form: return "closed_form";
    case Method::water_filling: return "water_filling";
    case Method::brute_force: return "brute_force";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(const std::string& name) {
  if (name == "exact") return Method::exact;
  if (name == "closed" || name == "closed_form") return Method::closed_form;
  if (name == "wf" || name == "water_filling") return Method::water_filling;
  if (name == "brute" || name == "brute_force") return Method::brute_force;
  return std::nullopt;
}

struct AllocationResult {
  std::vector<double> powers_w;
  std::vector<double> lqr_costs;  // +inf where a loop is left unstable
  double total_cost = 0.0;
  double lambda = 0.0;
  Method method = Method::exact;
  int iterations = 0;
  double residual = 0.0;  // |sum p - p_max|
  std::vector<std::string> warnings;

  double power_sum() const {
    double s = 0.0;
    for (double p : powers_w) s += p;
    return s;
  }
};

/// Fills per-loop costs, the total and the budget residual from powers_w.
inline void evaluate_costs(const AllocationProblem& problem, AllocationResult& result) {
  result.lqr_costs.resize(result.powers_w.size());
  result.total_cost = 0.0;
  for (std::size_t k = 0; k < result.powers_w.size(); ++k) {
    result.lqr_costs[k] = problem.loops[k].curve().lqr_cost_or_inf(result.powers_w[k]);
    result.total_cost += result.lqr_costs[k];
  }
  result.residual = std::abs(result.power_sum() - problem.p_max_w);
}

}  // namespace ctrlpower
