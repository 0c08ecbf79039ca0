#pragma once

// Shared helpers for the test suites: random instance generators and naive
// reference formulas written straight from the model, kept independent of
// the log-space evaluation used by the library.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ctrlpower/ctrlpower.hpp"

namespace testsupport {

using namespace ctrlpower;

/// Cost of one loop evaluated directly with pow().
inline double naive_cost(const ControlLoop& loop, double p) {
  const auto& c = loop.curve();
  const double n = c.state_dim();
  const double gamma = std::pow(2.0, 2.0 * c.h_bits() / n);
  const double num = n * gamma * c.entropy_power() * std::pow(loop.riccati().det_M_abs, 1.0 / n);
  const double den =
      std::pow(1.0 + c.gain() * p / c.noise_power_w(), 2.0 * c.bandwidth_hz() * c.cycle_s() / n) - gamma;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return num / den + loop.riccati().cost_floor;
}

inline double naive_total(const AllocationProblem& problem, const std::vector<double>& powers) {
  double sum = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k) sum += naive_cost(problem.loops[k], powers[k]);
  return sum;
}

struct LoopDraw {
  int n = 1;
  double h_bits = 1.0;
  double noise_variance = 1.0;
  double inverse_snr_w = 1.0;  // sigma^2 / g
  double bandwidth_hz = 1.0;
  double cycle_s = 1.0;
  double r_weight = 0.0;
};

inline ControlLoop make_loop(const LoopDraw& d) {
  PlantModel plant = make_diagonal_plant(d.n, d.h_bits, d.noise_variance, d.cycle_s);
  if (d.r_weight > 0.0) plant.R = Eigen::MatrixXd::Identity(d.n, d.n) * d.r_weight;
  ChannelModel channel{1.0 / d.inverse_snr_w, d.bandwidth_hz, 1.0};
  return ControlLoop(plant, channel);
}

/// Small, well-scaled random loops.
class InstanceGen {
 public:
  explicit InstanceGen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  LoopDraw draw(bool equal_cycle = false) {
    LoopDraw d;
    d.n = integer(1, 3);
    d.h_bits = uniform(0.0, 4.0);
    d.noise_variance = uniform(0.1, 2.0);
    d.inverse_snr_w = uniform(0.05, 2.0);
    d.bandwidth_hz = 1.0;
    d.cycle_s = equal_cycle ? 2.0 : uniform(1.0, 4.0);
    if (equal_cycle) d.n = 2;
    return d;
  }

  /// K loops with a budget comfortably above the summed thresholds.
  AllocationProblem problem(int K, bool equal_cycle = false) {
    AllocationProblem prob;
    for (int k = 0; k < K; ++k) prob.loops.push_back(make_loop(draw(equal_cycle)));
    const double p_min_sum = prob.p_min_sum_w();
    prob.p_max_w = p_min_sum + uniform(0.2, 5.0) * (1.0 + p_min_sum);
    return prob;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// The single-platform field deployment at a given budget and entropy range.
inline AllocationProblem field_scenario(double p_max_dbw, double h_lo = 0.0, double h_hi = 100.0,
                                        std::uint64_t seed = 1) {
  ScenarioSpec spec;
  spec.h_lo_bits = h_lo;
  spec.h_hi_bits = h_hi;
  spec.seed = seed;
  Scenario sc = generate_scenario(spec);
  sc.problem.p_max_w = dbw_to_watts(p_max_dbw);
  return sc.problem;
}

}  // namespace testsupport
