#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ctrlpower/error.hpp"
#include "ctrlpower/loop.hpp"

namespace ctrlpower {

struct ExactOptions {
  double budget_tolerance = 1e-9;  // relative to p_max
  int max_iterations = 200;        // bisection steps on lambda
};

namespace detail {

inline void require_strictly_feasible(const AllocationProblem& problem) {
  validate(problem);
  const double p_min_sum = problem.p_min_sum_w();
  if (p_min_sum < problem.p_max_w) return;
  const double share = problem.p_max_w / static_cast<double>(problem.size());
  std::vector<std::size_t> offending;
  for (std::size_t k = 0; k < problem.size(); ++k) {
    if (problem.loops[k].p_min_w() > share) offending.push_back(k);
  }
  throw InfeasibleError(p_min_sum, problem.p_max_w, std::move(offending));
}

inline double allocated_total(const AllocationProblem& problem, double lambda,
                              std::vector<double>& powers) {
  double sum = 0.0;
  for (std::size_t k = 0; k < problem.size(); ++k) {
    powers[k] = problem.loops[k].curve().invert_marginal(lambda);
    sum += powers[k];
  }
  return sum;
}

}  // namespace detail

/// Global optimum of the convex sum-cost problem: bisection on the budget
/// multiplier lambda, each loop's power being the inverse of its marginal
/// cost at lambda.
inline AllocationResult solve_exact(const AllocationProblem& problem, const ExactOptions& opts = {}) {
  detail::require_strictly_feasible(problem);
  const std::size_t K = problem.size();
  const double P = problem.p_max_w;

  AllocationResult result;
  result.method = Method::exact;
  result.powers_w.assign(K, 0.0);

  if (K == 1) {
    result.powers_w[0] = P;
    result.lambda = problem.loops[0].curve().marginal_cost(P);
    evaluate_costs(problem, result);
    return result;
  }

  // Equal split of the surplus above the thresholds is always strictly feasible.
  const double surplus = (P - problem.p_min_sum_w()) / static_cast<double>(K);
  double log_lambda0 = 0.0;
  for (const auto& loop : problem.loops) {
    log_lambda0 += std::log(loop.curve().marginal_cost(loop.p_min_w() + surplus));
  }
  const double lambda0 = std::exp(log_lambda0 / static_cast<double>(K));

  std::vector<double>& powers = result.powers_w;
  const double tol = opts.budget_tolerance * P;
  int evals = 0;
  auto total = [&](double lambda) {
    ++evals;
    return detail::allocated_total(problem, lambda, powers);
  };

  // total(lambda) is decreasing; bracket with total(lo) >= P >= total(hi).
  double lambda_lo = lambda0;
  double lambda_hi = lambda0;
  double t0 = total(lambda0);
  if (std::abs(t0 - P) <= tol) {
    result.lambda = lambda0;
    result.iterations = evals;
    evaluate_costs(problem, result);
    return result;
  }
  if (t0 > P) {
    while (total(lambda_hi) > P) {
      lambda_lo = lambda_hi;
      lambda_hi *= 2.0;
      if (!std::isfinite(lambda_hi)) throw Error(ErrorCode::NoConvergence, "lambda bracket overflow");
    }
  } else {
    while (total(lambda_lo) < P) {
      lambda_hi = lambda_lo;
      lambda_lo *= 0.5;
      if (!(lambda_lo > 0.0)) throw Error(ErrorCode::NoConvergence, "lambda bracket underflow");
    }
  }

  double lambda = std::sqrt(lambda_lo * lambda_hi);
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    lambda = std::sqrt(lambda_lo * lambda_hi);
    const double t = total(lambda);
    if (std::abs(t - P) <= tol) {
      converged = true;
      break;
    }
    if (t > P) {
      lambda_lo = lambda;
    } else {
      lambda_hi = lambda;
    }
  }
  result.lambda = lambda;
  result.iterations = evals;
  evaluate_costs(problem, result);
  if (!converged) {
    result.warnings.push_back("budget residual " + std::to_string(result.residual) +
                              " W after " + std::to_string(opts.max_iterations) +
                              " bisection steps");
  }
  return result;
}

/// Allocation under the assumption that every loop runs far above its
/// stability threshold, where the 2^(2h/n) term in the marginal cost drops
/// out and the KKT system has an explicit solution. Needs a common cycle
/// time (and a common B and n, which enter the shared exponent).
///
/// Powers are reported as computed: when the assumption fails a power can be
/// non-positive or below p_min, which shows up as a warning and an infinite
/// loop cost rather than being clamped.
inline AllocationResult solve_closed_form(const AllocationProblem& problem) {
  validate(problem);
  const auto& first = problem.loops.front().curve();
  const auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  for (const auto& loop : problem.loops) {
    const auto& c = loop.curve();
    if (!same(c.cycle_s(), first.cycle_s())) {
      throw Error(ErrorCode::UnequalCycleTimes, "closed form requires equal cycle times");
    }
    if (!same(c.bandwidth_hz(), first.bandwidth_hz()) || c.state_dim() != first.state_dim()) {
      throw Error(ErrorCode::UnequalCycleTimes,
                  "closed form requires a common bandwidth and state dimension");
    }
  }

  const std::size_t K = problem.size();
  const double n = first.state_dim();
  const double two_bt = 2.0 * first.bandwidth_hz() * first.cycle_s();
  const double w_state = n / (two_bt + n);
  const double w_channel = two_bt / (two_bt + n);

  std::vector<double> log_w(K);
  double inv_snr_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = problem.loops[k].curve();
    const double log_bracket = c.log_det_M_abs() / n + c.log_gamma() + std::log(c.entropy_power());
    log_w[k] = w_state * log_bracket + w_channel * std::log(c.inverse_snr_w());
    inv_snr_sum += c.inverse_snr_w();
  }
  const double log_w_max = *std::max_element(log_w.begin(), log_w.end());
  double w_sum = 0.0;
  for (double lw : log_w) w_sum += std::exp(lw - log_w_max);

  AllocationResult result;
  result.method = Method::closed_form;
  result.powers_w.resize(K);
  const double water = problem.p_max_w + inv_snr_sum;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = problem.loops[k].curve();
    result.powers_w[k] = water * std::exp(log_w[k] - log_w_max) / w_sum - c.inverse_snr_w();
    if (!(result.powers_w[k] > 0.0)) {
      result.warnings.push_back("NegativePowerWarning: loop " + std::to_string(k) + " gets " +
                                std::to_string(result.powers_w[k]) + " W");
    } else if (!(result.powers_w[k] > c.p_min_w())) {
      result.warnings.push_back("loop " + std::to_string(k) + " power is below its p_min " +
                                std::to_string(c.p_min_w()) + " W");
    }
  }
  // (1/lambda)^(n/(2BT+n)) = water / sum_k (2BT)^(n/(2BT+n)) w_k
  const double log_w_sum = std::log(w_sum) + log_w_max + w_state * std::log(two_bt);
  result.lambda = std::exp(-(std::log(water) - log_w_sum) / w_state);
  evaluate_costs(problem, result);
  return result;
}

/// Capacity-optimal allocation p_k = (mu - sigma^2/g_k)^+ with the water
/// level mu fixed by the budget. lambda reports 1/mu.
inline AllocationResult water_filling(const AllocationProblem& problem) {
  validate(problem);
  const std::size_t K = problem.size();
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  const auto floor_of = [&](std::size_t k) { return problem.loops[k].curve().inverse_snr_w(); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return floor_of(a) < floor_of(b); });

  double level = 0.0;
  std::size_t active = 0;
  for (std::size_t j = K; j >= 1; --j) {
    double sum = problem.p_max_w;
    for (std::size_t i = 0; i < j; ++i) sum += floor_of(order[i]);
    const double candidate = sum / static_cast<double>(j);
    if (candidate - floor_of(order[j - 1]) >= 0.0) {
      level = candidate;
      active = j;
      break;
    }
  }

  AllocationResult result;
  result.method = Method::water_filling;
  result.powers_w.assign(K, 0.0);
  for (std::size_t i = 0; i < active; ++i) {
    result.powers_w[order[i]] = std::max(level - floor_of(order[i]), 0.0);
  }
  result.lambda = 1.0 / level;
  result.iterations = static_cast<int>(K - active + 1);
  evaluate_costs(problem, result);
  for (std::size_t k = 0; k < K; ++k) {
    if (std::isinf(result.lqr_costs[k])) {
      result.warnings.push_back("loop " + std::to_string(k) + " is left below its stability threshold");
    }
  }
  return result;
}

/// Lower edge of each coordinate in the oracle grid.
inline std::vector<double> oracle_lower_bounds(const AllocationProblem& problem) {
  std::vector<double> lo;
  for (const auto& loop : problem.loops) lo.push_back(loop.p_min_w() * (1.0 + 1e-9));
  return lo;
}

/// Spacing of the oracle grid along each free coordinate.
inline double oracle_grid_step(const AllocationProblem& problem, int grid_points) {
  const auto lo = oracle_lower_bounds(problem);
  const double surplus = problem.p_max_w - std::accumulate(lo.begin(), lo.end(), 0.0);
  return surplus / static_cast<double>(std::max(grid_points - 1, 1));
}

/// Exhaustive grid search over the budget simplex above the thresholds.
/// Independent of the marginal-cost machinery; used to check solve_exact.
inline AllocationResult brute_force_oracle(const AllocationProblem& problem, int grid_points = 1000) {
  validate(problem);
  const std::size_t K = problem.size();
  if (K > 3) throw Error(ErrorCode::KTooLarge, "brute-force oracle supports at most 3 loops");
  if (grid_points < 2) throw Error(ErrorCode::Validation, "grid_points must be >= 2");
  detail::require_strictly_feasible(problem);

  const auto lo = oracle_lower_bounds(problem);
  const double surplus = problem.p_max_w - std::accumulate(lo.begin(), lo.end(), 0.0);
  if (!(surplus > 0.0)) {
    throw InfeasibleError(problem.p_min_sum_w(), problem.p_max_w, {});
  }
  const double step = surplus / static_cast<double>(grid_points - 1);
  const auto cost = [&](std::size_t k, double p) { return problem.loops[k].curve().lqr_cost_or_inf(p); };

  AllocationResult result;
  result.method = Method::brute_force;
  result.powers_w.assign(K, 0.0);
  double best = std::numeric_limits<double>::infinity();
  long evals = 0;
  const int G = grid_points - 1;

  if (K == 1) {
    result.powers_w[0] = problem.p_max_w;
    evals = 1;
  } else if (K == 2) {
    for (int i = 0; i <= G; ++i) {
      const double p0 = lo[0] + step * i;
      const double p1 = lo[1] + step * (G - i);
      const double c = cost(0, p0) + cost(1, p1);
      ++evals;
      if (c < best) {
        best = c;
        result.powers_w = {p0, p1};
      }
    }
  } else {
    for (int i = 0; i <= G; ++i) {
      const double p0 = lo[0] + step * i;
      const double c0 = cost(0, p0);
      for (int j = 0; i + j <= G; ++j) {
        const double p1 = lo[1] + step * j;
        const double p2 = lo[2] + step * (G - i - j);
        const double c = c0 + cost(1, p1) + cost(2, p2);
        ++evals;
        if (c < best) {
          best = c;
          result.powers_w = {p0, p1, p2};
        }
      }
    }
  }
  result.iterations = static_cast<int>(evals);
  evaluate_costs(problem, result);
  return result;
}

inline AllocationResult solve(const AllocationProblem& problem, Method method) {
  switch (method) {
    case Method::exact: return solve_exact(problem);
    case Method::closed_form: return solve_closed_form(problem);
    case Method::water_filling: return water_filling(problem);
    case Method::brute_force: return brute_force_oracle(problem);
  }
  throw Error(ErrorCode::Validation, "unknown method");
}

}  // namespace ctrlpower
