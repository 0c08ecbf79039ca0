#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ctrlpower/error.hpp"

// Scalar power/rate/cost relations of one control loop over its channel.
//
//   rate(p)  = B T log2(1 + a p),                      a = g / sigma^2
//   l(p)     = n 2^(2h/n) N |det M|^(1/n) / ((1 + a p)^(2BT/n) - 2^(2h/n)) + tr(Sigma S)
//   s(p)     = -dl/dp
//
// With z(p) = (2BT/n) ln(1 + a p) - (2h/n) ln 2 the cost excess is
// n N |det M|^(1/n) / expm1(z), which stays finite for any n, h, B T that
// fit in a double and degrades gracefully next to the pole at z = 0.

namespace ctrlpower {

/// Raw per-loop constants; everything a LoopCurve is built from.
struct LoopConstants {
  int state_dim = 1;             // n
  double h_bits = 0.0;           // log2 |det A|
  double entropy_power = 0.0;    // N(v)
  double log_det_M_abs = 0.0;    // ln |det M|
  double cost_floor = 0.0;       // tr(Sigma S)
  double gain = 0.0;             // g
  double noise_power_w = 0.0;    // sigma^2
  double bandwidth_hz = 0.0;     // B
  double cycle_s = 0.0;          // T
};

namespace detail {

/// ln(expm1(z)) for z > 0 without overflow for large z.
inline double log_expm1(double z) {
  if (z > 30.0) return z + std::log1p(-std::exp(-z));
  return std::log(std::expm1(z));
}

constexpr double kStrictOffset = 1e-12;

}  // namespace detail

/// p_min = (sigma^2/g) (2^(h/(BT)) - 1): the power at which B T log2(1+g p/sigma^2) = h.
inline double min_stabilizing_power(double h_bits, double gain, double noise_power_w,
                                    double bandwidth_hz, double cycle_s) {
  const double bits_per_hz_cycle = h_bits / (bandwidth_hz * cycle_s);
  if (!(bits_per_hz_cycle <= 1000.0)) {
    throw Error(ErrorCode::StabilityUnattainable,
                "h/(B T) = " + std::to_string(bits_per_hz_cycle) + " exceeds 1000");
  }
  return noise_power_w / gain * std::expm1(bits_per_hz_cycle * std::numbers::ln2);
}

/// Precomputed constants of one loop's cost curve.
class LoopCurve {
 public:
  explicit LoopCurve(const LoopConstants& c) : c_(c) {
    if (c.state_dim < 1) throw Error(ErrorCode::Validation, "state_dim must be >= 1");
    if (!(c.gain > 0.0) || !(c.noise_power_w > 0.0) || !(c.bandwidth_hz > 0.0) ||
        !(c.cycle_s > 0.0)) {
      throw Error(ErrorCode::Validation, "channel and cycle parameters must be positive");
    }
    if (!(c.h_bits >= 0.0)) {
      throw Error(ErrorCode::Validation, "intrinsic entropy rate must be >= 0");
    }
    if (!(c.entropy_power > 0.0) || !std::isfinite(c.entropy_power)) {
      throw Error(ErrorCode::Validation, "entropy power must be positive");
    }
    if (!std::isfinite(c.log_det_M_abs)) {
      throw Error(ErrorCode::DegeneratePlant, "|det M| = 0 gives a constant cost curve");
    }
    const double n = c.state_dim;
    exponent_ = 2.0 * c.bandwidth_hz * c.cycle_s / n;
    log_gamma_ = 2.0 * c.h_bits / n * std::numbers::ln2;
    log_k0_ = std::log(n) + std::log(c.entropy_power) + c.log_det_M_abs / n;
    snr_per_watt_ = c.gain / c.noise_power_w;
    p_min_w_ = min_stabilizing_power(c.h_bits, c.gain, c.noise_power_w, c.bandwidth_hz, c.cycle_s);
  }

  const LoopConstants& constants() const { return c_; }
  int state_dim() const { return c_.state_dim; }
  double h_bits() const { return c_.h_bits; }
  double gain() const { return c_.gain; }
  double noise_power_w() const { return c_.noise_power_w; }
  double bandwidth_hz() const { return c_.bandwidth_hz; }
  double cycle_s() const { return c_.cycle_s; }
  double entropy_power() const { return c_.entropy_power; }
  double log_det_M_abs() const { return c_.log_det_M_abs; }
  double floor() const { return c_.cost_floor; }

  /// 2 B T / n
  double exponent() const { return exponent_; }
  /// 2^(2h/n)
  double gamma() const { return std::exp(log_gamma_); }
  double log_gamma() const { return log_gamma_; }
  /// n 2^(2h/n) N |det M|^(1/n)
  double numerator_const() const { return std::exp(log_k0_ + log_gamma_); }
  /// sigma^2 / g
  double inverse_snr_w() const { return 1.0 / snr_per_watt_; }
  double p_min_w() const { return p_min_w_; }
  /// Smallest power treated as strictly above the stability threshold.
  double p_floor_w() const { return p_min_w_ * (1.0 + detail::kStrictOffset); }

  /// (2BT/n) ln(1 + g p/sigma^2) - (2h/n) ln 2; positive exactly when p > p_min.
  double stability_margin(double p) const {
    return exponent_ * std::log1p(snr_per_watt_ * p) - log_gamma_;
  }

  double rate_per_cycle(double p) const {
    return c_.bandwidth_hz * c_.cycle_s * std::log1p(snr_per_watt_ * p) / std::numbers::ln2;
  }

  /// Returns +inf at or below the stability threshold.
  double lqr_cost_or_inf(double p) const {
    const double z = stability_margin(p);
    if (!(p > p_min_w_) || !(z > 0.0)) return std::numeric_limits<double>::infinity();
    return std::exp(log_k0_ - detail::log_expm1(z)) + c_.cost_floor;
  }

  double lqr_cost(double p) const {
    const double cost = lqr_cost_or_inf(p);
    if (std::isinf(cost)) throw below_threshold(p);
    return cost;
  }

  double marginal_cost_or_inf(double p) const {
    const double z = stability_margin(p);
    if (!(p > p_min_w_) || !(z > 0.0)) return std::numeric_limits<double>::infinity();
    const double log_s = log_k0_ + std::log(exponent_) + std::log(snr_per_watt_) -
                         std::log1p(snr_per_watt_ * p) + z - 2.0 * detail::log_expm1(z);
    return std::exp(log_s);
  }

  double marginal_cost(double p) const {
    const double s = marginal_cost_or_inf(p);
    if (std::isinf(s)) throw below_threshold(p);
    return s;
  }

  /// Unique p > p_min with marginal_cost(p) == lambda.
  double invert_marginal(double lambda) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorCode::Validation, "lambda must be positive and finite");
    }
    double lo = p_min_w_ > 0.0 ? p_floor_w() : 0.0;
    if (p_min_w_ > 0.0 && marginal_cost_or_inf(lo) <= lambda) return lo;

    double hi = std::max(2.0 * p_min_w_, inverse_snr_w());
    int doublings = 0;
    while (marginal_cost_or_inf(hi) >= lambda) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > 2000 || !std::isfinite(hi)) {
        throw Error(ErrorCode::NoConvergence, "could not bracket marginal cost inverse");
      }
    }
    for (int it = 0; it < 400 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (marginal_cost_or_inf(mid) > lambda) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

 private:
  Error below_threshold(double p) const {
    return Error(ErrorCode::BelowStabilityThreshold,
                 "power " + std::to_string(p) + " W is not above p_min " +
                     std::to_string(p_min_w_) + " W");
  }

  LoopConstants c_;
  double exponent_ = 0.0;
  double log_gamma_ = 0.0;
  double log_k0_ = 0.0;
  double snr_per_watt_ = 0.0;
  double p_min_w_ = 0.0;
};

inline double rate_per_cycle(const LoopCurve& curve, double p) { return curve.rate_per_cycle(p); }
inline double min_stabilizing_power(const LoopCurve& curve) { return curve.p_min_w(); }
inline double lqr_cost(const LoopCurve& curve, double p) { return curve.lqr_cost(p); }
inline double marginal_cost(const LoopCurve& curve, double p) { return curve.marginal_cost(p); }
inline double invert_marginal(const LoopCurve& curve, double lambda) {
  return curve.invert_marginal(lambda);
}

}  // namespace ctrlpower
