#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctrlpower/error.hpp"
#include "ctrlpower/loop.hpp"
#include "ctrlpower/units.hpp"

namespace ctrlpower {

/// Parameters of a single-platform deployment: robots scattered uniformly in
/// a disk under a platform hovering at the disk centre.
struct ScenarioSpec {
  int num_robots = 5;
  double field_radius_m = 5000.0;
  double uav_height_m = 1000.0;
  double beta0_db = -60.0;
  double noise_dbm = -110.0;
  double bandwidth_hz = 5000.0;
  double cycle_s = 0.01;
  int state_dim = 100;
  double h_lo_bits = 0.0;
  double h_hi_bits = 100.0;
  double noise_variance = 0.01;
  std::uint64_t seed = 1;

  bool operator==(const ScenarioSpec&) const = default;
};

inline void validate(const ScenarioSpec& spec) {
  using detail::require;
  require(spec.num_robots >= 1, ErrorCode::Validation, "num_robots must be >= 1");
  require(spec.state_dim >= 1, ErrorCode::Validation, "state_dim must be >= 1");
  require(spec.field_radius_m > 0.0, ErrorCode::Validation, "field_radius_m must be positive");
  require(spec.uav_height_m > 0.0, ErrorCode::Validation, "uav_height_m must be positive");
  require(std::isfinite(spec.beta0_db), ErrorCode::Validation, "beta0_db must be finite");
  require(std::isfinite(spec.noise_dbm), ErrorCode::Validation, "noise_dbm must be finite");
  require(spec.bandwidth_hz > 0.0, ErrorCode::Validation, "bandwidth_hz must be positive");
  require(spec.cycle_s > 0.0, ErrorCode::Validation, "cycle_s must be positive");
  require(spec.noise_variance > 0.0, ErrorCode::Validation, "noise_variance must be positive");
  require(spec.h_lo_bits >= 0.0 && spec.h_lo_bits <= spec.h_hi_bits, ErrorCode::Validation,
          "h_range_bits must satisfy 0 <= lo <= hi");
}

/// Free-space path loss g = beta0 / d^2.
inline double channel_gain(double distance_m, double beta0) {
  if (!(distance_m > 0.0)) {
    throw Error(ErrorCode::DegenerateGeometry, "distance must be positive");
  }
  return beta0 / (distance_m * distance_m);
}

struct Placement {
  double x_m = 0.0;
  double y_m = 0.0;
  double distance_m = 0.0;  // slant range to the platform
};

struct Scenario {
  AllocationProblem problem;
  std::optional<ScenarioSpec> spec;  // set when the scenario was generated
  std::vector<Placement> placements;  // empty or one per loop
};

/// mt19937_64 with an explicit bits-to-double mapping, so the stream is the
/// same on every standard library.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller, one value per call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Plant with log2|det A| = h exactly: A = 2^(h/n) I, B = Q = I, R = 0.
inline PlantModel make_diagonal_plant(int n, double h_bits, double noise_variance, double cycle_s) {
  PlantModel plant;
  plant.A = Eigen::MatrixXd::Identity(n, n) * std::exp2(h_bits / n);
  plant.B = Eigen::MatrixXd::Identity(n, n);
  plant.Q = Eigen::MatrixXd::Identity(n, n);
  plant.R = Eigen::MatrixXd::Zero(n, n);
  plant.Sigma = Eigen::MatrixXd::Identity(n, n) * noise_variance;
  plant.cycle_s = cycle_s;
  return plant;
}

/// Draws a scenario. The returned problem has p_max_w = 0; the caller sets
/// the budget.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  validate(spec);
  PortableRng rng(spec.seed);
  const double beta0 = db_to_linear(spec.beta0_db);
  const double noise_w = dbm_to_watts(spec.noise_dbm);

  Scenario scenario;
  scenario.spec = spec;
  for (int k = 0; k < spec.num_robots; ++k) {
    const double radius = spec.field_radius_m * std::sqrt(rng.uniform());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double h = spec.h_lo_bits + (spec.h_hi_bits - spec.h_lo_bits) * rng.uniform();

    Placement place;
    place.x_m = radius * std::cos(angle);
    place.y_m = radius * std::sin(angle);
    place.distance_m = std::hypot(spec.uav_height_m, radius);

    ChannelModel channel{channel_gain(place.distance_m, beta0), spec.bandwidth_hz, noise_w};
    scenario.problem.loops.emplace_back(
        make_diagonal_plant(spec.state_dim, h, spec.noise_variance, spec.cycle_s), channel);
    scenario.placements.push_back(place);
  }
  return scenario;
}

}  // namespace ctrlpower
