#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "ctrlpower/error.hpp"
#include "ctrlpower/plant.hpp"
#include "ctrlpower/riccati.hpp"
#include "ctrlpower/scenario.hpp"

namespace ctrlpower {

struct SimReport {
  long horizon = 0;
  double empirical_cost = 0.0;   // time average of x'Qx + u'Ru
  double predicted_floor = 0.0;  // tr(Sigma S)
  double rel_error = 0.0;
  double std_error = 0.0;  // batch-means estimate for empirical_cost
  std::uint64_t seed = 0;
};

namespace detail {

/// F with F F' = Sigma for a semidefinite Sigma (pivoted LDL').
inline Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& Sigma) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Sigma);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma factorization failed");
  }
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd L = ldlt.matrixL();
  Eigen::MatrixXd F = ldlt.transpositionsP().transpose() * (L * d.asDiagonal());
  return F;
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Runs x_{t+1} = A x_t + B u_t + v_t with u_t = -K x_t from x_0 = 0 and
/// Gaussian v_t ~ N(0, Sigma), averaging the stage cost over t = 1..horizon.
/// Commands reach the plant unquantized, so the long-run average estimates
/// the cost floor tr(Sigma S) only.
inline SimReport simulate_ideal(const PlantModel& plant, long horizon, std::uint64_t seed,
                                const RiccatiOptions& opts = {}) {
  if (horizon < 1) throw Error(ErrorCode::Validation, "horizon must be >= 1");
  validate(plant, false);
  const RiccatiSolution sol = solve_riccati(plant, opts);
  const Eigen::MatrixXd closed = plant.A - plant.B * sol.gain_K;
  const double rho = detail::spectral_radius(closed);
  if (!(rho < 1.0)) {
    throw Error(ErrorCode::UnstableClosedLoop,
                "spectral radius of A - BK is " + std::to_string(rho));
  }

  const Eigen::MatrixXd F = detail::noise_factor(plant.Sigma);
  // Stage cost x'Qx + (Kx)'R(Kx) = x' W x.
  const Eigen::MatrixXd W = plant.Q + sol.gain_K.transpose() * plant.R * sol.gain_K;
  const auto n = plant.state_dim();

  PortableRng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w(n);
  Eigen::VectorXd next(n);

  constexpr long kBatches = 50;
  const long batch_len = std::max(horizon / kBatches, 1L);
  double total = 0.0;
  double batch_sum = 0.0;
  double batch_mean_sum = 0.0;
  double batch_mean_sq = 0.0;
  long batches = 0;
  long in_batch = 0;

  for (long t = 1; t <= horizon; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.normal();
    next.noalias() = closed * x;
    next.noalias() += F * w;
    x.swap(next);
    const double stage = x.dot(W * x);
    total += stage;
    batch_sum += stage;
    if (++in_batch == batch_len) {
      const double mean = batch_sum / static_cast<double>(batch_len);
      batch_mean_sum += mean;
      batch_mean_sq += mean * mean;
      ++batches;
      batch_sum = 0.0;
      in_batch = 0;
    }
  }

  SimReport report;
  report.horizon = horizon;
  report.seed = seed;
  report.empirical_cost = total / static_cast<double>(horizon);
  report.predicted_floor = sol.cost_floor;
  report.rel_error = report.predicted_floor > 0.0
                         ? std::abs(report.empirical_cost - report.predicted_floor) / report.predicted_floor
                         : std::abs(report.empirical_cost);
  if (batches > 1) {
    const double mean = batch_mean_sum / static_cast<double>(batches);
    const double var = std::max(batch_mean_sq / static_cast<double>(batches) - mean * mean, 0.0) *
                       static_cast<double>(batches) / static_cast<double>(batches - 1);
    report.std_error = std::sqrt(var / static_cast<double>(batches));
  }
  return report;
}

}  // namespace ctrlpower
