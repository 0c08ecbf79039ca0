#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ctrlpower/error.hpp"

namespace ctrlpower {

/// Linear time-invariant plant x' = A x + B u + v with LQR weights Q, R,
/// noise covariance Sigma and control cycle duration T (seconds).
struct PlantModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Sigma;
  double cycle_s = 0.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
};

/// Downlink channel from the platform to one robot.
struct ChannelModel {
  double gain = 0.0;  // linear power ratio g
  double bandwidth_hz = 0.0;
  double noise_power_w = 0.0;
};

namespace detail {

inline double symmetry_tol(const Eigen::MatrixXd& m) {
  return 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

inline bool is_symmetric(const Eigen::MatrixXd& m) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= symmetry_tol(m);
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

inline void require_psd(const Eigen::MatrixXd& m, const std::string& name) {
  require(is_symmetric(m), ErrorCode::Validation, name + " must be symmetric");
  if (m.size() == 0) return;
  require(min_eigenvalue(m) >= -symmetry_tol(m), ErrorCode::Validation,
          name + " must be positive semidefinite");
}

inline void require_finite(const Eigen::MatrixXd& m, const std::string& name) {
  require(m.allFinite(), ErrorCode::Validation, name + " has non-finite entries");
}

}  // namespace detail

/// Checks shapes, symmetry and definiteness. With `sigma_definite` false the
/// noise covariance only needs to be semidefinite (noiseless simulation).
inline void validate(const PlantModel& plant, bool sigma_definite = true) {
  using detail::require;
  const auto n = plant.A.rows();
  require(n >= 1 && plant.A.cols() == n, ErrorCode::Validation, "A must be square and non-empty");
  require(plant.B.rows() == n && plant.B.cols() >= 1, ErrorCode::Validation,
          "B must have as many rows as A");
  require(plant.Q.rows() == n && plant.Q.cols() == n, ErrorCode::Validation, "Q must be n x n");
  const auto m = plant.B.cols();
  require(plant.R.rows() == m && plant.R.cols() == m, ErrorCode::Validation, "R must be m x m");
  require(plant.Sigma.rows() == n && plant.Sigma.cols() == n, ErrorCode::Validation,
          "Sigma must be n x n");
  require(std::isfinite(plant.cycle_s) && plant.cycle_s > 0.0, ErrorCode::Validation,
          "cycle_s must be positive");
  detail::require_finite(plant.A, "A");
  detail::require_finite(plant.B, "B");
  detail::require_psd(plant.Q, "Q");
  detail::require_psd(plant.R, "R");
  detail::require_psd(plant.Sigma, "Sigma");
  if (sigma_definite) {
    require(detail::min_eigenvalue(plant.Sigma) > detail::symmetry_tol(plant.Sigma),
            ErrorCode::Validation, "Sigma must be positive definite");
  }
}

inline void validate(const ChannelModel& channel) {
  using detail::require;
  require(std::isfinite(channel.gain) && channel.gain > 0.0, ErrorCode::Validation,
          "gain must be positive");
  require(std::isfinite(channel.bandwidth_hz) && channel.bandwidth_hz > 0.0,
          ErrorCode::Validation, "bandwidth_hz must be positive");
  require(std::isfinite(channel.noise_power_w) && channel.noise_power_w > 0.0,
          ErrorCode::Validation, "noise_power_w must be positive");
}

}  // namespace ctrlpower
