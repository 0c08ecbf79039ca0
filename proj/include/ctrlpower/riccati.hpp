#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ctrlpower/error.hpp"
#include "ctrlpower/plant.hpp"

namespace ctrlpower {

struct RiccatiOptions {
  double tolerance = 1e-9;  // relative Frobenius change between iterates
  int max_iterations = 100000;
  double overflow_guard = 1e150;
  double max_condition = 1e12;  // of R + B'SB
};

/// Fixed point of
///   S = Q + A'(S - M)A,   M = S B (R + B'SB)^-1 B'S
/// together with the certainty-equivalence gain K = (R + B'SB)^-1 B'SA.
struct RiccatiSolution {
  Eigen::MatrixXd S;
  Eigen::MatrixXd M;
  Eigen::MatrixXd gain_K;
  double det_M_abs = 0.0;
  double log_det_M_abs = 0.0;  // natural log; -inf when M is singular
  double cost_floor = 0.0;     // tr(Sigma S)
  int iterations = 0;
  double residual = 0.0;  // max of the two equation residuals (Frobenius)
  double residual_S = 0.0;
  double residual_M = 0.0;
};

namespace detail {

/// Natural log of |det m| from the pivots of an LU factorization, so that
/// products of many moderate pivots never overflow. Returns -inf for a
/// numerically singular matrix.
inline double log_abs_det(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const auto& u = lu.matrixLU();
  const double scale = m.cwiseAbs().maxCoeff();
  const double floor =
      static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * scale;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double pivot = std::abs(u(i, i));
    if (!(pivot > floor) || scale == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(pivot);
  }
  return acc;
}

inline Eigen::MatrixXd riccati_m_term(const Eigen::MatrixXd& S, const PlantModel& plant,
                                      const RiccatiOptions& opts, Eigen::LDLT<Eigen::MatrixXd>& inner) {
  const Eigen::MatrixXd SB = S * plant.B;
  inner.compute(plant.R + plant.B.transpose() * SB);
  const double rcond = inner.rcond();
  if (inner.info() != Eigen::Success || !(rcond * opts.max_condition >= 1.0)) {
    throw Error(ErrorCode::SingularInnerMatrix,
                "R + B'SB is numerically singular (rcond " + std::to_string(rcond) + ")");
  }
  return SB * inner.solve(SB.transpose());
}

}  // namespace detail

/// Value iteration S <- Q + A'(S - M(S))A from S = Q.
inline RiccatiSolution solve_riccati(const PlantModel& plant, const RiccatiOptions& opts = {}) {
  validate(plant, false);
  const Eigen::MatrixXd& A = plant.A;
  Eigen::LDLT<Eigen::MatrixXd> inner;

  Eigen::MatrixXd S = plant.Q;
  bool converged = false;
  int it = 0;
  while (it < opts.max_iterations) {
    ++it;
    const Eigen::MatrixXd M = detail::riccati_m_term(S, plant, opts, inner);
    Eigen::MatrixXd next = plant.Q + A.transpose() * (S - M) * A;
    next = 0.5 * (next + next.transpose()).eval();
    const double change = (next - S).norm();
    S.swap(next);
    const double norm = S.norm();
    if (!std::isfinite(norm) || norm > opts.overflow_guard) {
      throw Error(ErrorCode::NoConvergence,
                  "Riccati iterate diverged after " + std::to_string(it) + " iterations");
    }
    if (change <= opts.tolerance * norm) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence,
                "Riccati value iteration did not converge in " +
                    std::to_string(opts.max_iterations) + " iterations");
  }

  RiccatiSolution sol;
  sol.M = detail::riccati_m_term(S, plant, opts, inner);
  sol.gain_K = inner.solve(plant.B.transpose() * S * A);
  sol.residual_S = (S - plant.Q - A.transpose() * (S - sol.M) * A).norm();
  const Eigen::MatrixXd SB = S * plant.B;
  sol.residual_M =
      (sol.M - SB * (plant.R + plant.B.transpose() * SB).inverse() * SB.transpose()).norm();
  sol.residual = std::max(sol.residual_S, sol.residual_M);
  sol.log_det_M_abs = detail::log_abs_det(sol.M);
  sol.det_M_abs = std::exp(sol.log_det_M_abs);
  sol.cost_floor = (plant.Sigma * S).trace();
  sol.iterations = it;
  sol.S = std::move(S);
  return sol;
}

/// log2 |det A| in bits per cycle.
inline double intrinsic_entropy(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw Error(ErrorCode::Validation, "A must be square and non-empty");
  }
  const double log_det = detail::log_abs_det(A);
  if (!std::isfinite(log_det)) throw Error(ErrorCode::DegeneratePlant, "det A = 0");
  return log_det / std::numbers::ln2;
}

inline double intrinsic_entropy(const PlantModel& plant) { return intrinsic_entropy(plant.A); }

/// Entropy power (1/2pi) exp((2/n) h(v)) of zero-mean Gaussian noise with
/// covariance Sigma. With h(v) = (1/2) ln((2 pi e)^n det Sigma) in nats this
/// is e * (det Sigma)^(1/n).
inline double entropy_power_gaussian(const Eigen::MatrixXd& Sigma) {
  if (Sigma.rows() == 0 || !detail::is_symmetric(Sigma)) {
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma must be square and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma is not positive definite");
  }
  const auto& L = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double d = L(i, i);
    if (!(d > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "Sigma is not positive definite");
    log_det += 2.0 * std::log(d);
  }
  return std::numbers::e * std::exp(log_det / static_cast<double>(Sigma.rows()));
}

}  // namespace ctrlpower
