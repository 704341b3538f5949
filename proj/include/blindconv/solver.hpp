#pragma once

// Factored augmented-Lagrangian solver for
//
//   min ||H||_F^2 + ||M||_F^2   s.t.  A(H M^T) = y          (equality)
//                                     ||A(H M^T) - y|| <= delta  (noisy)
//
// At a minimizer ||H||_F^2 + ||M||_F^2 = 2 ||H M^T||_*, so this is the
// nuclear-norm program over matrices of rank at most r. Inner problems are
// solved with L-BFGS; penalty and multipliers follow the usual
// method-of-multipliers schedule.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blindconv/measurement_operator.hpp"
#include "blindconv/signal.hpp"

namespace blindconv {

struct SolverOptions {
  int r = 2;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  /// Multipliers are updated when the residual shrinks by this factor; otherwise the penalty grows.
  double residual_improvement = 0.25;
  /// Inner gradient-norm tolerance, relative to max(1, ||y||).
  double inner_tolerance = 1e-8;
  int max_outer_iters = 50;
  int max_inner_iters = 1000;
  int lbfgs_memory = 10;
  double rank_deficiency_tol = 1e-3;
  /// Success threshold on ||A(HM^T) - y|| / ||y|| for the equality program.
  double equality_tol = 1e-6;
  /// Allowed relative overshoot of delta for the noisy program.
  double slack_tol = 0.05;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

struct FactorPair {
  Eigen::MatrixXd h;  ///< K x r
  Eigen::MatrixXd m;  ///< N x r

  Eigen::Index rank() const { return h.cols(); }
  Eigen::MatrixXd product() const { return h * m.transpose(); }
};

struct TraceRow {
  int outer = 0;
  int inner_iters = 0;
  double residual = 0.0;
  double objective = 0.0;
  double penalty = 0.0;
  bool multiplier_update = false;
};

struct SolveResult {
  FactorPair factors;
  Spectrum multipliers;
  double final_residual = 0.0;
  int outer_iters = 0;
  bool converged = false;
  bool rank_deficient = false;
  double deficiency_ratio = 0.0;
  std::vector<TraceRow> trace;
};

struct AugmentedLagrangian {
  double value = 0.0;
  Eigen::MatrixXd grad_h;
  Eigen::MatrixXd grad_m;
};

/// ||H||^2 + ||M||^2 + Re<lambda, rho> + sigma/2 ||rho||^2 with rho = A(H M^T) - y, and its gradients.
AugmentedLagrangian augmented_lagrangian_value_and_gradient(const MeasurementOp& op, const Spectrum& y,
                                                            const FactorPair& factors, const Spectrum& multipliers,
                                                            double sigma);

SolveResult solve_equality(const MeasurementOp& op, const Spectrum& y, const SolverOptions& options,
                           std::uint64_t seed);

/// delta = 0 runs the equality program.
SolveResult solve_noisy(const MeasurementOp& op, const Spectrum& y, double delta, const SolverOptions& options,
                        std::uint64_t seed);

struct Rank1 {
  Eigen::VectorXd h;
  Eigen::VectorXd m;
  double sigma1 = 0.0;
  double deficiency_ratio = 0.0;
};

/// Leading singular pair of H M^T via the r x r core; h = sqrt(s1) u1, m = sqrt(s1) v1,
/// with the first nonzero entry of h positive.
Rank1 extract_rank1(const FactorPair& factors);

struct RecoveryError {
  double err_h = 0.0;
  double err_m = 0.0;
  double err_x = 0.0;
};

/// Errors after removing the scalar ambiguity h m^T = (a h)(m / a)^T.
RecoveryError align_and_error(const Eigen::VectorXd& h_est, const Eigen::VectorXd& m_est, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& m);

/// One "key=value" line per outer iteration.
std::string format_trace(const SolveResult& result);

}  // namespace blindconv
