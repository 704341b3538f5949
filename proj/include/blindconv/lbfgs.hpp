#pragma once

// Limited-memory BFGS with a strong-Wolfe line search.

#include <functional>
#include <string>

#include <Eigen/Core>

namespace blindconv {

/// f(x, grad) returns the objective at x and writes its gradient into grad.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 500;
  /// Stop when ||grad||_2 <= grad_tolerance.
  double grad_tolerance = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

enum class LbfgsStatus { kConverged, kMaxIterations, kLineSearchFailed, kNoProgress };

std::string to_string(LbfgsStatus status);

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
};

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace blindconv
