#include "blindconv/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "blindconv/errors.hpp"

namespace blindconv {

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::kConverged: return "converged";
    case LbfgsStatus::kMaxIterations: return "max-iterations";
    case LbfgsStatus::kLineSearchFailed: return "line-search-failed";
    case LbfgsStatus::kNoProgress: return "no-progress";
  }
  return "unknown";
}

namespace {

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

// Minimizer of the cubic interpolating (a.value, a.slope) and (b.value, b.slope),
// safeguarded into the interior of [lo, hi].
double cubic_step(const Point& a, const Point& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
  }
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (lo + hi);
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsOptions& opt, const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
             double f0, double g0)
      : f_(f), opt_(opt), x_(x), dir_(dir), f0_(f0), g0_(g0) {}

  // Returns true on a strong-Wolfe point; x_out/g_out/f_out hold the last accepted trial.
  bool run(double step, Eigen::VectorXd& x_out, Eigen::VectorXd& g_out, double& f_out, int& evals) {
    Point prev{0.0, f0_, g0_};
    for (int i = 0; i < opt_.max_line_search; ++i) {
      Point cur = eval(step, x_out, g_out, evals);
      if (!std::isfinite(cur.value) || cur.value > f0_ + opt_.c1 * step * g0_ || (i > 0 && cur.value >= prev.value)) {
        if (!std::isfinite(cur.value)) {
          step = 0.5 * (prev.step + step);
          continue;
        }
        return zoom(prev, cur, x_out, g_out, f_out, evals);
      }
      if (std::abs(cur.slope) <= -opt_.c2 * g0_) {
        f_out = cur.value;
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, x_out, g_out, f_out, evals);
      prev = cur;
      step *= 2.0;
    }
    return false;
  }

 private:
  Point eval(double step, Eigen::VectorXd& x_out, Eigen::VectorXd& g_out, int& evals) {
    x_out = x_ + step * dir_;
    g_out.resize(x_out.size());
    const double v = f_(x_out, g_out);
    ++evals;
    return {step, v, g_out.dot(dir_)};
  }

  bool zoom(Point lo, Point hi, Eigen::VectorXd& x_out, Eigen::VectorXd& g_out, double& f_out, int& evals) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      const double step = cubic_step(lo, hi);
      Point cur = eval(step, x_out, g_out, evals);
      if (!std::isfinite(cur.value) || cur.value > f0_ + opt_.c1 * step * g0_ || cur.value >= lo.value) {
        hi = cur;
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * g0_) {
          f_out = cur.value;
          return true;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    // Fall back to the best sufficient-decrease point found.
    if (lo.step > 0.0 && lo.value < f0_) {
      eval(lo.step, x_out, g_out, evals);
      f_out = lo.value;
      return true;
    }
    return false;
  }

  const Objective& f_;
  const LbfgsOptions& opt_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  double f0_;
  double g0_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
  if (options.memory < 1) throw DomainError("lbfgs: memory must be positive");
  LbfgsResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.value = f(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.value)) throw DomainError("lbfgs: objective is not finite at the starting point");

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(static_cast<std::size_t>(options.memory));
  Eigen::VectorXd x_new;
  Eigen::VectorXd g_new;

  while (true) {
    r.grad_norm = g.norm();
    if (r.grad_norm <= options.grad_tolerance) {
      r.status = LbfgsStatus::kConverged;
      return r;
    }
    if (r.iterations >= options.max_iterations) {
      r.status = LbfgsStatus::kMaxIterations;
      return r;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = -g;
    const auto m = s_hist.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(q);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      q = -g;
      slope = -g.squaredNorm();
    }
    const double step0 = m == 0 ? std::min(1.0, 1.0 / r.grad_norm) : 1.0;

    double f_new = r.value;
    LineSearch ls(f, options, r.x, q, r.value, slope);
    if (!ls.run(step0, x_new, g_new, f_new, r.evaluations)) {
      if (m > 0) {
        // Drop curvature memory and retry once along steepest descent.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      r.status = LbfgsStatus::kLineSearchFailed;
      return r;
    }
    ++r.iterations;

    Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double decrease = r.value - f_new;
    r.x.swap(x_new);
    g.swap(g_new);
    r.value = f_new;
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      rho_hist.push_back(1.0 / sy);
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
    }
    if (decrease <= 1e-15 * std::max(1.0, std::abs(r.value)) && s_hist.empty()) {
      r.grad_norm = g.norm();
      r.status = LbfgsStatus::kNoProgress;
      return r;
    }
  }
}

}  // namespace blindconv
