#include "blindconv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "blindconv/errors.hpp"
#include "blindconv/lbfgs.hpp"
#include "blindconv/rng.hpp"

namespace blindconv {

void SolverOptions::validate() const {
  if (r < 1) throw DomainError("solver: r must be at least 1");
  if (!(penalty_init > 0.0)) throw DomainError("solver: penalty_init must be positive");
  if (!(penalty_growth > 1.0)) throw DomainError("solver: penalty_growth must exceed 1");
  if (!(residual_improvement > 0.0 && residual_improvement < 1.0)) {
    throw DomainError("solver: residual_improvement must lie in (0, 1)");
  }
  if (!(inner_tolerance > 0.0)) throw DomainError("solver: inner_tolerance must be positive");
  if (max_outer_iters < 1 || max_inner_iters < 1) throw DomainError("solver: iteration limits must be positive");
  if (lbfgs_memory < 1) throw DomainError("solver: lbfgs_memory must be positive");
  if (!(rank_deficiency_tol > 0.0)) throw DomainError("solver: rank_deficiency_tol must be positive");
  if (!(equality_tol > 0.0)) throw DomainError("solver: equality_tol must be positive");
  if (!(slack_tol >= 0.0)) throw DomainError("solver: slack_tol must be nonnegative");
}

namespace {

double wnorm2(const Eigen::VectorXd& w, const Eigen::VectorXcd& a) { return w.dot(a.cwiseAbs2()); }

double wdot(const Eigen::VectorXd& w, const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return w.dot(a.cwiseProduct(b.conjugate()).real());
}

// Augmented Lagrangian on the half spectrum. With delta = 0 this is
//   |H|^2 + |M|^2 + Re<lam, rho> + sigma/2 |rho|^2,
// and with delta > 0 the constraint rho in Ball(delta) enters through
//   sigma/2 dist(rho + lam/sigma, Ball)^2 - |lam|^2 / (2 sigma).
class HalfLagrangian {
 public:
  HalfLagrangian(const MeasurementOp& op, Eigen::VectorXcd y, double delta)
      : op_(op), w_(op.grid().half_weights()), y_(std::move(y)), delta_(delta) {
    lambda_ = Eigen::VectorXcd::Zero(y_.size());
  }

  Eigen::VectorXcd residual(const FactorPair& f) const {
    return op_.apply_factored_half(f.h, f.m) - y_;
  }
  double norm(const Eigen::VectorXcd& v) const { return std::sqrt(wnorm2(w_, v)); }

  // rho - proj_Ball(rho + lam/sigma); equals rho when delta = 0.
  Eigen::VectorXcd violation(const Eigen::VectorXcd& rho) const {
    if (delta_ == 0.0) return rho;
    const Eigen::VectorXcd u = rho + lambda_ / sigma_;
    return rho - project(u);
  }

  void update_multipliers(const Eigen::VectorXcd& rho) {
    const Eigen::VectorXcd u = rho + lambda_ / sigma_;
    lambda_ = sigma_ * (u - project(u));
  }

  double evaluate(const FactorPair& f, Eigen::MatrixXd* grad_h, Eigen::MatrixXd* grad_m) const {
    const Eigen::MatrixXcd tb = op_.transform_b(f.h);
    const Eigen::MatrixXcd tc = op_.transform_c(f.m);
    const Eigen::VectorXcd rho = tb.cwiseProduct(tc).rowwise().sum() - y_;
    double value = f.h.squaredNorm() + f.m.squaredNorm();
    Eigen::VectorXcd v;
    if (delta_ == 0.0) {
      value += wdot(w_, lambda_, rho) + 0.5 * sigma_ * wnorm2(w_, rho);
      v = lambda_ + sigma_ * rho;
    } else {
      const Eigen::VectorXcd u = rho + lambda_ / sigma_;
      const Eigen::VectorXcd excess = u - project(u);
      value += 0.5 * sigma_ * wnorm2(w_, excess) - 0.5 * wnorm2(w_, lambda_) / sigma_;
      v = sigma_ * excess;
    }
    if (grad_h != nullptr) {
      Eigen::MatrixXcd zc = tc.conjugate();
      Eigen::MatrixXcd zb = tb.conjugate();
      for (Eigen::Index j = 0; j < zc.cols(); ++j) {
        zc.col(j) = zc.col(j).cwiseProduct(v);
        zb.col(j) = zb.col(j).cwiseProduct(v);
      }
      *grad_h = 2.0 * f.h + op_.back_b(zc);
      *grad_m = 2.0 * f.m + op_.back_c(zb);
    }
    return value;
  }

  double sigma() const { return sigma_; }
  void set_sigma(double s) { sigma_ = s; }
  const Eigen::VectorXcd& lambda() const { return lambda_; }
  void set_lambda(Eigen::VectorXcd l) { lambda_ = std::move(l); }

 private:
  Eigen::VectorXcd project(const Eigen::VectorXcd& u) const {
    const double nu = norm(u);
    if (nu <= delta_) return u;
    return u * (delta_ / nu);
  }

  const MeasurementOp& op_;
  const Eigen::VectorXd& w_;
  Eigen::VectorXcd y_;
  double delta_;
  double sigma_ = 1.0;
  Eigen::VectorXcd lambda_;
};

Eigen::VectorXcd checked_half(const MeasurementOp& op, const Spectrum& s, const char* what) {
  if (static_cast<std::size_t>(s.size()) != op.length()) {
    throw DimensionError(std::string(what) + ": spectrum length does not match the operator");
  }
  const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
  Spectrum tagged(s.values, SpectrumOrigin::kRealOrigin, op.shape());
  if (tagged.symmetry_defect() > 1e-9 * scale) {
    throw SymmetryError(std::string(what) + ": spectrum is not conjugate symmetric");
  }
  return op.grid().restrict_to_half(tagged.symmetrized().values);
}

Eigen::VectorXd pack(const FactorPair& f) {
  Eigen::VectorXd x(f.h.size() + f.m.size());
  x << f.h.reshaped(), f.m.reshaped();
  return x;
}

FactorPair unpack(const Eigen::VectorXd& x, Eigen::Index k, Eigen::Index n, Eigen::Index r) {
  FactorPair f;
  f.h = x.head(k * r).reshaped(k, r);
  f.m = x.tail(n * r).reshaped(n, r);
  return f;
}

SolveResult solve_impl(const MeasurementOp& op, const Spectrum& y, double delta, const SolverOptions& options,
                       std::uint64_t seed) {
  options.validate();
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("solve: delta must be finite and nonnegative");
  const Eigen::VectorXcd y_half = checked_half(op, y, "solve");
  const auto k = static_cast<Eigen::Index>(op.k());
  const auto n = static_cast<Eigen::Index>(op.n());
  const auto r = static_cast<Eigen::Index>(options.r);
  const Eigen::VectorXd& w = op.grid().half_weights();
  const double y_norm = std::sqrt(wnorm2(w, y_half));

  SolveResult result;
  if (y_norm == 0.0) {
    result.factors = {Eigen::MatrixXd::Zero(k, r), Eigen::MatrixXd::Zero(n, r)};
    result.multipliers = Spectrum(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(op.length())),
                                  SpectrumOrigin::kRealOrigin, op.shape());
    result.converged = true;
    result.rank_deficient = true;
    return result;
  }

  // Work with ||y|| = 1; factors are rescaled by sqrt(||y||) on exit.
  const double delta_n = delta / y_norm;
  HalfLagrangian al(op, y_half / y_norm, delta_n);
  al.set_sigma(options.penalty_init);

  Rng rng(seed);
  const double init_std = 1.0 / std::sqrt(static_cast<double>(k + n));
  FactorPair f;
  f.h = (init_std * rng.normal_vector(k * r)).reshaped(k, r);
  f.m = (init_std * rng.normal_vector(n * r)).reshaped(n, r);

  LbfgsOptions lopt;
  lopt.memory = options.lbfgs_memory;
  lopt.max_iterations = options.max_inner_iters;
  lopt.grad_tolerance = options.inner_tolerance;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const FactorPair p = unpack(x, k, n, r);
    Eigen::MatrixXd gh;
    Eigen::MatrixXd gm;
    const double v = al.evaluate(p, &gh, &gm);
    g << gh.reshaped(), gm.reshaped();
    return v;
  };

  const double target = delta_n == 0.0 ? options.equality_tol : delta_n * (1.0 + options.slack_tol);
  double last_violation = al.norm(al.violation(al.residual(f)));
  double best_violation = std::numeric_limits<double>::infinity();
  FactorPair best = f;
  Eigen::VectorXcd best_lambda = al.lambda();

  for (int outer = 1; outer <= options.max_outer_iters; ++outer) {
    const LbfgsResult inner = lbfgs_minimize(objective, pack(f), lopt);
    f = unpack(inner.x, k, n, r);
    const Eigen::VectorXcd rho = al.residual(f);
    const double residual = al.norm(rho);
    const double violation = al.norm(al.violation(rho));

    TraceRow row;
    row.outer = outer;
    row.inner_iters = inner.iterations;
    row.residual = residual * y_norm;
    row.objective = (f.h.squaredNorm() + f.m.squaredNorm()) * y_norm;
    row.penalty = al.sigma();
    result.outer_iters = outer;

    if (violation < best_violation) {
      best_violation = violation;
      best = f;
      best_lambda = al.lambda();
    }
    const bool feasible = residual <= target && violation <= std::max(options.equality_tol, 0.0);
    if (feasible || violation <= options.residual_improvement * last_violation) {
      al.update_multipliers(rho);
      row.multiplier_update = true;
      last_violation = violation;
    } else {
      al.set_sigma(al.sigma() * options.penalty_growth);
    }
    result.trace.push_back(row);
    if (feasible) {
      result.converged = true;
      best = f;
      best_lambda = al.lambda();
      break;
    }
  }

  const double s = std::sqrt(y_norm);
  result.factors = {best.h * s, best.m * s};
  result.multipliers = Spectrum(op.grid().expand_half(best_lambda), SpectrumOrigin::kRealOrigin, op.shape());
  result.final_residual = std::sqrt(wnorm2(w, op.apply_factored_half(result.factors.h, result.factors.m) - y_half));
  const Rank1 lead = extract_rank1(result.factors);
  result.deficiency_ratio = lead.deficiency_ratio;
  result.rank_deficient = lead.deficiency_ratio < options.rank_deficiency_tol;
  return result;
}

}  // namespace

AugmentedLagrangian augmented_lagrangian_value_and_gradient(const MeasurementOp& op, const Spectrum& y,
                                                            const FactorPair& factors, const Spectrum& multipliers,
                                                            double sigma) {
  if (static_cast<std::size_t>(factors.h.rows()) != op.k() || static_cast<std::size_t>(factors.m.rows()) != op.n() ||
      factors.h.cols() != factors.m.cols()) {
    throw DimensionError("augmented Lagrangian: factor shapes do not match the operator");
  }
  HalfLagrangian al(op, checked_half(op, y, "augmented Lagrangian"), 0.0);
  al.set_sigma(sigma);
  al.set_lambda(checked_half(op, multipliers, "augmented Lagrangian"));
  AugmentedLagrangian out;
  out.value = al.evaluate(factors, &out.grad_h, &out.grad_m);
  return out;
}

SolveResult solve_equality(const MeasurementOp& op, const Spectrum& y, const SolverOptions& options,
                           std::uint64_t seed) {
  return solve_impl(op, y, 0.0, options, seed);
}

SolveResult solve_noisy(const MeasurementOp& op, const Spectrum& y, double delta, const SolverOptions& options,
                        std::uint64_t seed) {
  return solve_impl(op, y, delta, options, seed);
}

Rank1 extract_rank1(const FactorPair& factors) {
  if (factors.h.cols() != factors.m.cols() || factors.h.cols() < 1) {
    throw DimensionError("extract_rank1: factors must share r >= 1 columns");
  }
  const Eigen::Index k = factors.h.rows();
  const Eigen::Index n = factors.m.rows();
  Rank1 out;
  out.h = Eigen::VectorXd::Zero(k);
  out.m = Eigen::VectorXd::Zero(n);

  Eigen::HouseholderQR<Eigen::MatrixXd> qh(factors.h);
  Eigen::HouseholderQR<Eigen::MatrixXd> qm(factors.m);
  const Eigen::Index ph = std::min(k, factors.h.cols());
  const Eigen::Index pm = std::min(n, factors.m.cols());
  const Eigen::MatrixXd q_h = qh.householderQ() * Eigen::MatrixXd::Identity(k, ph);
  const Eigen::MatrixXd q_m = qm.householderQ() * Eigen::MatrixXd::Identity(n, pm);
  const Eigen::MatrixXd r_h = qh.matrixQR().topRows(ph).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_m = qm.matrixQR().topRows(pm).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r_h * r_m.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return out;

  out.sigma1 = sv(0);
  out.deficiency_ratio = sv.size() > 1 ? sv(1) / sv(0) : 0.0;
  const double root = std::sqrt(sv(0));
  out.h = root * (q_h * svd.matrixU().col(0));
  out.m = root * (q_m * svd.matrixV().col(0));
  for (Eigen::Index i = 0; i < k; ++i) {
    if (out.h(i) != 0.0) {
      if (out.h(i) < 0.0) {
        out.h = -out.h;
        out.m = -out.m;
      }
      break;
    }
  }
  return out;
}

RecoveryError align_and_error(const Eigen::VectorXd& h_est, const Eigen::VectorXd& m_est, const Eigen::VectorXd& h,
                              const Eigen::VectorXd& m) {
  if (h_est.size() != h.size() || m_est.size() != m.size()) throw DimensionError("align: shape mismatch");
  const double hn = h.norm();
  const double mn = m.norm();
  if (hn == 0.0 || mn == 0.0) throw DomainError("align: ground truth is zero, error undefined");
  RecoveryError e;
  e.err_x = (h_est * m_est.transpose() - h * m.transpose()).norm() / (hn * mn);
  const double est2 = h_est.squaredNorm();
  const double alpha = est2 > 0.0 ? h.dot(h_est) / est2 : 0.0;
  e.err_h = (h - alpha * h_est).norm() / hn;
  e.err_m = alpha != 0.0 ? (m - m_est / alpha).norm() / mn : std::numeric_limits<double>::infinity();
  return e;
}

std::string format_trace(const SolveResult& result) {
  std::ostringstream os;
  os.precision(17);
  for (const TraceRow& row : result.trace) {
    os << "outer=" << row.outer << " inner=" << row.inner_iters << " residual=" << row.residual
       << " objective=" << row.objective << " penalty=" << row.penalty
       << " multiplier_update=" << (row.multiplier_update ? 1 : 0) << '\n';
  }
  os << "final_residual=" << result.final_residual << " outer_iters=" << result.outer_iters
     << " converged=" << (result.converged ? 1 : 0) << " rank_deficient=" << (result.rank_deficient ? 1 : 0)
     << " deficiency_ratio=" << result.deficiency_ratio << '\n';
  return os.str();
}

}  // namespace blindconv
