#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Cholesky>

#include "blindconv/errors.hpp"
#include "blindconv/experiments.hpp"
#include "blindconv/lbfgs.hpp"
#include "blindconv/solver.hpp"

using namespace blindconv;

namespace {

double fd_gradient_error(const MeasurementOp& op, Rng& rng, int r) {
  const auto k = static_cast<Eigen::Index>(op.k());
  const auto n = static_cast<Eigen::Index>(op.n());
  const auto length = static_cast<Eigen::Index>(op.length());
  const Spectrum y = dft(RealSignal(rng.normal_vector(length)));
  const Spectrum lambda = dft(RealSignal(rng.normal_vector(length)));
  FactorPair f{Eigen::MatrixXd::Random(k, r), Eigen::MatrixXd::Random(n, r)};
  const double sigma = 3.0;
  const AugmentedLagrangian al = augmented_lagrangian_value_and_gradient(op, y, f, lambda, sigma);
  Eigen::VectorXd analytic(k * r + n * r);
  analytic << al.grad_h.reshaped(), al.grad_m.reshaped();
  Eigen::VectorXd numeric(analytic.size());
  const double step = 1e-6;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    double& entry = i < k * r ? f.h.data()[i] : f.m.data()[i - k * r];
    const double saved = entry;
    entry = saved + step;
    const double up = augmented_lagrangian_value_and_gradient(op, y, f, lambda, sigma).value;
    entry = saved - step;
    const double down = augmented_lagrangian_value_and_gradient(op, y, f, lambda, sigma).value;
    entry = saved;
    numeric[i] = (up - down) / (2.0 * step);
  }
  return (analytic - numeric).norm() / analytic.norm();
}

}  // namespace

TEST_CASE("lbfgs minimizes a convex quadratic and the rosenbrock function") {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Eigen::VectorXd b(Eigen::Vector3d(1, -2, 3));
  const LbfgsResult q = lbfgs_minimize(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
      },
      Eigen::VectorXd::Zero(3));
  CHECK(q.status == LbfgsStatus::kConverged);
  CHECK((q.x - a.ldlt().solve(b)).norm() <= 1e-7);

  const LbfgsResult r = lbfgs_minimize(
      [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(2);
        g[0] = -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]);
        g[1] = 200 * (x[1] - x[0] * x[0]);
        return (1 - x[0]) * (1 - x[0]) + 100 * std::pow(x[1] - x[0] * x[0], 2);
      },
      Eigen::Vector2d(-1.2, 1.0));
  CHECK(r.status == LbfgsStatus::kConverged);
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() <= 1e-6);
  CHECK(to_string(LbfgsStatus::kLineSearchFailed) == "line-search-failed");
}

TEST_CASE("augmented lagrangian gradient matches central differences") {
  Rng rng(21);
  for (auto [length, k, n] : {std::tuple{16, 3, 4}, std::tuple{31, 5, 6}, std::tuple{64, 8, 8}}) {
    const MeasurementOp op =
        MeasurementOp::build(gen_identity_basis(length, k, IdentityMode::kRandomSubset, rng), gen_gaussian_code(length, n, rng));
    CHECK(fd_gradient_error(op, rng, 2) <= 1e-5);
  }
}

TEST_CASE("equality solve recovers a planted rank-one matrix") {
  Rng rng(22);
  const PlantedInstance inst =
      make_planted(GridShape::line(128), 8, 8, BasisKind::kIdentityFirst, BasisKind::kGaussianCode, rng);
  SolverOptions opts;
  const SolveResult res = solve_equality(inst.op, inst.y, opts, 5);
  CHECK(res.converged);
  CHECK(res.final_residual <= opts.equality_tol * inst.y.values.norm());
  const double recomputed =
      (inst.op.apply(res.factors.product()).values - inst.y.values).norm();
  CHECK(std::abs(recomputed - res.final_residual) <= 1e-12 * (1.0 + inst.y.values.norm()));
  const Rank1 est = extract_rank1(res.factors);
  const RecoveryError err = align_and_error(est.h, est.m, inst.h, inst.m);
  CHECK(err.err_x < 1e-4);
  CHECK(err.err_h < 1e-4);
  CHECK(res.rank_deficient);
  CHECK(res.multipliers.size() == 128);
  CHECK(res.trace.size() == static_cast<std::size_t>(res.outer_iters));
}

TEST_CASE("noisy solve stays inside the noise ball") {
  Rng rng(23);
  const PlantedInstance inst =
      make_planted(GridShape::line(256), 10, 12, BasisKind::kIdentitySubset, BasisKind::kGaussianCode, rng);
  const double sigma = 0.02 * inst.y.values.norm() / std::sqrt(256.0);
  Eigen::VectorXd z(256);
  for (Eigen::Index i = 0; i < 256; ++i) z[i] = sigma * rng.normal();
  const Spectrum y(inst.y.values + dft(RealSignal(z)).values, SpectrumOrigin::kRealOrigin);
  const double delta = noise_ball_radius(256, sigma);
  SolverOptions opts;
  const SolveResult res = solve_noisy(inst.op, y, delta, opts, 3);
  CHECK(res.converged);
  CHECK(res.final_residual <= delta * (1.0 + opts.slack_tol));
  const Rank1 est = extract_rank1(res.factors);
  CHECK(align_and_error(est.h, est.m, inst.h, inst.m).err_x < 0.2);
}

TEST_CASE("degenerate and invalid inputs") {
  Rng rng(24);
  const MeasurementOp op =
      MeasurementOp::build(gen_identity_basis(32, 3, IdentityMode::kFirst, rng), gen_gaussian_code(32, 3, rng));
  const Spectrum zero(Eigen::VectorXcd::Zero(32), SpectrumOrigin::kRealOrigin);
  const SolveResult res = solve_equality(op, zero, SolverOptions{}, 1);
  CHECK(res.converged);
  CHECK(res.factors.product().norm() == 0.0);

  SolverOptions bad;
  bad.r = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = SolverOptions{};
  bad.penalty_growth = 1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(solve_equality(op, Spectrum(Eigen::VectorXcd::Zero(16), SpectrumOrigin::kRealOrigin), {}, 1),
                  DimensionError);
  CHECK_THROWS_AS(align_and_error(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3),
                                  Eigen::VectorXd::Ones(3)),
                  DomainError);
}

TEST_CASE("rank-one extraction and scale alignment") {
  Rng rng(25);
  const Eigen::VectorXd h = rng.normal_vector(5);
  const Eigen::VectorXd m = rng.normal_vector(7);
  FactorPair f{Eigen::MatrixXd::Zero(5, 2), Eigen::MatrixXd::Zero(7, 2)};
  f.h.col(0) = -2.0 * h;
  f.m.col(0) = -0.5 * m;
  const Rank1 r = extract_rank1(f);
  CHECK((r.h * r.m.transpose() - h * m.transpose()).norm() <= 1e-12 * h.norm() * m.norm());
  CHECK(r.deficiency_ratio <= 1e-12);
  CHECK(r.h.norm() == doctest::Approx(r.m.norm()));
  const RecoveryError e = align_and_error(3.0 * h, m / 3.0, h, m);
  CHECK(e.err_x <= 1e-12);
  CHECK(e.err_h <= 1e-12);
  CHECK(e.err_m <= 1e-12);
}

TEST_CASE("trace serialization lists every outer iteration") {
  Rng rng(26);
  const PlantedInstance inst =
      make_planted(GridShape::line(64), 4, 4, BasisKind::kIdentityFirst, BasisKind::kGaussianCode, rng);
  const SolveResult res = solve_equality(inst.op, inst.y, SolverOptions{}, 2);
  std::istringstream text(format_trace(res));
  std::string line;
  int lines = 0;
  while (std::getline(text, line)) {
    if (line.rfind("final_residual=", 0) == 0) {
      CHECK(line.find("converged=1") != std::string::npos);
      continue;
    }
    REQUIRE(lines < static_cast<int>(res.trace.size()));
    int outer = -1;
    double residual = 0.0;
    CHECK(std::sscanf(line.c_str(), "outer=%d inner=%*d residual=%lf", &outer, &residual) == 2);
    CHECK(outer == res.trace[static_cast<std::size_t>(lines)].outer);
    CHECK(residual == res.trace[static_cast<std::size_t>(lines)].residual);
    ++lines;
  }
  CHECK(lines == res.outer_iters);
}
