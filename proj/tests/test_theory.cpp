#include <doctest.h>

#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "blindconv/errors.hpp"
#include "blindconv/experiments.hpp"
#include "blindconv/theory.hpp"
#include "oracles.hpp"

using namespace blindconv;

namespace {

MeasurementOp identity_gaussian(Rng& rng, std::size_t length, std::size_t k, std::size_t n) {
  return MeasurementOp::build(gen_identity_basis(length, k, IdentityMode::kFirst, rng), gen_gaussian_code(length, n, rng));
}

/// KN x KN matrix of a linear map on K x N matrices in column-major vec form.
Eigen::MatrixXd matrix_of(const MatrixMap& f, Eigen::Index k, Eigen::Index n) {
  Eigen::MatrixXd out(k * n, k * n);
  for (Eigen::Index j = 0; j < k * n; ++j) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, n);
    e.data()[j] = 1.0;
    out.col(j) = f(e).reshaped();
  }
  return out;
}

}  // namespace

TEST_CASE("tangent projectors") {
  Rng rng(31);
  const TangentSpace ts(rng.unit_vector(4), rng.unit_vector(6));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 6);
  const Eigen::MatrixXd ph = ts.h * ts.h.transpose();
  const Eigen::MatrixXd pm = ts.m * ts.m.transpose();
  CHECK((project_T(ts, x) - (ph * x + x * pm - ph * x * pm)).norm() <= 1e-14);
  CHECK((project_T(ts, x) + project_Tperp(ts, x) - x).norm() <= 1e-14);
  CHECK((project_T(ts, project_T(ts, x)) - project_T(ts, x)).norm() <= 1e-14);
  CHECK((project_T(ts, ts.outer()) - ts.outer()).norm() <= 1e-14);
  CHECK(project_Tperp(ts, ts.outer()).norm() <= 1e-14);
  CHECK(check_projector_algebra(ts, 20, 3) <= 1e-12);
  CHECK_THROWS_AS(TangentSpace(Eigen::VectorXd::Ones(3), rng.unit_vector(3)), DomainError);
}

TEST_CASE("tangent conditioning matches a dense computation") {
  Rng rng(32);
  const MeasurementOp op = identity_gaussian(rng, 64, 3, 4);
  const TangentSpace ts(rng.unit_vector(3), rng.unit_vector(4));
  const oracle::DenseOperator ref(op.b_basis().dense(), op.c_basis().dense(), op.shape());
  const Eigen::MatrixXcd a = ref.matrix();
  const Eigen::MatrixXd gram = (a.adjoint() * a).real();
  const Eigen::MatrixXd pt = matrix_of([&](const Eigen::MatrixXd& x) { return project_T(ts, x); }, 3, 4);
  const Eigen::MatrixXd d = pt * gram * pt - pt;
  const double want = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(check_T_conditioning(op, ts) == doctest::Approx(want).epsilon(1e-9));
  // The power-iteration path agrees with the dense one.
  const MatrixMap g = [&](const Eigen::MatrixXd& x) { return op.adjoint(op.apply(x)); };
  CHECK(t_conditioning_norm(ts, g, 1) == doctest::Approx(want).epsilon(1e-3));
}

TEST_CASE("golfing partitions") {
  Rng rng(33);
  const MeasurementOp op = identity_gaussian(rng, 256, 4, 4);
  const GolfingPartition strided = make_golfing_partition(op, 8, 1, 1, PartitionScheme::kStrided);
  CHECK(strided.subsets.size() == 8);
  std::set<std::size_t> seen;
  for (const auto& s : strided.subsets) {
    CHECK(s.size() == 32);
    seen.insert(s.begin(), s.end());
  }
  CHECK(seen.size() == 256);
  CHECK(strided.conditioning_margin <= 1e-12);

  // Direct margin of one subset from the Fourier rows.
  const FourierBasis& fb = op.fourier();
  const auto& sub = strided.subsets[3];
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(4, 4);
  for (std::size_t l : sub) s += fb.b_row(static_cast<Eigen::Index>(l)) * fb.b_row(static_cast<Eigen::Index>(l)).adjoint();
  s -= (static_cast<double>(sub.size()) / 256.0) * Eigen::MatrixXcd::Identity(4, 4);
  const double direct = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(s).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(partition_margins(op, {sub})[0] == doctest::Approx(direct).epsilon(1e-9).scale(1.0));

  const GolfingPartition random = make_golfing_partition(op, 2, 7, 50, PartitionScheme::kRandom);
  for (const auto& subset : random.subsets) {
    for (std::size_t l : subset) {
      const std::size_t partner = (256 - l) % 256;
      CHECK(std::find(subset.begin(), subset.end(), partner) != subset.end());
    }
  }
  CHECK_THROWS_AS(make_golfing_partition(identity_gaussian(rng, 256, 8, 4), 32, 1, 2, PartitionScheme::kRandom),
                  RetriesExhausted);
}

TEST_CASE("golfing certificate trace") {
  Rng rng(34);
  const MeasurementOp op = identity_gaussian(rng, 1024, 8, 8);
  const TangentSpace ts(rng.unit_vector(8), rng.unit_vector(8));
  const GolfingPartition part = make_golfing_partition(op, 8, 2, 1, PartitionScheme::kStrided);
  const CertificateTrace tr = build_certificate(op, ts, part);
  REQUIRE(tr.steps.size() == 9);
  CHECK(tr.steps[0].w_norm == doctest::Approx(1.0));
  CHECK(std::isnan(tr.steps.back().mu));
  CHECK(tr.gamma == doctest::Approx(std::sqrt(2.0 * 8.0 * std::log(1024.0))));
  // The certificate lies in the range of the adjoint, and its final residual is recorded.
  CHECK(tr.final_residual == doctest::Approx((ts.outer() - project_T(ts, tr.y)).norm()));
  CHECK(tr.final_residual == doctest::Approx(tr.steps.back().w_norm));
}

TEST_CASE("operator norm and gram reports") {
  Rng rng(35);
  const MeasurementOp op = identity_gaussian(rng, 128, 8, 16);
  const OperatorNormReport on = check_operator_norm(op, 1.0, 100, 4);
  CHECK(on.bound == doctest::Approx(std::sqrt(16.0 * (std::log(16.0 * 128.0 / 2.0) + std::log(128.0)))));
  CHECK(on.estimate <= operator_norm_dense(op) * (1.0 + 1e-9));
  CHECK(on.within == (on.estimate <= on.bound));

  const GramBoundReport gr = check_gram_bounds(op);
  const GramSpectrum gs = gram_spectrum(op);
  CHECK(gr.lambda_max == doctest::Approx(gs.lambda_max));
  CHECK(gr.mu_min_sq == doctest::Approx(1.0));
  CHECK(gr.lower == doctest::Approx(0.48 * 128.0 / 128.0));
  CHECK(gr.upper == doctest::Approx(4.5 * 128.0 / 128.0));
  CHECK_FALSE(gr.hypothesis);
}

TEST_CASE("expectation identities on a small sample") {
  Eigen::VectorXd v(3);
  v << 2.0, -1.0, 0.5;
  const ExpectationReport rep = check_expectation_identities(3, 200000, 8, v, 1);
  CHECK(rep.fourth_moment.pass);
  CHECK(rep.weighted_norm_sq.pass);
  CHECK_FALSE(rep.weighted_identity.pass);
  const ExpectationReport again = check_expectation_identities(3, 200000, 8, v, 3);
  CHECK(again.fourth_moment.max_z == rep.fourth_moment.max_z);
}

TEST_CASE("stability probe and adjointness") {
  Rng rng(36);
  const MeasurementOp op = identity_gaussian(rng, 128, 6, 6);
  CHECK(check_adjointness(op, 20, 1) <= 1e-10);
  const TangentSpace ts(rng.unit_vector(6), rng.unit_vector(6));
  const StabilityReport rep = check_stability_bound(op, ts, {1e-3, 1e-2, 1e-1}, 2, 5);
  REQUIRE(rep.points.size() == 3);
  CHECK(rep.points[0].mean_error < rep.points[2].mean_error);
  CHECK(rep.slope == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("report formatting") {
  const std::string text = format_report({{"gram-conditioning", "L=256", 20, 0.95, "ok"}});
  CHECK(text.find("gram-conditioning") != std::string::npos);
  CHECK(text.find("0.950") != std::string::npos);
}
