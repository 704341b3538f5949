#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "blindconv/basis.hpp"
#include "blindconv/errors.hpp"
#include "blindconv/measurement_operator.hpp"
#include "oracles.hpp"

using namespace blindconv;

namespace {

MeasurementOp random_op(Rng& rng, std::size_t length, std::size_t k, std::size_t n, BasisKind b_kind) {
  SubspaceBasis b = b_kind == BasisKind::kOrthonormalGeneral
                        ? gen_orthonormal_basis(length, k, rng)
                        : gen_identity_basis(length, k,
                                             b_kind == BasisKind::kIdentityFirst ? IdentityMode::kFirst
                                                                                 : IdentityMode::kRandomSubset,
                                             rng);
  return MeasurementOp::build(std::move(b), gen_gaussian_code(length, n, rng));
}

}  // namespace

TEST_CASE("basis constructors") {
  Rng rng(1);
  const SubspaceBasis first = gen_identity_basis(16, 4, IdentityMode::kFirst, rng);
  CHECK(first.indices() == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(first.is_identity());
  const SubspaceBasis orth = gen_orthonormal_basis(20, 6, rng);
  CHECK((orth.dense().transpose() * orth.dense() - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-12);
  const SubspaceBasis code = gen_gaussian_code(400, 50, rng);
  const double mean_sq = code.dense().squaredNorm() / (400.0 * 50.0);
  CHECK(mean_sq == doctest::Approx(1.0 / 400.0).epsilon(0.05));
  const Eigen::VectorXd coeffs = rng.normal_vector(6);
  const Eigen::VectorXd sig = rng.normal_vector(20);
  CHECK((orth.synthesize(coeffs) - orth.dense() * coeffs).norm() <= 1e-12);
  CHECK((orth.analyze(sig) - orth.dense().transpose() * sig).norm() <= 1e-12);
  CHECK(basis_kind_from_string(to_string(BasisKind::kHaarSubset)) == BasisKind::kHaarSubset);
  CHECK_THROWS(basis_kind_from_string("nonsense"));
}

TEST_CASE("haar subset basis is orthonormal on a 2d grid") {
  const GridShape shape{8, 8};
  const SubspaceBasis h = SubspaceBasis::haar_subset(shape, 3, {0, 5, 9, 33, 63});
  const Eigen::MatrixXd d = h.dense();
  CHECK((d.transpose() * d - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-12);
}

TEST_CASE("fast route, dense route and oracle agree") {
  Rng rng(2);
  for (BasisKind kind : {BasisKind::kIdentityFirst, BasisKind::kIdentitySubset, BasisKind::kOrthonormalGeneral}) {
    for (std::size_t length : {9u, 16u}) {
      const MeasurementOp op = random_op(rng, length, 3, 4, kind);
      const oracle::DenseOperator ref(op.b_basis().dense(), op.c_basis().dense(), op.shape());
      const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
      const Eigen::VectorXcd want = ref.apply(x);
      CHECK((op.apply(x).values - want).norm() <= 1e-12 * want.norm());
      CHECK((op.apply_dense(x).values - want).norm() <= 1e-12 * want.norm());
      const Spectrum v = dft(RealSignal(rng.normal_vector(static_cast<Eigen::Index>(length))));
      const Eigen::MatrixXd adj = ref.adjoint(v.values);
      CHECK((op.adjoint(v) - adj).norm() <= 1e-12 * (1.0 + adj.norm()));
      CHECK((op.adjoint_dense(v) - adj).norm() <= 1e-12 * (1.0 + adj.norm()));
      CHECK((op.materialize_dense() - ref.matrix()).norm() <= 1e-12 * ref.matrix().norm());
    }
  }
}

TEST_CASE("lifted operator equals the transform of the convolution") {
  Rng rng(3);
  const MeasurementOp op = random_op(rng, 24, 5, 6, BasisKind::kIdentitySubset);
  const Eigen::VectorXd h = rng.normal_vector(5);
  const Eigen::VectorXd m = rng.normal_vector(6);
  const Eigen::VectorXd w = op.b_basis().synthesize(h);
  const Eigen::VectorXd x = op.c_basis().synthesize(m);
  const Eigen::VectorXcd want = oracle::dft(oracle::circular_convolve(w, x).cast<std::complex<double>>());
  const Spectrum got = op.apply(h * m.transpose());
  CHECK((got.values - want).norm() <= 1e-12 * want.norm());
  CHECK(got.symmetry_defect() <= 1e-12);
}

TEST_CASE("2d operator on a pixel grid") {
  Rng rng(4);
  const GridShape shape{4, 8};
  const MeasurementOp op = MeasurementOp::build(SubspaceBasis::identity_columns(32, {0, 1, 9}),
                                                SubspaceBasis::haar_subset(shape, 2, {0, 3, 7, 12}), shape);
  const Eigen::VectorXd h = rng.normal_vector(3);
  const Eigen::VectorXd m = rng.normal_vector(4);
  const Eigen::VectorXd conv = oracle::circular_convolve2(op.b_basis().synthesize(h), op.c_basis().synthesize(m), shape);
  const Eigen::VectorXcd want = oracle::dft_matrix(shape) * conv.cast<std::complex<double>>();
  CHECK((op.apply(h * m.transpose()).values - want).norm() <= 1e-9 * want.norm());
}

TEST_CASE("adjoint identity on random pairs") {
  Rng rng(5);
  const MeasurementOp op = random_op(rng, 33, 4, 5, BasisKind::kOrthonormalGeneral);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
    const Spectrum v = dft(RealSignal(rng.normal_vector(33)));
    const double lhs = oracle::real_inner(op.apply(x).values, v.values);
    const double rhs = (x.array() * op.adjoint(v).array()).sum();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * x.norm() * v.values.norm());
  }
}

TEST_CASE("half-spectrum kernels agree with the full operator") {
  Rng rng(6);
  const MeasurementOp op = random_op(rng, 20, 3, 4, BasisKind::kIdentitySubset);
  const Eigen::MatrixXd h = Eigen::MatrixXd::Random(3, 2);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 2);
  const Eigen::VectorXcd half = op.apply_factored_half(h, m);
  CHECK((op.grid().expand_half(half) - op.apply(h * m.transpose()).values).norm() <= 1e-12);
  const Spectrum v = dft(RealSignal(rng.normal_vector(20)));
  CHECK((op.adjoint_half(op.grid().restrict_to_half(v.values)) - op.adjoint(v)).norm() <= 1e-12);
}

TEST_CASE("gram spectrum and operator norm match dense linear algebra") {
  Rng rng(7);
  const MeasurementOp op = random_op(rng, 32, 3, 4, BasisKind::kIdentityFirst);
  const oracle::DenseOperator ref(op.b_basis().dense(), op.c_basis().dense(), op.shape());
  const Eigen::MatrixXcd a = ref.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a * a.adjoint());
  const Eigen::VectorXd ev = es.eigenvalues();
  double lo = ev.maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-9 * ev.maxCoeff()) lo = std::min(lo, ev[i]);
  const GramSpectrum gs = gram_spectrum(op);
  CHECK(gs.lambda_max == doctest::Approx(ev.maxCoeff()).epsilon(1e-9));
  CHECK(gs.lambda_min == doctest::Approx(lo).epsilon(1e-9));

  // Over real matrices the norm is that of the stacked real and imaginary parts.
  Eigen::MatrixXd stacked(2 * a.rows(), a.cols());
  stacked << a.real(), a.imag();
  const double want = Eigen::JacobiSVD<Eigen::MatrixXd>(stacked).singularValues()[0];
  CHECK(operator_norm_dense(op) == doctest::Approx(want).epsilon(1e-10));
  const double est = operator_norm(op, 200, 9);
  CHECK(est <= want * (1.0 + 1e-9));
  CHECK(est >= 0.99 * want);
  CHECK(operator_norm(op, 5, 9) <= operator_norm(op, 50, 9) + 1e-12);
}

TEST_CASE("coherence of an identity-first basis is flat") {
  Rng rng(8);
  const MeasurementOp op = random_op(rng, 64, 8, 4, BasisKind::kIdentityFirst);
  const CoherenceReport cr = compute_coherence(fourier_columns(op.b_basis(), op.shape()), rng.unit_vector(8));
  CHECK(cr.mu_max_sq == doctest::Approx(1.0));
  CHECK(cr.mu_min_sq == doctest::Approx(1.0));
  CHECK(cr.mu_h_sq >= 1.0 - 1e-12);
}

TEST_CASE("size caps and dimension errors") {
  Rng rng(9);
  MeasurementOp::Options o;
  o.fourier_cap = 0;
  const MeasurementOp op = MeasurementOp::build(gen_identity_basis(64, 4, IdentityMode::kFirst, rng),
                                                gen_gaussian_code(64, 4, rng), GridShape::line(64), o);
  CHECK_FALSE(op.has_fourier());
  CHECK_THROWS_AS(op.fourier(), CapacityError);
  CHECK_THROWS_AS(op.materialize_dense(8), CapacityError);
  CHECK_THROWS_AS(op.apply(Eigen::MatrixXd::Zero(3, 4)), DimensionError);
  CHECK_THROWS_AS(MeasurementOp::build(gen_identity_basis(64, 4, IdentityMode::kFirst, rng),
                                       gen_gaussian_code(32, 4, rng)),
                  DimensionError);
}
