#include "blindconv/measurement_operator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "blindconv/errors.hpp"
#include "blindconv/rng.hpp"

namespace blindconv {

namespace {

bool implicit_kind(const SubspaceBasis& s) {
  return s.is_identity() || s.kind() == BasisKind::kHaarSubset;
}

Eigen::MatrixXcd forward_columns(const FourierGrid& grid, const Eigen::MatrixXd& signals, double scale) {
  const auto half = static_cast<Eigen::Index>(grid.half_size());
  Eigen::MatrixXcd out(half, signals.cols());
  for (Eigen::Index j = 0; j < signals.cols(); ++j) {
    grid.forward_real({signals.col(j).data(), grid.size()}, {out.col(j).data(), grid.half_size()});
  }
  if (scale != 1.0) out *= scale;
  return out;
}

Eigen::MatrixXd inverse_columns(const FourierGrid& grid, const Eigen::MatrixXcd& spectra) {
  if (static_cast<std::size_t>(spectra.rows()) != grid.half_size()) {
    throw DimensionError("half spectrum length does not match the grid");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), spectra.cols());
  for (Eigen::Index j = 0; j < spectra.cols(); ++j) {
    grid.inverse_real({spectra.col(j).data(), grid.half_size()}, {out.col(j).data(), grid.size()});
  }
  return out;
}

}  // namespace

MeasurementOp MeasurementOp::build(SubspaceBasis b, SubspaceBasis c) {
  const auto shape = GridShape::line(b.length());
  return build(std::move(b), std::move(c), shape, Options{});
}

MeasurementOp MeasurementOp::build(SubspaceBasis b, SubspaceBasis c, GridShape shape) {
  return build(std::move(b), std::move(c), shape, Options{});
}

MeasurementOp MeasurementOp::build(SubspaceBasis b, SubspaceBasis c, GridShape shape, Options options) {
  if (b.length() != c.length()) throw DimensionError("B and C must have the same number of rows");
  if (shape.size() != b.length()) throw DimensionError("grid size does not match basis length");
  if (b.dim() == 0 || c.dim() == 0) throw DimensionError("empty subspace");
  auto impl = std::make_shared<Impl>(Impl{std::move(b), std::move(c), FourierGrid(shape), nullptr});
  if (shape.size() * (impl->b.dim() + impl->c.dim()) <= options.fourier_cap) {
    auto fb = std::make_shared<FourierBasis>();
    fb->b_hat = fourier_columns(impl->b, shape);
    fb->c_hat = std::sqrt(static_cast<double>(shape.size())) * fourier_columns(impl->c, shape);
    impl->fourier = std::move(fb);
  }
  return MeasurementOp(std::move(impl));
}

FastPathInfo MeasurementOp::fast_path() const {
  return {implicit_kind(impl_->b), implicit_kind(impl_->c)};
}

const FourierBasis& MeasurementOp::fourier() const {
  if (!impl_->fourier) throw CapacityError("Fourier rows were not materialized for this operator size");
  return *impl_->fourier;
}

Eigen::MatrixXcd MeasurementOp::transform_b(const Eigen::MatrixXd& h) const {
  if (static_cast<std::size_t>(h.rows()) != k()) throw DimensionError("H must have K rows");
  return forward_columns(impl_->grid, impl_->b.synthesize(h), 1.0);
}

Eigen::MatrixXcd MeasurementOp::transform_c(const Eigen::MatrixXd& m) const {
  if (static_cast<std::size_t>(m.rows()) != n()) throw DimensionError("M must have N rows");
  return forward_columns(impl_->grid, impl_->c.synthesize(m), std::sqrt(static_cast<double>(length())));
}

Eigen::MatrixXd MeasurementOp::back_b(const Eigen::MatrixXcd& z) const {
  return impl_->b.analyze(inverse_columns(impl_->grid, z));
}

Eigen::MatrixXd MeasurementOp::back_c(const Eigen::MatrixXcd& z) const {
  return std::sqrt(static_cast<double>(length())) * impl_->c.analyze(inverse_columns(impl_->grid, z));
}

Eigen::VectorXcd MeasurementOp::apply_factored_half(const Eigen::MatrixXd& h, const Eigen::MatrixXd& m) const {
  if (h.cols() != m.cols()) throw DimensionError("H and M must have the same number of columns");
  return transform_b(h).cwiseProduct(transform_c(m)).rowwise().sum();
}

Eigen::MatrixXd MeasurementOp::adjoint_half(const Eigen::VectorXcd& v) const {
  if (static_cast<std::size_t>(v.size()) != impl_->grid.half_size()) {
    throw DimensionError("adjoint: half spectrum length mismatch");
  }
  // Column n of A^*(v) is B^T F^{-1}(v .* conj(sqrt(L) F c_n)).
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(n()));
  Eigen::MatrixXcd tc = transform_c(eye);
  for (Eigen::Index j = 0; j < tc.cols(); ++j) tc.col(j) = v.cwiseProduct(tc.col(j).conjugate());
  return back_b(tc);
}

Spectrum MeasurementOp::apply(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != k() || static_cast<std::size_t>(x.cols()) != n()) {
    throw DimensionError("apply: X must be K x N");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(x.cols(), x.cols());
  return Spectrum(impl_->grid.expand_half(apply_factored_half(x, eye)), SpectrumOrigin::kRealOrigin, shape());
}

Spectrum MeasurementOp::apply_dense(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != k() || static_cast<std::size_t>(x.cols()) != n()) {
    throw DimensionError("apply: X must be K x N");
  }
  const FourierBasis& fb = fourier();
  Eigen::VectorXcd out = (fb.b_hat * x.cast<cdouble>()).cwiseProduct(fb.c_hat).rowwise().sum();
  return Spectrum(std::move(out), SpectrumOrigin::kRealOrigin, shape());
}

Eigen::MatrixXd MeasurementOp::adjoint(const Spectrum& v) const {
  if (static_cast<std::size_t>(v.size()) != length()) throw DimensionError("adjoint: spectrum length mismatch");
  Spectrum sym(v.values, v.origin, shape());
  return adjoint_half(impl_->grid.restrict_to_half(sym.symmetrized().values));
}

Eigen::MatrixXd MeasurementOp::adjoint_dense(const Spectrum& v) const {
  if (static_cast<std::size_t>(v.size()) != length()) throw DimensionError("adjoint: spectrum length mismatch");
  const FourierBasis& fb = fourier();
  // sum_l v(l) b_l c_l^* = B_hat^T diag(conj v) C_hat, conjugated
  const Eigen::MatrixXcd weighted = v.values.conjugate().asDiagonal() * fb.c_hat;
  return (fb.b_hat.transpose() * weighted).real();
}

Eigen::MatrixXcd MeasurementOp::materialize_dense(std::size_t column_cap) const {
  if (k() * n() > column_cap) throw CapacityError("materialize_dense: K*N exceeds the column cap");
  const FourierBasis& fb = fourier();
  const auto kk = static_cast<Eigen::Index>(k());
  Eigen::MatrixXcd a(fb.length(), kk * static_cast<Eigen::Index>(n()));
  for (Eigen::Index nn = 0; nn < static_cast<Eigen::Index>(n()); ++nn) {
    for (Eigen::Index k0 = 0; k0 < kk; ++k0) a.col(nn * kk + k0) = fb.b_hat.col(k0).cwiseProduct(fb.c_hat.col(nn));
  }
  return a;
}

GramSpectrum gram_spectrum(const MeasurementOp& op, std::size_t length_cap) {
  if (op.length() > length_cap) throw CapacityError("gram_spectrum: L exceeds the cap");
  const FourierBasis& fb = op.fourier();
  const Eigen::MatrixXcd gram = (fb.b_hat * fb.b_hat.adjoint()).cwiseProduct(fb.c_hat * fb.c_hat.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  GramSpectrum out;
  out.lambda_max = ev.maxCoeff();
  const double floor = 1e-9 * std::max(out.lambda_max, 1e-300);
  out.lambda_min = out.lambda_max;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > floor) {
      ++out.rank;
      out.lambda_min = std::min(out.lambda_min, ev[i]);
    }
  }
  return out;
}

double operator_norm(const MeasurementOp& op, int iters, std::uint64_t seed) {
  Rng rng(seed);
  const auto kk = static_cast<Eigen::Index>(op.k());
  const auto nn = static_cast<Eigen::Index>(op.n());
  Eigen::MatrixXd x = rng.normal_vector(kk * nn).reshaped(kk, nn);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(nn, nn);
  const Eigen::VectorXd& w = op.grid().half_weights();
  double estimate = 0.0;
  for (int it = 0; it <= iters; ++it) {
    x /= x.norm();
    const Eigen::VectorXcd ax = op.apply_factored_half(x, eye);
    estimate = std::sqrt(w.dot(ax.cwiseAbs2()));
    if (it < iters) {
      x = op.adjoint_half(ax);
      if (x.norm() == 0.0) break;
    }
  }
  return estimate;
}

double operator_norm_dense(const MeasurementOp& op, std::size_t column_cap) {
  const Eigen::MatrixXcd a = op.materialize_dense(column_cap);
  // A acts on real X; stack real and imaginary parts to get the real operator.
  Eigen::MatrixXd stacked(2 * a.rows(), a.cols());
  stacked << a.real(), a.imag();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  return svd.singularValues()(0);
}

}  // namespace blindconv
