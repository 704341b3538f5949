#pragma once

// The lifted measurement operator A: R^{K x N} -> C^L,
//
//   A(X)(l) = b_l^* X c_l,   so   A(h m^T)(l) = <c_l, m> <h, b_l> = F(Bh (*) Cm)(l).
//
// The domain is real matrices, so A(X) is always conjugate symmetric and the
// adjoint is taken with respect to Re<.,.> on C^L:
//
//   A^*(v) = Re sum_l v(l) b_l c_l^*.
//
// Two evaluation routes exist. The fast route synthesizes B h and C m in the
// signal domain and transforms them with real FFTs (half-spectrum layout).
// The dense route multiplies by the cached Fourier rows and is meant for
// verification and the desk-scale theory probes.

#include <cstdint>
#include <memory>

#include <Eigen/Core>

#include "blindconv/basis.hpp"
#include "blindconv/fft.hpp"
#include "blindconv/signal.hpp"

namespace blindconv {

/// Which bases admit O(L) synthesis/analysis on the fast route.
struct FastPathInfo {
  bool b_implicit = false;
  bool c_implicit = false;
};

class MeasurementOp {
 public:
  struct Options {
    /// Fourier rows are cached only when L*(K+N) does not exceed this.
    std::size_t fourier_cap = std::size_t{1} << 21;
  };

  static MeasurementOp build(SubspaceBasis b, SubspaceBasis c);
  static MeasurementOp build(SubspaceBasis b, SubspaceBasis c, GridShape shape);
  static MeasurementOp build(SubspaceBasis b, SubspaceBasis c, GridShape shape, Options options);

  std::size_t length() const { return impl_->grid.size(); }
  std::size_t k() const { return impl_->b.dim(); }
  std::size_t n() const { return impl_->c.dim(); }
  const GridShape& shape() const { return impl_->grid.shape(); }
  const FourierGrid& grid() const { return impl_->grid; }
  const SubspaceBasis& b_basis() const { return impl_->b; }
  const SubspaceBasis& c_basis() const { return impl_->c; }
  FastPathInfo fast_path() const;

  bool has_fourier() const { return impl_->fourier != nullptr; }
  /// Cached Fourier rows; throws CapacityError if they were not materialized.
  const FourierBasis& fourier() const;

  Spectrum apply(const Eigen::MatrixXd& x) const;
  Spectrum apply_dense(const Eigen::MatrixXd& x) const;
  /// Adjoint of a spectrum. A non-symmetric v is first projected onto the
  /// conjugate-symmetric subspace, which yields the real part of the formal adjoint.
  Eigen::MatrixXd adjoint(const Spectrum& v) const;
  Eigen::MatrixXd adjoint_dense(const Spectrum& v) const;

  /// L x (K*N) matrix; column n*K + k holds A(E_{k,n}) (0-based).
  Eigen::MatrixXcd materialize_dense(std::size_t column_cap = 4096) const;

  // Half-spectrum kernels used by the solver. All spectra here are in the
  // FourierGrid half layout.

  /// Columns F(B H_j), one per column of H.
  Eigen::MatrixXcd transform_b(const Eigen::MatrixXd& h) const;
  /// Columns sqrt(L) F(C M_j).
  Eigen::MatrixXcd transform_c(const Eigen::MatrixXd& m) const;
  /// B^T F^{-1}(z_j) for conjugate-symmetric columns z_j.
  Eigen::MatrixXd back_b(const Eigen::MatrixXcd& z) const;
  /// sqrt(L) C^T F^{-1}(z_j).
  Eigen::MatrixXd back_c(const Eigen::MatrixXcd& z) const;
  /// A(H M^T) in half layout.
  Eigen::VectorXcd apply_factored_half(const Eigen::MatrixXd& h, const Eigen::MatrixXd& m) const;
  /// A^*(v) for a half-layout v.
  Eigen::MatrixXd adjoint_half(const Eigen::VectorXcd& v) const;

 private:
  struct Impl {
    SubspaceBasis b;
    SubspaceBasis c;
    FourierGrid grid;
    std::shared_ptr<const FourierBasis> fourier;
  };
  explicit MeasurementOp(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

struct GramSpectrum {
  double lambda_min = 0.0;  ///< smallest nonzero eigenvalue of A A^*
  double lambda_max = 0.0;
  Eigen::Index rank = 0;
};

/// Extreme nonzero eigenvalues of the L x L Gram matrix A A^*; dense, so L is capped.
GramSpectrum gram_spectrum(const MeasurementOp& op, std::size_t length_cap = 2048);

/// Power-iteration estimate of ||A|| from a seeded start; nondecreasing in iters.
double operator_norm(const MeasurementOp& op, int iters, std::uint64_t seed = 0);

/// Largest singular value of the dense materialization.
double operator_norm_dense(const MeasurementOp& op, std::size_t column_cap = 4096);

}  // namespace blindconv
