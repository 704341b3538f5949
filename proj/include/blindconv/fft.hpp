#pragma once

// Unitary DFT on 1D signals and row-major 2D grids, backed by FFTW.
//
// Every transform here is the normalized one: forward(s)[w] =
// L^{-1/2} * sum_l s[l] exp(-2*pi*i*w*l/L) with 0-based w, l, so that
// ||forward(s)||_2 = ||s||_2. For a rows x cols grid the flattening is
// row-major (index = r*cols + c) and the transform is the Kronecker product
// of the two 1D transforms.
//
// Real signals have conjugate-symmetric spectra; the "half" layout stores
// only the non-redundant bins (rows x (cols/2+1)) together with weights
// (1 or 2) so that the real inner product over the full spectrum equals the
// weighted real inner product over the half.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace blindconv {

using cdouble = std::complex<double>;

/// Grid of a (possibly 2D) signal. A 1D signal of length L is {1, L}.
struct GridShape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  static GridShape line(std::size_t length) { return {1, length}; }
  std::size_t size() const { return rows * cols; }
  bool is_1d() const { return rows == 1; }
  std::size_t half_cols() const { return cols / 2 + 1; }
  std::size_t half_size() const { return rows * half_cols(); }
  /// Flat index of the frequency whose spectrum value is the conjugate of `index`.
  std::size_t conjugate_partner(std::size_t index) const;
  bool operator==(const GridShape&) const = default;
};

class FourierGrid {
 public:
  explicit FourierGrid(GridShape shape);

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return shape_.size(); }
  std::size_t half_size() const { return shape_.half_size(); }

  /// Weight of each half-layout bin in the full real inner product.
  const Eigen::VectorXd& half_weights() const { return weights_; }

  void forward(std::span<const cdouble> in, std::span<cdouble> out) const;
  void inverse(std::span<const cdouble> in, std::span<cdouble> out) const;

  /// Unitary transform of a real signal, half layout.
  void forward_real(std::span<const double> in, std::span<cdouble> half_out) const;
  /// Inverse of forward_real; the half spectrum is taken as conjugate symmetric.
  void inverse_real(std::span<const cdouble> half_in, std::span<double> out) const;

  Eigen::VectorXcd expand_half(const Eigen::VectorXcd& half) const;
  Eigen::VectorXcd restrict_to_half(const Eigen::VectorXcd& full) const;
  /// Flat full-spectrum index of half-layout bin `h`.
  std::size_t half_to_full(std::size_t h) const;

 private:
  GridShape shape_;
  Eigen::VectorXd weights_;
  double scale_;
  void* plan_forward_;
  void* plan_inverse_;
  void* plan_r2c_;
  void* plan_c2r_;
};

}  // namespace blindconv
