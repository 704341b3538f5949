#pragma once
// Independent reference implementations used by the tests: direct O(L^2)
// transforms and convolutions, and a dense operator assembled from the
// explicit DFT matrix.
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>

#include "blindconv/basis.hpp"
#include "blindconv/fft.hpp"

namespace oracle {

using cd = std::complex<double>;

/// Unitary DFT matrix, entry (w, l) = exp(-2 pi i w l / L) / sqrt(L).
inline Eigen::MatrixXcd dft_matrix(std::size_t length) {
  const auto n = static_cast<Eigen::Index>(length);
  Eigen::MatrixXcd f(n, n);
  for (Eigen::Index w = 0; w < n; ++w) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((w * l) % n) / static_cast<double>(n);
      f(w, l) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), angle);
    }
  }
  return f;
}

/// Row-major 2D unitary DFT as a Kronecker product.
inline Eigen::MatrixXcd dft_matrix(blindconv::GridShape shape) {
  const Eigen::MatrixXcd fr = dft_matrix(shape.rows);
  const Eigen::MatrixXcd fc = dft_matrix(shape.cols);
  const auto r = static_cast<Eigen::Index>(shape.rows);
  const auto c = static_cast<Eigen::Index>(shape.cols);
  Eigen::MatrixXcd f(r * c, r * c);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) f.block(a * c, b * c, c, c) = fr(a, b) * fc;
  return f;
}

inline Eigen::VectorXcd dft(const Eigen::VectorXcd& s) { return dft_matrix(static_cast<std::size_t>(s.size())) * s; }

/// y[l] = sum_j w[j] x[(l - j) mod L], evaluated directly.
inline Eigen::VectorXd circular_convolve(const Eigen::VectorXd& w, const Eigen::VectorXd& x) {
  const Eigen::Index n = w.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index j = 0; j < n; ++j) y[l] += w[j] * x[((l - j) % n + n) % n];
  return y;
}

inline Eigen::VectorXd circular_convolve2(const Eigen::VectorXd& w, const Eigen::VectorXd& x,
                                          blindconv::GridShape shape) {
  const auto r = static_cast<Eigen::Index>(shape.rows);
  const auto c = static_cast<Eigen::Index>(shape.cols);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(r * c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = 0; b < c; ++b)
          y[i * c + j] += w[a * c + b] * x[((i - a + r) % r) * c + (j - b + c) % c];
  return y;
}

/// Dense lifted operator: row l of bh is b_l^*, row l of ch is c_l^T.
struct DenseOperator {
  Eigen::MatrixXcd bh;
  Eigen::MatrixXcd ch;

  DenseOperator(const Eigen::MatrixXd& b, const Eigen::MatrixXd& c, blindconv::GridShape shape) {
    const Eigen::MatrixXcd f = dft_matrix(shape);
    bh = f * b.cast<cd>();
    ch = std::sqrt(static_cast<double>(shape.size())) * f * c.cast<cd>();
  }

  Eigen::VectorXcd apply(const Eigen::MatrixXd& x) const {
    Eigen::VectorXcd y(bh.rows());
    for (Eigen::Index l = 0; l < bh.rows(); ++l) y[l] = (bh.row(l) * x.cast<cd>() * ch.row(l).transpose())(0, 0);
    return y;
  }

  Eigen::MatrixXd adjoint(const Eigen::VectorXcd& v) const {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(bh.cols(), ch.cols());
    for (Eigen::Index l = 0; l < bh.rows(); ++l) acc += v[l] * bh.row(l).adjoint() * ch.row(l).conjugate();
    return acc.real();
  }

  /// L x KN matrix with column n*K + k equal to A(E_kn).
  Eigen::MatrixXcd matrix() const {
    const Eigen::Index k = bh.cols();
    const Eigen::Index n = ch.cols();
    Eigen::MatrixXcd a(bh.rows(), k * n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < k; ++i) a.col(j * k + i) = bh.col(i).cwiseProduct(ch.col(j));
    return a;
  }
};

inline double real_inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return a.dot(b).real(); }

}  // namespace oracle
