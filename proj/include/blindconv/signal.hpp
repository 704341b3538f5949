#pragma once

// Signal containers and the normalized DFT.
//
// Documentation elsewhere in this library writes indices 1-based (l = 1..L)
// to match the usual statement of circular convolution,
//   y[l] = sum_{l'=1}^{L} w[l'] x[l - l' + 1 mod L].
// Storage is 0-based: documented index l lives at position l-1.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "blindconv/fft.hpp"

namespace blindconv {

/// Finite real samples of fixed length L >= 1.
class RealSignal {
 public:
  explicit RealSignal(Eigen::VectorXd values);
  explicit RealSignal(std::span<const double> values);

  Eigen::Index size() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Eigen::VectorXd values_;
};

enum class SpectrumOrigin { kRealOrigin, kGeneral };

/// Frequency-domain vector of length L.
///
/// A real-origin spectrum is the transform of a real signal and satisfies
/// value[partner(l)] = conj(value[l]); see GridShape::conjugate_partner.
struct Spectrum {
  Eigen::VectorXcd values;
  SpectrumOrigin origin = SpectrumOrigin::kGeneral;
  GridShape shape;

  Spectrum() = default;
  Spectrum(Eigen::VectorXcd v, SpectrumOrigin o, GridShape s);
  Spectrum(Eigen::VectorXcd v, SpectrumOrigin o);

  Eigen::Index size() const { return values.size(); }
  /// Largest |value[l] - conj(value[partner(l)])|.
  double symmetry_defect() const;
  /// Projection onto conjugate-symmetric spectra, (v + Jv)/2.
  Spectrum symmetrized() const;
};

Spectrum dft(const RealSignal& s);
Spectrum dft(const Eigen::VectorXcd& s);
Spectrum dft2(const Eigen::VectorXd& s, GridShape shape);

/// Inverse transform; for real-origin input the conjugate symmetry is
/// checked first (relative tolerance 1e-9) and SymmetryError is thrown on failure.
Eigen::VectorXcd idft(const Spectrum& spectrum);
/// Real inverse of a real-origin spectrum.
RealSignal idft_real(const Spectrum& spectrum);

/// y = w (*) x with indices taken modulo L, evaluated through the DFT.
RealSignal circular_convolve(const RealSignal& w, const RealSignal& x);
/// 2D circular convolution of row-major grids.
Eigen::VectorXd circular_convolve2(const Eigen::VectorXd& w, const Eigen::VectorXd& x, GridShape shape);

}  // namespace blindconv
