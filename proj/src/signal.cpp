#include "blindconv/signal.hpp"

#include <cmath>

#include "blindconv/errors.hpp"

namespace blindconv {
namespace {

constexpr double kSymmetryTolerance = 1e-9;

void require_finite(const Eigen::VectorXd& v) {
  if (v.size() < 1) throw DimensionError("signal length must be at least 1");
  if (!v.allFinite()) throw DomainError("signal has non-finite entries");
}

}  // namespace

RealSignal::RealSignal(Eigen::VectorXd values) : values_(std::move(values)) { require_finite(values_); }

RealSignal::RealSignal(std::span<const double> values)
    : values_(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))) {
  require_finite(values_);
}

Spectrum::Spectrum(Eigen::VectorXcd v, SpectrumOrigin o, GridShape s)
    : values(std::move(v)), origin(o), shape(s) {
  if (static_cast<std::size_t>(values.size()) != shape.size()) throw DimensionError("spectrum/shape mismatch");
}

Spectrum::Spectrum(Eigen::VectorXcd v, SpectrumOrigin o)
    : values(std::move(v)), origin(o), shape(GridShape::line(static_cast<std::size_t>(values.size()))) {}

double Spectrum::symmetry_defect() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const auto p = static_cast<Eigen::Index>(shape.conjugate_partner(static_cast<std::size_t>(i)));
    worst = std::max(worst, std::abs(values[i] - std::conj(values[p])));
  }
  return worst;
}

Spectrum Spectrum::symmetrized() const {
  Eigen::VectorXcd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const auto p = static_cast<Eigen::Index>(shape.conjugate_partner(static_cast<std::size_t>(i)));
    out[i] = 0.5 * (values[i] + std::conj(values[p]));
  }
  return Spectrum(std::move(out), SpectrumOrigin::kRealOrigin, shape);
}

Spectrum dft(const RealSignal& s) {
  const Eigen::VectorXcd c = s.values().cast<cdouble>();
  Spectrum out = dft(c);
  out.origin = SpectrumOrigin::kRealOrigin;
  // Exact symmetry: the real input has no imaginary rounding to leak.
  return out.symmetrized();
}

Spectrum dft(const Eigen::VectorXcd& s) {
  if (s.size() < 1) throw DimensionError("dft of empty signal");
  FourierGrid grid(GridShape::line(static_cast<std::size_t>(s.size())));
  Eigen::VectorXcd out(s.size());
  grid.forward({s.data(), static_cast<std::size_t>(s.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  return Spectrum(std::move(out), SpectrumOrigin::kGeneral);
}

Spectrum dft2(const Eigen::VectorXd& s, GridShape shape) {
  if (static_cast<std::size_t>(s.size()) != shape.size()) throw DimensionError("dft2: shape mismatch");
  FourierGrid grid(shape);
  const Eigen::VectorXcd c = s.cast<cdouble>();
  Eigen::VectorXcd out(s.size());
  grid.forward({c.data(), shape.size()}, {out.data(), shape.size()});
  return Spectrum(std::move(out), SpectrumOrigin::kRealOrigin, shape).symmetrized();
}

Eigen::VectorXcd idft(const Spectrum& spectrum) {
  if (spectrum.size() < 1) throw DimensionError("idft of empty spectrum");
  if (spectrum.origin == SpectrumOrigin::kRealOrigin) {
    const double scale = std::max(1.0, spectrum.values.cwiseAbs().maxCoeff());
    if (spectrum.symmetry_defect() > kSymmetryTolerance * scale) {
      throw SymmetryError("real-origin spectrum violates conjugate symmetry");
    }
  }
  FourierGrid grid(spectrum.shape);
  Eigen::VectorXcd out(spectrum.size());
  grid.inverse({spectrum.values.data(), grid.size()}, {out.data(), grid.size()});
  return out;
}

RealSignal idft_real(const Spectrum& spectrum) {
  if (spectrum.origin != SpectrumOrigin::kRealOrigin) {
    throw SymmetryError("idft_real requires a real-origin spectrum");
  }
  return RealSignal(Eigen::VectorXd(idft(spectrum).real()));
}

RealSignal circular_convolve(const RealSignal& w, const RealSignal& x) {
  if (w.size() != x.size()) throw DimensionError("circular_convolve: length mismatch");
  return RealSignal(circular_convolve2(w.values(), x.values(), GridShape::line(static_cast<std::size_t>(w.size()))));
}

Eigen::VectorXd circular_convolve2(const Eigen::VectorXd& w, const Eigen::VectorXd& x, GridShape shape) {
  if (static_cast<std::size_t>(w.size()) != shape.size() || static_cast<std::size_t>(x.size()) != shape.size()) {
    throw DimensionError("circular_convolve: length mismatch");
  }
  FourierGrid grid(shape);
  Eigen::VectorXcd wh(static_cast<Eigen::Index>(grid.half_size()));
  Eigen::VectorXcd xh(static_cast<Eigen::Index>(grid.half_size()));
  grid.forward_real({w.data(), shape.size()}, {wh.data(), grid.half_size()});
  grid.forward_real({x.data(), shape.size()}, {xh.data(), grid.half_size()});
  // F(w * x) = sqrt(L) F(w) .* F(x)
  const Eigen::VectorXcd yh = std::sqrt(static_cast<double>(shape.size())) * wh.cwiseProduct(xh);
  Eigen::VectorXd y(w.size());
  grid.inverse_real({yh.data(), grid.half_size()}, {y.data(), shape.size()});
  return y;
}

}  // namespace blindconv
