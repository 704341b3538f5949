#include "blindconv/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/QR>

#include "blindconv/errors.hpp"
#include "blindconv/haar.hpp"

namespace blindconv {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kIdentityFirst: return "identity-first";
    case BasisKind::kIdentitySubset: return "identity-random-subset";
    case BasisKind::kOrthonormalGeneral: return "orthonormal-general";
    case BasisKind::kGaussianCode: return "gaussian-code";
    case BasisKind::kHaarSubset: return "haar-wavelet-subset";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  for (auto kind : {BasisKind::kIdentityFirst, BasisKind::kIdentitySubset, BasisKind::kOrthonormalGeneral,
                    BasisKind::kGaussianCode, BasisKind::kHaarSubset}) {
    if (to_string(kind) == name) return kind;
  }
  throw DomainError("unknown basis kind '" + name + "'");
}

SubspaceBasis SubspaceBasis::identity_columns(std::size_t length, std::vector<std::size_t> indices) {
  if (indices.empty() || indices.size() > length) throw DimensionError("identity basis: need 1 <= D <= L");
  std::set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= length) throw DimensionError("identity basis: index out of range");
    if (!seen.insert(i).second) throw DimensionError("identity basis: duplicate index");
  }
  SubspaceBasis b;
  bool first = true;
  for (std::size_t i = 0; i < indices.size(); ++i) first = first && indices[i] == i;
  b.kind_ = first ? BasisKind::kIdentityFirst : BasisKind::kIdentitySubset;
  b.length_ = length;
  b.dim_ = indices.size();
  b.indices_ = std::move(indices);
  return b;
}

SubspaceBasis SubspaceBasis::dense(Eigen::MatrixXd columns, BasisKind kind) {
  if (columns.cols() < 1 || columns.cols() > columns.rows()) throw DimensionError("dense basis: need 1 <= D <= L");
  if (!columns.allFinite()) throw DomainError("dense basis: non-finite entries");
  SubspaceBasis b;
  b.kind_ = kind;
  b.length_ = static_cast<std::size_t>(columns.rows());
  b.dim_ = static_cast<std::size_t>(columns.cols());
  b.columns_ = std::move(columns);
  return b;
}

SubspaceBasis SubspaceBasis::haar_subset(GridShape shape, int levels, std::vector<std::size_t> indices) {
  if (indices.empty() || indices.size() > shape.size()) throw DimensionError("haar basis: need 1 <= D <= L");
  if (levels < 0 || levels > max_haar_levels(shape)) throw DimensionError("haar basis: grid not divisible by 2^levels");
  std::set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= shape.size()) throw DimensionError("haar basis: index out of range");
    if (!seen.insert(i).second) throw DimensionError("haar basis: duplicate index");
  }
  SubspaceBasis b;
  b.kind_ = BasisKind::kHaarSubset;
  b.length_ = shape.size();
  b.dim_ = indices.size();
  b.indices_ = std::move(indices);
  b.haar_shape_ = shape;
  b.haar_levels_ = levels;
  return b;
}

std::optional<GridShape> SubspaceBasis::haar_grid() const {
  if (kind_ != BasisKind::kHaarSubset) return std::nullopt;
  return haar_shape_;
}

Eigen::VectorXd SubspaceBasis::synthesize(const Eigen::VectorXd& coeffs) const {
  if (static_cast<std::size_t>(coeffs.size()) != dim_) throw DimensionError("synthesize: coefficient length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length_));
  switch (kind_) {
    case BasisKind::kIdentityFirst:
    case BasisKind::kIdentitySubset:
      for (std::size_t d = 0; d < dim_; ++d) out[static_cast<Eigen::Index>(indices_[d])] = coeffs[static_cast<Eigen::Index>(d)];
      return out;
    case BasisKind::kHaarSubset:
      for (std::size_t d = 0; d < dim_; ++d) out[static_cast<Eigen::Index>(indices_[d])] = coeffs[static_cast<Eigen::Index>(d)];
      return haar_inverse(out, haar_shape_, haar_levels_);
    case BasisKind::kOrthonormalGeneral:
    case BasisKind::kGaussianCode:
      return columns_ * coeffs;
  }
  return out;
}

Eigen::VectorXd SubspaceBasis::analyze(const Eigen::VectorXd& signal) const {
  if (static_cast<std::size_t>(signal.size()) != length_) throw DimensionError("analyze: signal length mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_));
  switch (kind_) {
    case BasisKind::kIdentityFirst:
    case BasisKind::kIdentitySubset:
      for (std::size_t d = 0; d < dim_; ++d) out[static_cast<Eigen::Index>(d)] = signal[static_cast<Eigen::Index>(indices_[d])];
      return out;
    case BasisKind::kHaarSubset: {
      const Eigen::VectorXd coeffs = haar_forward(signal, haar_shape_, haar_levels_);
      for (std::size_t d = 0; d < dim_; ++d) out[static_cast<Eigen::Index>(d)] = coeffs[static_cast<Eigen::Index>(indices_[d])];
      return out;
    }
    case BasisKind::kOrthonormalGeneral:
    case BasisKind::kGaussianCode:
      return columns_.transpose() * signal;
  }
  return out;
}

Eigen::MatrixXd SubspaceBasis::synthesize(const Eigen::MatrixXd& coeffs) const {
  if (kind_ == BasisKind::kOrthonormalGeneral || kind_ == BasisKind::kGaussianCode) {
    if (static_cast<std::size_t>(coeffs.rows()) != dim_) throw DimensionError("synthesize: coefficient rows mismatch");
    return columns_ * coeffs;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(length_), coeffs.cols());
  for (Eigen::Index j = 0; j < coeffs.cols(); ++j) out.col(j) = synthesize(Eigen::VectorXd(coeffs.col(j)));
  return out;
}

Eigen::MatrixXd SubspaceBasis::analyze(const Eigen::MatrixXd& signals) const {
  if (kind_ == BasisKind::kOrthonormalGeneral || kind_ == BasisKind::kGaussianCode) {
    if (static_cast<std::size_t>(signals.rows()) != length_) throw DimensionError("analyze: signal rows mismatch");
    return columns_.transpose() * signals;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim_), signals.cols());
  for (Eigen::Index j = 0; j < signals.cols(); ++j) out.col(j) = analyze(Eigen::VectorXd(signals.col(j)));
  return out;
}

Eigen::MatrixXd SubspaceBasis::dense() const {
  if (kind_ == BasisKind::kOrthonormalGeneral || kind_ == BasisKind::kGaussianCode) return columns_;
  return synthesize(Eigen::MatrixXd(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_))));
}

SubspaceBasis gen_gaussian_code(std::size_t length, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return gen_gaussian_code(length, dim, rng);
}

SubspaceBasis gen_gaussian_code(std::size_t length, std::size_t dim, Rng& rng) {
  if (dim < 1 || dim > length) throw DimensionError("gaussian code: need L >= N >= 1");
  const double sd = 1.0 / std::sqrt(static_cast<double>(length));
  Eigen::MatrixXd c(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) = sd * rng.normal();
  }
  return SubspaceBasis::dense(std::move(c), BasisKind::kGaussianCode);
}

SubspaceBasis gen_identity_basis(std::size_t length, std::size_t dim, IdentityMode mode, std::uint64_t seed) {
  Rng rng(seed);
  return gen_identity_basis(length, dim, mode, rng);
}

SubspaceBasis gen_identity_basis(std::size_t length, std::size_t dim, IdentityMode mode, Rng& rng) {
  if (dim < 1 || dim > length) throw DimensionError("identity basis: need 1 <= D <= L");
  std::vector<std::size_t> idx;
  if (mode == IdentityMode::kFirst) {
    idx.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) idx[i] = i;
  } else {
    idx = rng.subset(length, dim);
  }
  return SubspaceBasis::identity_columns(length, std::move(idx));
}

SubspaceBasis gen_orthonormal_basis(std::size_t length, std::size_t dim, Rng& rng) {
  if (dim < 1 || dim > length) throw DimensionError("orthonormal basis: need 1 <= D <= L");
  Eigen::MatrixXd g(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return SubspaceBasis::dense(std::move(q), BasisKind::kOrthonormalGeneral);
}

Eigen::MatrixXcd fourier_columns(const SubspaceBasis& basis, GridShape shape) {
  if (shape.size() != basis.length()) throw DimensionError("fourier_columns: grid does not match basis length");
  FourierGrid grid(shape);
  const Eigen::MatrixXd dense = basis.dense();
  Eigen::MatrixXcd out(dense.rows(), dense.cols());
  Eigen::VectorXcd half(static_cast<Eigen::Index>(grid.half_size()));
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    const Eigen::VectorXd col = dense.col(j);
    grid.forward_real({col.data(), grid.size()}, {half.data(), grid.half_size()});
    out.col(j) = grid.expand_half(half);
  }
  return out;
}

CoherenceReport compute_coherence(const Eigen::MatrixXcd& b_hat, const Eigen::VectorXd& h) {
  if (h.size() != b_hat.cols()) throw DimensionError("coherence: h length must equal K");
  if (std::abs(h.norm() - 1.0) > 1e-10) throw DomainError("coherence: h must have unit norm");
  const double length = static_cast<double>(b_hat.rows());
  const double dim = static_cast<double>(b_hat.cols());
  const Eigen::VectorXd row_energy = b_hat.rowwise().squaredNorm();
  // <h, b_l> = b_l^* h = (row l of F B) h
  const Eigen::VectorXd proj = (b_hat * h.cast<cdouble>()).cwiseAbs2();
  CoherenceReport r;
  r.mu_max_sq = length / dim * row_energy.maxCoeff();
  r.mu_min_sq = length / dim * row_energy.minCoeff();
  r.mu_h_sq = length * proj.maxCoeff();
  return r;
}

}  // namespace blindconv
