#pragma once

// Subspace bases B (L x K) and C (L x N), their Fourier-domain forms, and
// coherence statistics.
//
// Bases are stored implicitly where possible: identity subsets keep only
// their column indices and Haar subsets only their coefficient indices, so
// synthesis (B h) and analysis (B^T s) stay O(L) for them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blindconv/fft.hpp"
#include "blindconv/rng.hpp"

namespace blindconv {

enum class BasisKind {
  kIdentityFirst,
  kIdentitySubset,
  kOrthonormalGeneral,
  kGaussianCode,
  kHaarSubset,
};

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

enum class IdentityMode { kFirst, kRandomSubset };

class SubspaceBasis {
 public:
  /// Columns e_i of the L x L identity for the given (distinct) indices.
  static SubspaceBasis identity_columns(std::size_t length, std::vector<std::size_t> indices);
  static SubspaceBasis dense(Eigen::MatrixXd columns, BasisKind kind);
  /// Orthonormal Haar basis functions of `shape` selected by coefficient index.
  static SubspaceBasis haar_subset(GridShape shape, int levels, std::vector<std::size_t> indices);

  BasisKind kind() const { return kind_; }
  std::size_t length() const { return length_; }
  std::size_t dim() const { return dim_; }
  /// Column indices (identity kinds) or coefficient indices (Haar).
  const std::vector<std::size_t>& indices() const { return indices_; }
  bool is_identity() const { return kind_ == BasisKind::kIdentityFirst || kind_ == BasisKind::kIdentitySubset; }
  /// Grid the Haar functions live on; nullopt for other kinds.
  std::optional<GridShape> haar_grid() const;

  /// basis * coeffs, coeffs of length dim().
  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;
  /// basis^T * signal, signal of length length().
  Eigen::VectorXd analyze(const Eigen::VectorXd& signal) const;
  /// Column-wise versions.
  Eigen::MatrixXd synthesize(const Eigen::MatrixXd& coeffs) const;
  Eigen::MatrixXd analyze(const Eigen::MatrixXd& signals) const;

  Eigen::MatrixXd dense() const;

 private:
  SubspaceBasis() = default;

  BasisKind kind_ = BasisKind::kIdentityFirst;
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::size_t> indices_;
  Eigen::MatrixXd columns_;
  GridShape haar_shape_;
  int haar_levels_ = 0;
};

/// L x N code with i.i.d. Normal(0, 1/L) entries.
SubspaceBasis gen_gaussian_code(std::size_t length, std::size_t dim, std::uint64_t seed);
SubspaceBasis gen_gaussian_code(std::size_t length, std::size_t dim, Rng& rng);
SubspaceBasis gen_identity_basis(std::size_t length, std::size_t dim, IdentityMode mode, std::uint64_t seed);
SubspaceBasis gen_identity_basis(std::size_t length, std::size_t dim, IdentityMode mode, Rng& rng);
/// Orthonormal columns from the QR factorization of a Gaussian matrix.
SubspaceBasis gen_orthonormal_basis(std::size_t length, std::size_t dim, Rng& rng);

/// Fourier forms of a (B, C) pair on a grid.
///
/// b_hat is F B (row l is the conjugate transpose of b_l) and c_hat is
/// sqrt(L) F C (row l is the transpose of c_l), matching the measurement
/// model y(l) = <c_l, m> <h, b_l>.
struct FourierBasis {
  Eigen::MatrixXcd b_hat;
  Eigen::MatrixXcd c_hat;

  Eigen::Index length() const { return b_hat.rows(); }
  Eigen::VectorXcd b_row(Eigen::Index l) const { return b_hat.row(l).adjoint(); }
  Eigen::VectorXcd c_row(Eigen::Index l) const { return c_hat.row(l).transpose(); }
};

/// F * basis on the given grid, column by column.
Eigen::MatrixXcd fourier_columns(const SubspaceBasis& basis, GridShape shape);

struct CoherenceReport {
  double mu_max_sq = 0.0;
  double mu_min_sq = 0.0;
  double mu_h_sq = 0.0;
};

/// Coherence statistics of the B-role basis (given as b_hat = F B) and a unit h:
///   mu_max^2 = (L/K) max_l ||b_l||^2,  mu_min^2 = (L/K) min_l ||b_l||^2,
///   mu_h^2 = L max_l |<h, b_l>|^2.
CoherenceReport compute_coherence(const Eigen::MatrixXcd& b_hat, const Eigen::VectorXd& h);

}  // namespace blindconv
