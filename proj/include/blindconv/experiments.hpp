#pragma once

// Experiment harness. Every run is a pure function of its spec and seed:
// each (cell, trial) draws from its own split of the root generator, so any
// single cell can be re-run in isolation and the thread count never changes
// the output.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blindconv/basis.hpp"
#include "blindconv/image.hpp"
#include "blindconv/measurement_operator.hpp"
#include "blindconv/solver.hpp"

namespace blindconv {

/// Ground truth and operator for one synthetic trial.
struct PlantedInstance {
  MeasurementOp op;
  Eigen::VectorXd h;
  Eigen::VectorXd m;
  Spectrum y;  ///< noiseless A(h m^T)
};

SubspaceBasis make_basis(BasisKind kind, GridShape shape, std::size_t dim, Rng& rng);

/// B, C from the given kinds and standard Gaussian h, m normalized to unit length.
PlantedInstance make_planted(GridShape shape, std::size_t k, std::size_t n, BasisKind b_kind, BasisKind c_kind,
                             Rng& rng);

struct PhaseGridSpec {
  std::size_t length = 512;
  std::vector<std::size_t> k_values{25, 50, 75, 100, 125, 150, 175, 200};
  std::vector<std::size_t> n_values{25, 50, 75, 100, 125, 150, 175, 200};
  int trials = 25;
  BasisKind b_kind = BasisKind::kIdentityFirst;
  BasisKind c_kind = BasisKind::kGaussianCode;
  double success_threshold = 0.02;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct PhaseRecord {
  std::size_t k = 0;
  std::size_t n = 0;
  int trial = 0;
  double err_x = 0.0;
  double residual = 0.0;
  bool converged = false;
  bool success = false;
};

struct PhaseResult {
  std::vector<PhaseRecord> records;  ///< ordered by (K index, N index, trial)
  Eigen::MatrixXd success;           ///< rows follow k_values, columns n_values
};

PhaseResult run_phase_diagram(const PhaseGridSpec& spec, unsigned threads = 1);
/// Records of one cell; identical to the matching records of the full grid.
std::vector<PhaseRecord> run_phase_cell(const PhaseGridSpec& spec, std::size_t k, std::size_t n, unsigned threads = 1);

struct SweepRecord {
  std::size_t point = 0;
  double axis = 0.0;
  int trial = 0;
  double noise_sigma = 0.0;
  double delta = 0.0;
  double err_x = 0.0;
  double err_h = 0.0;
  double err_m = 0.0;
  double residual = 0.0;
  bool converged = false;
};

struct SweepPoint {
  double axis = 0.0;
  double noise_sigma = 0.0;  ///< mean over trials
  double mean_err = 0.0;
  double stderr_err = 0.0;
  double p50_err = 0.0;
  double p90_err = 0.0;
};

struct SweepResult {
  std::string axis_name;
  std::vector<SweepRecord> records;
  std::vector<SweepPoint> points;
  /// Log-log slope of mean error against mean noise sigma (noise sweep only).
  double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Aggregates records into points, in axis order of first appearance.
std::vector<SweepPoint> aggregate(const std::vector<SweepRecord>& records, std::size_t point_count);

struct NoiseSweepSpec {
  std::size_t length = 512;
  std::size_t k = 62;
  std::size_t n = 125;
  std::vector<double> snr_db{10, 20, 30, 40, 50};
  int trials = 25;
  BasisKind b_kind = BasisKind::kIdentitySubset;
  BasisKind c_kind = BasisKind::kGaussianCode;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// Noise sigma for a target SNR 10 log10(|w|^2 |x|^2 / |z|^2) with |z|^2 ~ L sigma^2.
double noise_sigma_for_snr(double w_norm, double x_norm, std::size_t length, double snr_db);
/// Radius sqrt(L + sqrt(4L)) sigma of the noise ball.
double noise_ball_radius(std::size_t length, double sigma);

SweepResult run_noise_sweep(const NoiseSweepSpec& spec, unsigned threads = 1);

struct OversampleSpec {
  std::size_t k = 25;
  std::size_t n = 25;
  std::vector<std::size_t> lengths{75, 100, 150, 200};
  double snr_db = 20.0;
  int trials = 25;
  BasisKind b_kind = BasisKind::kIdentitySubset;
  BasisKind c_kind = BasisKind::kGaussianCode;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

SweepResult run_oversampling_sweep(const OversampleSpec& spec, unsigned threads = 1);

struct ChannelSpec {
  std::size_t length = 512;
  std::size_t n = 100;
  /// Delay taps (0-based). Empty means the identity channel {0}.
  std::vector<std::size_t> delay_support;
  /// Infinite SNR runs the equality program.
  double snr_db = std::numeric_limits<double>::infinity();
  int trials = 20;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct ChannelRecord {
  int trial = 0;
  double err_m = 0.0;
  double err_h = 0.0;
  double err_x = 0.0;
  double support_energy = 0.0;  ///< fraction of |w_est|^2 on the delay support
  bool converged = false;
};

struct ChannelReport {
  std::vector<ChannelRecord> records;
  double message_success_rate = 0.0;  ///< fraction with err_m < 0.02
};

ChannelReport run_channel_sim(const ChannelSpec& spec, unsigned threads = 1);

enum class WaveletSupport { kOracle, kTopBlurred };

std::string to_string(WaveletSupport s);
WaveletSupport wavelet_support_from_string(const std::string& name);

/// Indices of the `count` largest-magnitude entries, ascending; ties go to the lower index.
std::vector<std::size_t> top_indices(const Eigen::VectorXd& v, std::size_t count);
/// Smallest N whose top-N coefficients carry at least `fraction` of the energy.
std::size_t support_size_for_energy(const Eigen::VectorXd& coeffs, double fraction);

/// Flat indices of a centered box of side `side` on the grid, wrapping around the origin.
std::vector<std::size_t> box_kernel_support(GridShape shape, std::size_t side);

struct DeblurSpec {
  std::vector<std::size_t> kernel_support;
  /// Kernel values on the support; empty means uniform 1/K.
  std::vector<double> kernel_values;
  WaveletSupport support = WaveletSupport::kOracle;
  std::size_t n = 0;
  int levels = -1;  ///< -1 uses the deepest pyramid the grid allows
  /// Constraint radius relative to |y|; negative selects the wavelet tail of the blurred image.
  double delta_rel = 0.015;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct DeblurResult {
  Image2D blurred;
  Image2D deblurred;
  Image2D kernel;
  double err_image = 0.0;
  double err_kernel = 0.0;
  double delta = 0.0;
  bool converged = false;
};

DeblurResult run_deblur(const Image2D& image, const DeblurSpec& spec);

/// Relative error after the best scalar fit, min_a |truth - a est| / |truth|.
double scaled_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

std::string phase_csv(const PhaseGridSpec& spec, const PhaseResult& result);
std::string phase_summary_csv(const PhaseGridSpec& spec, const PhaseResult& result);
std::string sweep_csv(const SweepResult& result);
std::string sweep_summary_csv(const SweepResult& result);
std::string channel_csv(const ChannelReport& report);
/// Phase-diagram heatmap: one pixel per cell, brightness = success rate.
Image2D phase_heatmap(const PhaseResult& result);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace blindconv
