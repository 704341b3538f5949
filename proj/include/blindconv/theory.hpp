#pragma once

// Executable versions of the recovery analysis: tangent-space projectors,
// the golfing construction of a dual certificate, conditioning probes and
// Monte-Carlo checks of the Gaussian moment identities.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blindconv/measurement_operator.hpp"
#include "blindconv/solver.hpp"

namespace blindconv {

/// T = { h v^T + u m^T } for unit h, m.
struct TangentSpace {
  Eigen::VectorXd h;
  Eigen::VectorXd m;

  /// Throws DomainError unless both vectors have unit norm to 1e-10.
  TangentSpace(Eigen::VectorXd h_unit, Eigen::VectorXd m_unit);
  Eigen::MatrixXd outer() const { return h * m.transpose(); }
};

/// P_H X + X P_M - P_H X P_M.
Eigen::MatrixXd project_T(const TangentSpace& ts, const Eigen::MatrixXd& x);
/// (I - P_H) X (I - P_M).
Eigen::MatrixXd project_Tperp(const TangentSpace& ts, const Eigen::MatrixXd& x);

using MatrixMap = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Spectral norm of P_T G P_T - P_T on K x N matrices, for a symmetric map G.
/// Dense when K*N <= cap, power iteration otherwise.
double t_conditioning_norm(const TangentSpace& ts, const MatrixMap& gram, std::size_t cap = 4096);

/// ||P_T A^*A P_T - P_T||.
double check_T_conditioning(const MeasurementOp& op, const TangentSpace& ts, std::size_t cap = 4096);

enum class PartitionScheme {
  /// Random unions of conjugate pairs {l, L-l}, re-drawn until the margin condition holds.
  kRandom,
  /// Residue classes l = const (mod P), assigned to subsets in random order.
  kStrided,
};

struct GolfingPartition {
  std::vector<std::vector<std::size_t>> subsets;
  std::size_t q = 0;  ///< nominal subset size floor(L / P)
  double conditioning_margin = 0.0;
  std::vector<double> margins;
  int draws = 0;
};

/// ||sum_{k in subset} b_k b_k^* - (|subset| / L) I|| for each subset.
std::vector<double> partition_margins(const MeasurementOp& op, const std::vector<std::vector<std::size_t>>& subsets);

/// Random partition accepted once every margin is at most |subset| / (4L);
/// throws RetriesExhausted after max_retries draws.
GolfingPartition make_golfing_partition(const MeasurementOp& op, std::size_t p, std::uint64_t seed, int max_retries,
                                        PartitionScheme scheme = PartitionScheme::kRandom);

struct CertificateStep {
  double w_norm = 0.0;          ///< ||W_p||_F
  double w_tperp = 0.0;         ///< ||P_Tperp(W_p)||_F
  double mu = 0.0;              ///< mu_p, NaN after the last subset
  double y_tperp_spectral = 0.0;
};

struct CertificateTrace {
  std::vector<CertificateStep> steps;  ///< p = 0..P
  Eigen::MatrixXd y;
  double gamma = 0.0;
  double final_residual = 0.0;       ///< ||hm^T - P_T(Y_P)||_F
  double final_tperp = 0.0;          ///< ||P_Tperp(Y_P)||
  bool residual_condition = false;   ///< final_residual <= 1 / (4 sqrt(2) gamma)
  bool tperp_condition = false;      ///< final_tperp < 3/4
  bool w_decay = false;              ///< ||W_p||_F <= 2^-p for all p
  bool mu_decay = false;             ///< mu_p <= mu_{p-1} / 2 for all p < P
};

/// Y_p = Y_{p-1} + (L/Q) A_p^*A_p (hm^T - P_T(Y_{p-1})), with gamma = sqrt((alpha+1) N log L).
CertificateTrace build_certificate(const MeasurementOp& op, const TangentSpace& ts, const GolfingPartition& partition,
                                   double alpha = 1.0);

struct GramBoundReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double mu_min_sq = 0.0;
  double mu_max_sq = 0.0;
  double lower = 0.0;  ///< 0.48 mu_min^2 NK / L
  double upper = 0.0;  ///< 4.5 mu_max^2 NK / L
  bool hypothesis = false;  ///< NK >= L log^2 L / mu_min^2
  bool within = false;
};

GramBoundReport check_gram_bounds(const MeasurementOp& op, std::size_t length_cap = 2048);

struct OperatorNormReport {
  double estimate = 0.0;
  double bound = 0.0;  ///< sqrt(N (log(NL/2) + alpha log L))
  double gamma = 0.0;  ///< sqrt((alpha+1) N log L)
  bool within = false;
};

OperatorNormReport check_operator_norm(const MeasurementOp& op, double alpha = 1.0, int iters = 100,
                                       std::uint64_t seed = 0);

struct MomentComparison {
  std::string name;
  double max_abs_deviation = 0.0;
  double max_z = 0.0;  ///< largest |mean - target| / standard error over entries
  bool pass = false;   ///< max_z <= 5
};

struct ExpectationReport {
  std::size_t n = 0;
  std::size_t samples = 0;
  MomentComparison fourth_moment;     ///< E[(cc^* - I)^2] against N I
  MomentComparison weighted_norm_sq;  ///< E[(cc^* - I) vv^* (cc^* - I)] against |v|^2 I
  MomentComparison weighted_identity; ///< same sample mean against I
};

/// Monte-Carlo means over c with i.i.d. complex Normal entries (unit variance).
ExpectationReport check_expectation_identities(std::size_t n, std::size_t samples, std::uint64_t seed,
                                               const Eigen::VectorXd& v, unsigned threads = 1);

struct StabilityPoint {
  double delta_rel = 0.0;  ///< delta / ||y||
  double mean_error = 0.0; ///< mean ||X - X0||_F / ||X0||_F
  double mean_ratio = 0.0; ///< error / ((lambda_max/lambda_min) sqrt(min(K,N)) delta)
  int converged = 0;
};

struct StabilityReport {
  std::vector<StabilityPoint> points;
  double slope = 0.0;  ///< log-log fit of error against delta over delta > 0
  double condition = 0.0;
};

/// Solves noisy instances y = A(hm^T) + z, ||z|| = delta, over the given relative levels and seeds.
StabilityReport check_stability_bound(const MeasurementOp& op, const TangentSpace& ts,
                                      const std::vector<double>& delta_rel, int seeds, std::uint64_t seed,
                                      const SolverOptions& options = {});

/// Largest |Re<A(X), v> - <X, A^*(v)>| / (|X| |v|) over random pairs.
double check_adjointness(const MeasurementOp& op, int trials, std::uint64_t seed);
/// Largest violation of idempotence and complementarity of P_T over random matrices.
double check_projector_algebra(const TangentSpace& ts, int trials, std::uint64_t seed);

struct ReportRow {
  std::string check;
  std::string regime;
  int seeds = 0;
  double pass_rate = 0.0;
  std::string note;
};

std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace blindconv
