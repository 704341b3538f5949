#include "blindconv/theory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "blindconv/errors.hpp"
#include "blindconv/parallel.hpp"
#include "blindconv/rng.hpp"
#include "blindconv/stats.hpp"

namespace blindconv {

TangentSpace::TangentSpace(Eigen::VectorXd h_unit, Eigen::VectorXd m_unit) : h(std::move(h_unit)), m(std::move(m_unit)) {
  if (std::abs(h.norm() - 1.0) > 1e-10 || std::abs(m.norm() - 1.0) > 1e-10) {
    throw DomainError("tangent space: h and m must have unit norm");
  }
}

Eigen::MatrixXd project_T(const TangentSpace& ts, const Eigen::MatrixXd& x) {
  if (x.rows() != ts.h.size() || x.cols() != ts.m.size()) throw DimensionError("project_T: X must be K x N");
  const Eigen::VectorXd xm = x * ts.m;              // X m
  const Eigen::RowVectorXd hx = ts.h.transpose() * x;  // h^T X
  const double hxm = ts.h.dot(xm);
  return ts.h * hx + xm * ts.m.transpose() - hxm * ts.h * ts.m.transpose();
}

Eigen::MatrixXd project_Tperp(const TangentSpace& ts, const Eigen::MatrixXd& x) {
  if (x.rows() != ts.h.size() || x.cols() != ts.m.size()) throw DimensionError("project_Tperp: X must be K x N");
  Eigen::MatrixXd y = x - ts.h * (ts.h.transpose() * x);
  return y - (y * ts.m) * ts.m.transpose();
}

namespace {

Eigen::MatrixXd unit_matrix(Eigen::Index k, Eigen::Index n, Eigen::Index col) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, n);
  e(col % k, col / k) = 1.0;
  return e;
}

double symmetric_spectral_norm(const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  return svd.singularValues()(0);
}

Eigen::MatrixXd gram_map_apply(const MeasurementOp& op, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(x.cols(), x.cols());
  return op.adjoint_half(op.apply_factored_half(x, eye));
}

// Re( sum_{k in rows} v_k conj(b_hat_k)^T conj(c_hat_k) ) with v_k = b_hat_k X c_hat_k^T,
// i.e. sum b_k b_k^* X c_k c_k^* restricted to the given frequencies.
Eigen::MatrixXd subset_gram(const FourierBasis& fb, const std::vector<std::size_t>& rows, const Eigen::MatrixXd& x) {
  Eigen::MatrixXcd br(static_cast<Eigen::Index>(rows.size()), fb.b_hat.cols());
  Eigen::MatrixXcd cr(static_cast<Eigen::Index>(rows.size()), fb.c_hat.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    br.row(static_cast<Eigen::Index>(i)) = fb.b_hat.row(static_cast<Eigen::Index>(rows[i]));
    cr.row(static_cast<Eigen::Index>(i)) = fb.c_hat.row(static_cast<Eigen::Index>(rows[i]));
  }
  const Eigen::VectorXcd coef = (br * x.cast<cdouble>()).cwiseProduct(cr).rowwise().sum();
  return (br.transpose() * (coef.conjugate().asDiagonal() * cr)).real();
}

}  // namespace

double t_conditioning_norm(const TangentSpace& ts, const MatrixMap& gram, std::size_t cap) {
  const auto k = ts.h.size();
  const auto n = ts.m.size();
  const auto dim = k * n;
  auto apply = [&](const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd px = project_T(ts, x);
    return Eigen::MatrixXd(project_T(ts, gram(px)) - px);
  };
  if (static_cast<std::size_t>(dim) <= cap) {
    Eigen::MatrixXd s(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) s.col(j) = apply(unit_matrix(k, n, j)).reshaped();
    return symmetric_spectral_norm(s);
  }
  Rng rng(0x7c0d);
  Eigen::MatrixXd x = rng.normal_vector(dim).reshaped(k, n);
  double estimate = 0.0;
  for (int it = 0; it < 300; ++it) {
    x /= x.norm();
    Eigen::MatrixXd y = apply(x);
    estimate = std::max(estimate, y.norm());
    if (y.norm() == 0.0) break;
    x = std::move(y);
  }
  return estimate;
}

double check_T_conditioning(const MeasurementOp& op, const TangentSpace& ts, std::size_t cap) {
  if (static_cast<std::size_t>(ts.h.size()) != op.k() || static_cast<std::size_t>(ts.m.size()) != op.n()) {
    throw DimensionError("T conditioning: tangent space does not match the operator");
  }
  const std::size_t dim = op.k() * op.n();
  if (dim <= cap && op.has_fourier()) {
    const Eigen::MatrixXcd a = op.materialize_dense(cap);
    const Eigen::MatrixXd g = (a.adjoint() * a).real();
    const auto k = static_cast<Eigen::Index>(op.k());
    const auto n = static_cast<Eigen::Index>(op.n());
    Eigen::MatrixXd p(k * n, k * n);
    for (Eigen::Index j = 0; j < k * n; ++j) p.col(j) = project_T(ts, unit_matrix(k, n, j)).reshaped();
    return symmetric_spectral_norm(p * g * p - p);
  }
  if (dim <= cap) return t_conditioning_norm(ts, [&](const Eigen::MatrixXd& x) { return gram_map_apply(op, x); }, cap);
  return t_conditioning_norm(ts, [&](const Eigen::MatrixXd& x) { return gram_map_apply(op, x); }, 0);
}

std::vector<double> partition_margins(const MeasurementOp& op, const std::vector<std::vector<std::size_t>>& subsets) {
  const FourierBasis& fb = op.fourier();
  const auto k = fb.b_hat.cols();
  const double length = static_cast<double>(op.length());
  std::vector<double> out;
  out.reserve(subsets.size());
  for (const auto& subset : subsets) {
    Eigen::MatrixXcd rows(static_cast<Eigen::Index>(subset.size()), k);
    for (std::size_t i = 0; i < subset.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = fb.b_hat.row(static_cast<Eigen::Index>(subset[i]));
    }
    // sum_k b_k b_k^* with b_k^* the k-th row of b_hat
    Eigen::MatrixXcd s = rows.adjoint() * rows;
    s.diagonal().array() -= static_cast<double>(subset.size()) / length;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s, Eigen::EigenvaluesOnly);
    out.push_back(eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> draw_pairs(std::size_t length, std::size_t p, Rng& rng) {
  // Units are conjugate-closed frequency sets: {0}, {L/2} (even L) and {l, L-l}.
  std::vector<std::vector<std::size_t>> units;
  units.push_back({0});
  for (std::size_t l = 1; 2 * l < length; ++l) units.push_back({l, length - l});
  if (length % 2 == 0 && length > 1) units.push_back({length / 2});
  const auto order = rng.permutation(units.size());
  const std::size_t q = length / p;
  std::vector<std::vector<std::size_t>> subsets(p);
  std::size_t cur = 0;
  for (std::size_t u : order) {
    while (cur + 1 < p && subsets[cur].size() >= q) ++cur;
    subsets[cur].insert(subsets[cur].end(), units[u].begin(), units[u].end());
  }
  for (auto& s : subsets) std::sort(s.begin(), s.end());
  return subsets;
}

std::vector<std::vector<std::size_t>> draw_strided(std::size_t length, std::size_t p, Rng& rng) {
  const auto order = rng.permutation(p);
  std::vector<std::vector<std::size_t>> subsets(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = order[j]; l < length; l += p) subsets[j].push_back(l);
  }
  return subsets;
}

}  // namespace

GolfingPartition make_golfing_partition(const MeasurementOp& op, std::size_t p, std::uint64_t seed, int max_retries,
                                        PartitionScheme scheme) {
  const std::size_t length = op.length();
  if (p < 1 || p > length) throw DomainError("golfing partition: P must lie in [1, L]");
  if (max_retries < 1) throw DomainError("golfing partition: max_retries must be positive");
  Rng rng(seed);
  GolfingPartition out;
  out.q = length / p;
  for (int draw = 1; draw <= max_retries; ++draw) {
    Rng stream = rng.split(static_cast<std::uint64_t>(draw));
    auto subsets = scheme == PartitionScheme::kRandom ? draw_pairs(length, p, stream) : draw_strided(length, p, stream);
    auto margins = partition_margins(op, subsets);
    bool ok = true;
    for (std::size_t j = 0; j < subsets.size(); ++j) {
      ok = ok && margins[j] <= static_cast<double>(subsets[j].size()) / (4.0 * static_cast<double>(length)) + 1e-12;
    }
    if (ok) {
      out.subsets = std::move(subsets);
      out.margins = std::move(margins);
      out.conditioning_margin = *std::max_element(out.margins.begin(), out.margins.end());
      out.draws = draw;
      return out;
    }
  }
  throw RetriesExhausted("golfing partition: no draw met the margin condition; subsets are too small for this B");
}

CertificateTrace build_certificate(const MeasurementOp& op, const TangentSpace& ts, const GolfingPartition& partition,
                                   double alpha) {
  if (static_cast<std::size_t>(ts.h.size()) != op.k() || static_cast<std::size_t>(ts.m.size()) != op.n()) {
    throw DimensionError("certificate: tangent space does not match the operator");
  }
  if (partition.subsets.empty() || partition.q == 0) throw DomainError("certificate: empty partition");
  const FourierBasis& fb = op.fourier();
  const double length = static_cast<double>(op.length());
  const Eigen::MatrixXd x0 = ts.outer();
  const std::size_t p_count = partition.subsets.size();

  auto mu_of = [&](const Eigen::MatrixXd& w, const std::vector<std::size_t>& subset) {
    double best = 0.0;
    for (std::size_t l : subset) {
      // W^T b_l with b_l the conjugate of row l of b_hat
      const Eigen::VectorXcd v = w.transpose().cast<cdouble>() * fb.b_hat.row(static_cast<Eigen::Index>(l)).adjoint();
      best = std::max(best, v.squaredNorm());
    }
    return std::sqrt(length * best);
  };

  CertificateTrace trace;
  trace.y = Eigen::MatrixXd::Zero(x0.rows(), x0.cols());
  Eigen::MatrixXd w = -x0;
  auto record = [&](std::size_t p) {
    CertificateStep step;
    step.w_norm = w.norm();
    step.w_tperp = project_Tperp(ts, w).norm();
    step.mu = p < p_count ? mu_of(w, partition.subsets[p]) : std::numeric_limits<double>::quiet_NaN();
    step.y_tperp_spectral = spectral_norm(project_Tperp(ts, trace.y));
    trace.steps.push_back(step);
  };
  record(0);
  const double scale = length / static_cast<double>(partition.q);
  for (std::size_t p = 0; p < p_count; ++p) {
    trace.y += scale * subset_gram(fb, partition.subsets[p], -w);
    w = project_T(ts, trace.y) - x0;
    record(p + 1);
  }

  trace.gamma = std::sqrt((alpha + 1.0) * static_cast<double>(op.n()) * std::log(length));
  trace.final_residual = w.norm();
  trace.final_tperp = trace.steps.back().y_tperp_spectral;
  trace.residual_condition = trace.final_residual <= 1.0 / (4.0 * std::sqrt(2.0) * trace.gamma);
  trace.tperp_condition = trace.final_tperp < 0.75;
  trace.w_decay = true;
  trace.mu_decay = true;
  for (std::size_t p = 1; p < trace.steps.size(); ++p) {
    trace.w_decay = trace.w_decay && trace.steps[p].w_norm <= std::ldexp(1.0, -static_cast<int>(p));
    if (p < p_count) trace.mu_decay = trace.mu_decay && trace.steps[p].mu <= 0.5 * trace.steps[p - 1].mu;
  }
  return trace;
}

GramBoundReport check_gram_bounds(const MeasurementOp& op, std::size_t length_cap) {
  const GramSpectrum g = gram_spectrum(op, length_cap);
  const FourierBasis& fb = op.fourier();
  const double length = static_cast<double>(op.length());
  const double k = static_cast<double>(op.k());
  const double n = static_cast<double>(op.n());
  const Eigen::VectorXd energy = fb.b_hat.rowwise().squaredNorm();
  GramBoundReport r;
  r.lambda_min = g.lambda_min;
  r.lambda_max = g.lambda_max;
  r.mu_max_sq = length / k * energy.maxCoeff();
  r.mu_min_sq = length / k * energy.minCoeff();
  r.lower = 0.48 * r.mu_min_sq * n * k / length;
  r.upper = 4.5 * r.mu_max_sq * n * k / length;
  const double log_l = std::log(length);
  r.hypothesis = r.mu_min_sq > 0.0 && n * k >= length * log_l * log_l / r.mu_min_sq;
  // The smallest eigenvalue counts only when A A^* has full rank L.
  const double lam_min = g.rank == static_cast<Eigen::Index>(op.length()) ? g.lambda_min : 0.0;
  r.lambda_min = lam_min;
  r.within = lam_min >= r.lower && r.lambda_max <= r.upper;
  return r;
}

OperatorNormReport check_operator_norm(const MeasurementOp& op, double alpha, int iters, std::uint64_t seed) {
  const double length = static_cast<double>(op.length());
  const double n = static_cast<double>(op.n());
  OperatorNormReport r;
  r.estimate = operator_norm(op, iters, seed);
  r.bound = std::sqrt(n * (std::log(n * length / 2.0) + alpha * std::log(length)));
  r.gamma = std::sqrt((alpha + 1.0) * n * std::log(length));
  r.within = r.estimate <= r.bound;
  return r;
}

namespace {

struct MomentAccumulator {
  Eigen::MatrixXcd sum;
  Eigen::MatrixXd sq_re;
  Eigen::MatrixXd sq_im;
  explicit MomentAccumulator(Eigen::Index n)
      : sum(Eigen::MatrixXcd::Zero(n, n)), sq_re(Eigen::MatrixXd::Zero(n, n)), sq_im(Eigen::MatrixXd::Zero(n, n)) {}
  void add(const Eigen::MatrixXcd& s) {
    sum += s;
    sq_re += s.real().cwiseAbs2();
    sq_im += s.imag().cwiseAbs2();
  }
  void merge(const MomentAccumulator& o) {
    sum += o.sum;
    sq_re += o.sq_re;
    sq_im += o.sq_im;
  }
};

MomentComparison compare(const std::string& name, const MomentAccumulator& acc, double count,
                         const Eigen::MatrixXcd& target) {
  MomentComparison c;
  c.name = name;
  const Eigen::MatrixXcd mean = acc.sum / count;
  for (Eigen::Index j = 0; j < mean.cols(); ++j) {
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double var_re = std::max(0.0, acc.sq_re(i, j) / count - mean(i, j).real() * mean(i, j).real());
      const double var_im = std::max(0.0, acc.sq_im(i, j) / count - mean(i, j).imag() * mean(i, j).imag());
      const double se_re = std::sqrt(var_re / (count - 1.0));
      const double se_im = std::sqrt(var_im / (count - 1.0));
      const double d_re = std::abs(mean(i, j).real() - target(i, j).real());
      const double d_im = std::abs(mean(i, j).imag() - target(i, j).imag());
      c.max_abs_deviation = std::max({c.max_abs_deviation, d_re, d_im});
      auto z = [](double d, double se) { return se > 0.0 ? d / se : (d > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0); };
      c.max_z = std::max({c.max_z, z(d_re, se_re), z(d_im, se_im)});
    }
  }
  c.pass = c.max_z <= 5.0;
  return c;
}

}  // namespace

ExpectationReport check_expectation_identities(std::size_t n, std::size_t samples, std::uint64_t seed,
                                               const Eigen::VectorXd& v, unsigned threads) {
  if (n < 1) throw DimensionError("expectation identities: N must be positive");
  if (static_cast<std::size_t>(v.size()) != n) throw DimensionError("expectation identities: v must have length N");
  if (samples < 2) throw DomainError("expectation identities: need at least two samples");
  const auto nn = static_cast<Eigen::Index>(n);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> fourth(chunks, MomentAccumulator(nn));
  std::vector<MomentAccumulator> weighted(chunks, MomentAccumulator(nn));
  const Eigen::VectorXcd vc = v.cast<cdouble>();
  const Rng root(seed);

  parallel_for(chunks, threads, [&](std::size_t chunk) {
    Rng rng = root.split(chunk);
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(samples, begin + kChunk);
    const double s = std::sqrt(0.5);
    Eigen::VectorXcd c(nn);
    for (std::size_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < nn; ++j) c(j) = cdouble(s * rng.normal(), s * rng.normal());
      // (cc^* - I)^2 = (|c|^2 - 2) cc^* + I
      Eigen::MatrixXcd f = (c.squaredNorm() - 2.0) * (c * c.adjoint());
      f.diagonal().array() += 1.0;
      fourth[chunk].add(f);
      // (cc^* - I) v v^* (cc^* - I) = u u^* with u = c (c^* v) - v
      const Eigen::VectorXcd u = c * c.dot(vc) - vc;
      weighted[chunk].add(u * u.adjoint());
    }
  });

  MomentAccumulator f_total(nn);
  MomentAccumulator w_total(nn);
  for (std::size_t i = 0; i < chunks; ++i) {
    f_total.merge(fourth[i]);
    w_total.merge(weighted[i]);
  }
  const double count = static_cast<double>(samples);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(nn, nn);
  ExpectationReport r;
  r.n = n;
  r.samples = samples;
  r.fourth_moment = compare("fourth-moment N*I", f_total, count, static_cast<double>(n) * eye);
  r.weighted_norm_sq = compare("weighted |v|^2*I", w_total, count, v.squaredNorm() * eye);
  r.weighted_identity = compare("weighted I", w_total, count, eye);
  return r;
}

StabilityReport check_stability_bound(const MeasurementOp& op, const TangentSpace& ts,
                                      const std::vector<double>& delta_rel, int seeds, std::uint64_t seed,
                                      const SolverOptions& options) {
  if (seeds < 1) throw DomainError("stability: seeds must be positive");
  const Eigen::MatrixXd x0 = ts.outer();
  const Spectrum clean = op.apply(x0);
  const double y_norm = clean.values.norm();
  StabilityReport report;
  report.condition = std::numeric_limits<double>::quiet_NaN();
  if (op.has_fourier() && op.length() <= 2048) {
    const GramSpectrum g = gram_spectrum(op);
    if (g.rank == static_cast<Eigen::Index>(op.length())) report.condition = g.lambda_max / g.lambda_min;
  }
  const double root_min = std::sqrt(static_cast<double>(std::min(op.k(), op.n())));
  const Rng rng(seed);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t level = 0; level < delta_rel.size(); ++level) {
    const double delta = delta_rel[level] * y_norm;
    StabilityPoint pt;
    pt.delta_rel = delta_rel[level];
    std::vector<double> errs;
    std::vector<double> ratios;
    for (int s = 0; s < seeds; ++s) {
      Rng stream = rng.split(level, static_cast<std::uint64_t>(s));
      Spectrum y = clean;
      if (delta > 0.0) {
        const Spectrum z = dft(RealSignal(stream.normal_vector(static_cast<Eigen::Index>(op.length()))));
        y.values += z.values * (delta / z.values.norm());
      }
      const SolveResult res = solve_noisy(op, y, delta, options, stream());
      const double err = (res.factors.product() - x0).norm() / x0.norm();
      errs.push_back(err);
      if (delta > 0.0) ratios.push_back(err * x0.norm() / (report.condition * root_min * delta));
      pt.converged += res.converged ? 1 : 0;
    }
    pt.mean_error = mean(errs);
    pt.mean_ratio = ratios.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(ratios);
    if (delta > 0.0) {
      xs.push_back(delta);
      ys.push_back(pt.mean_error);
    }
    report.points.push_back(pt);
  }
  report.slope = loglog_slope(xs, ys);
  return report;
}

double check_adjointness(const MeasurementOp& op, int trials, std::uint64_t seed) {
  Rng rng(seed);
  const auto k = static_cast<Eigen::Index>(op.k());
  const auto n = static_cast<Eigen::Index>(op.n());
  const auto l = static_cast<Eigen::Index>(op.length());
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd x = rng.normal_vector(k * n).reshaped(k, n);
    Eigen::VectorXcd vv(l);
    for (Eigen::Index i = 0; i < l; ++i) vv(i) = cdouble(rng.normal(), rng.normal());
    const Spectrum v(vv, SpectrumOrigin::kGeneral, op.shape());
    const double lhs = op.apply(x).values.dot(v.values).real();
    const double rhs = (x.array() * op.adjoint(v).array()).sum();
    worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * v.values.norm()));
  }
  return worst;
}

double check_projector_algebra(const TangentSpace& ts, int trials, std::uint64_t seed) {
  Rng rng(seed);
  const auto k = ts.h.size();
  const auto n = ts.m.size();
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd x = rng.normal_vector(k * n).reshaped(k, n);
    const Eigen::MatrixXd pt = project_T(ts, x);
    const Eigen::MatrixXd pp = project_Tperp(ts, x);
    const double scale = std::max(1.0, x.norm());
    worst = std::max(worst, (project_T(ts, pt) - pt).norm() / scale);
    worst = std::max(worst, project_Tperp(ts, pt).norm() / scale);
    worst = std::max(worst, (pt + pp - x).norm() / scale);
    worst = std::max(worst, (project_T(ts, ts.outer()) - ts.outer()).norm());
  }
  return worst;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::size_t wc = 5;
  std::size_t wr = 6;
  for (const auto& r : rows) {
    wc = std::max(wc, r.check.size());
    wr = std::max(wr, r.regime.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wc)) << "check" << "  " << std::setw(static_cast<int>(wr)) << "regime"
     << "  " << std::right << std::setw(5) << "seeds" << "  " << std::setw(9) << "pass_rate" << "  note\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(wc)) << r.check << "  " << std::setw(static_cast<int>(wr)) << r.regime
       << "  " << std::right << std::setw(5) << r.seeds << "  " << std::setw(9) << std::fixed << std::setprecision(3)
       << r.pass_rate << "  " << r.note << '\n';
  }
  return os.str();
}

}  // namespace blindconv
