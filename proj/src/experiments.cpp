#include "blindconv/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "blindconv/errors.hpp"
#include "blindconv/haar.hpp"
#include "blindconv/parallel.hpp"
#include "blindconv/rng.hpp"
#include "blindconv/stats.hpp"

namespace blindconv {

SubspaceBasis make_basis(BasisKind kind, GridShape shape, std::size_t dim, Rng& rng) {
  const std::size_t length = shape.size();
  switch (kind) {
    case BasisKind::kIdentityFirst: return gen_identity_basis(length, dim, IdentityMode::kFirst, rng);
    case BasisKind::kIdentitySubset: return gen_identity_basis(length, dim, IdentityMode::kRandomSubset, rng);
    case BasisKind::kOrthonormalGeneral: return gen_orthonormal_basis(length, dim, rng);
    case BasisKind::kGaussianCode: return gen_gaussian_code(length, dim, rng);
    case BasisKind::kHaarSubset: return SubspaceBasis::haar_subset(shape, max_haar_levels(shape), rng.subset(length, dim));
  }
  throw DomainError("unknown basis kind");
}

PlantedInstance make_planted(GridShape shape, std::size_t k, std::size_t n, BasisKind b_kind, BasisKind c_kind,
                             Rng& rng) {
  if (k > shape.size() || n > shape.size()) throw DimensionError("planted instance: K and N must not exceed L");
  SubspaceBasis b = make_basis(b_kind, shape, k, rng);
  SubspaceBasis c = make_basis(c_kind, shape, n, rng);
  MeasurementOp::Options opt;
  opt.fourier_cap = 0;
  MeasurementOp op = MeasurementOp::build(std::move(b), std::move(c), shape, opt);
  Eigen::VectorXd h = rng.unit_vector(static_cast<Eigen::Index>(k));
  Eigen::VectorXd m = rng.unit_vector(static_cast<Eigen::Index>(n));
  Spectrum y = op.apply(h * m.transpose());
  return {std::move(op), std::move(h), std::move(m), std::move(y)};
}

namespace {

PhaseRecord phase_trial(const PhaseGridSpec& spec, std::size_t k, std::size_t n, int trial) {
  Rng rng = Rng(spec.seed).split(k, n, static_cast<std::uint64_t>(trial));
  PhaseRecord rec;
  rec.k = k;
  rec.n = n;
  rec.trial = trial;
  const PlantedInstance inst = make_planted(GridShape::line(spec.length), k, n, spec.b_kind, spec.c_kind, rng);
  const SolveResult res = solve_equality(inst.op, inst.y, spec.solver, rng());
  const Rank1 est = extract_rank1(res.factors);
  rec.err_x = align_and_error(est.h, est.m, inst.h, inst.m).err_x;
  rec.residual = res.final_residual / inst.y.values.norm();
  rec.converged = res.converged;
  rec.success = rec.err_x < spec.success_threshold;
  return rec;
}

void check_phase_spec(const PhaseGridSpec& spec) {
  if (spec.trials < 1) throw DomainError("phase diagram: trials must be positive");
  if (!(spec.success_threshold > 0.0 && spec.success_threshold < 1.0)) {
    throw DomainError("phase diagram: success threshold must lie in (0, 1)");
  }
  for (std::size_t k : spec.k_values) {
    if (k < 1 || k > spec.length) throw DimensionError("phase diagram: K values must lie in [1, L]");
  }
  for (std::size_t n : spec.n_values) {
    if (n < 1 || n > spec.length) throw DimensionError("phase diagram: N values must lie in [1, L]");
  }
  spec.solver.validate();
}

}  // namespace

PhaseResult run_phase_diagram(const PhaseGridSpec& spec, unsigned threads) {
  check_phase_spec(spec);
  const std::size_t nk = spec.k_values.size();
  const std::size_t nn = spec.n_values.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  PhaseResult out;
  out.records.resize(nk * nn * trials);
  parallel_for(out.records.size(), threads, [&](std::size_t i) {
    const std::size_t t = i % trials;
    const std::size_t cell = i / trials;
    out.records[i] = phase_trial(spec, spec.k_values[cell / nn], spec.n_values[cell % nn], static_cast<int>(t));
  });
  out.success = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nn));
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const std::size_t cell = i / trials;
    if (out.records[i].success) out.success(static_cast<Eigen::Index>(cell / nn), static_cast<Eigen::Index>(cell % nn)) += 1.0;
  }
  out.success /= static_cast<double>(trials);
  return out;
}

std::vector<PhaseRecord> run_phase_cell(const PhaseGridSpec& spec, std::size_t k, std::size_t n, unsigned threads) {
  check_phase_spec(spec);
  if (k < 1 || n < 1 || k > spec.length || n > spec.length) throw DimensionError("phase cell: K, N must lie in [1, L]");
  std::vector<PhaseRecord> out(static_cast<std::size_t>(spec.trials));
  parallel_for(out.size(), threads, [&](std::size_t t) { out[t] = phase_trial(spec, k, n, static_cast<int>(t)); });
  return out;
}

std::vector<SweepPoint> aggregate(const std::vector<SweepRecord>& records, std::size_t point_count) {
  std::vector<SweepPoint> points(point_count);
  std::vector<std::vector<double>> errs(point_count);
  std::vector<std::vector<double>> sigmas(point_count);
  for (const SweepRecord& r : records) {
    if (r.point >= point_count) throw DimensionError("aggregate: record point out of range");
    points[r.point].axis = r.axis;
    errs[r.point].push_back(r.err_x);
    sigmas[r.point].push_back(r.noise_sigma);
  }
  for (std::size_t p = 0; p < point_count; ++p) {
    auto& e = errs[p];
    if (e.empty()) continue;
    points[p].noise_sigma = mean(sigmas[p]);
    points[p].mean_err = mean(e);
    points[p].stderr_err = standard_error(e);
    std::sort(e.begin(), e.end());
    auto rank = [&](double q) {
      const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(e.size()))) ;
      return e[std::min(e.size() - 1, idx == 0 ? 0 : idx - 1)];
    };
    points[p].p50_err = rank(0.5);
    points[p].p90_err = rank(0.9);
  }
  return points;
}

double noise_sigma_for_snr(double w_norm, double x_norm, std::size_t length, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return w_norm * x_norm / std::sqrt(static_cast<double>(length) * std::pow(10.0, snr_db / 10.0));
}

double noise_ball_radius(std::size_t length, double sigma) {
  const double l = static_cast<double>(length);
  return std::sqrt(l + std::sqrt(4.0 * l)) * sigma;
}

namespace {

SweepRecord noisy_trial(const PlantedInstance& inst, double snr_db, Rng& noise_rng, const SolverOptions& opts,
                        std::uint64_t solve_seed, Rank1* estimate = nullptr) {
  const std::size_t length = inst.op.length();
  const double w_norm = inst.op.b_basis().synthesize(inst.h).norm();
  const double x_norm = inst.op.c_basis().synthesize(inst.m).norm();
  SweepRecord rec;
  rec.noise_sigma = noise_sigma_for_snr(w_norm, x_norm, length, snr_db);
  rec.delta = noise_ball_radius(length, rec.noise_sigma);
  Spectrum y = inst.y;
  if (rec.noise_sigma > 0.0) {
    const Eigen::VectorXd z = rec.noise_sigma * noise_rng.normal_vector(static_cast<Eigen::Index>(length));
    y.values += dft2(z, inst.op.shape()).values;
  }
  const SolveResult res = solve_noisy(inst.op, y, rec.delta, opts, solve_seed);
  const Rank1 est = extract_rank1(res.factors);
  const RecoveryError e = align_and_error(est.h, est.m, inst.h, inst.m);
  rec.err_x = e.err_x;
  rec.err_h = e.err_h;
  rec.err_m = e.err_m;
  rec.residual = res.final_residual;
  rec.converged = res.converged;
  if (estimate != nullptr) *estimate = est;
  return rec;
}

}  // namespace

SweepResult run_noise_sweep(const NoiseSweepSpec& spec, unsigned threads) {
  if (spec.trials < 1) throw DomainError("noise sweep: trials must be positive");
  if (spec.snr_db.empty()) throw DomainError("noise sweep: empty SNR list");
  spec.solver.validate();
  const std::size_t points = spec.snr_db.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  const Rng root(spec.seed);
  SweepResult out;
  out.axis_name = "snr_db";
  out.records.resize(points * trials);
  parallel_for(out.records.size(), threads, [&](std::size_t i) {
    const std::size_t p = i / trials;
    const std::size_t t = i % trials;
    // The planted instance depends on the trial only; noise on (trial, point).
    Rng inst_rng = root.split(t);
    const PlantedInstance inst = make_planted(GridShape::line(spec.length), spec.k, spec.n, spec.b_kind, spec.c_kind, inst_rng);
    const std::uint64_t solve_seed = inst_rng();
    Rng noise_rng = root.split(t, p + 1);
    SweepRecord rec = noisy_trial(inst, spec.snr_db[p], noise_rng, spec.solver, solve_seed);
    rec.point = p;
    rec.axis = spec.snr_db[p];
    rec.trial = static_cast<int>(t);
    out.records[i] = rec;
  });
  out.points = aggregate(out.records, points);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const SweepPoint& pt : out.points) {
    if (pt.noise_sigma > 0.0) {
      xs.push_back(pt.noise_sigma);
      ys.push_back(pt.mean_err);
    }
  }
  out.slope = loglog_slope(xs, ys);
  return out;
}

SweepResult run_oversampling_sweep(const OversampleSpec& spec, unsigned threads) {
  if (spec.trials < 1) throw DomainError("oversampling sweep: trials must be positive");
  if (spec.lengths.empty()) throw DomainError("oversampling sweep: empty length list");
  spec.solver.validate();
  for (std::size_t l : spec.lengths) {
    if (l < spec.k || l < spec.n) throw DimensionError("oversampling sweep: every L must be at least K and N");
  }
  const std::size_t points = spec.lengths.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  const Rng root(spec.seed);
  SweepResult out;
  out.axis_name = "L";
  out.records.resize(points * trials);
  parallel_for(out.records.size(), threads, [&](std::size_t i) {
    const std::size_t p = i / trials;
    const std::size_t t = i % trials;
    const std::size_t length = spec.lengths[p];
    Rng rng = root.split(length, t);
    const PlantedInstance inst = make_planted(GridShape::line(length), spec.k, spec.n, spec.b_kind, spec.c_kind, rng);
    const std::uint64_t solve_seed = rng();
    Rng noise_rng = rng.split(1);
    SweepRecord rec = noisy_trial(inst, spec.snr_db, noise_rng, spec.solver, solve_seed);
    rec.point = p;
    rec.axis = static_cast<double>(length);
    rec.trial = static_cast<int>(t);
    out.records[i] = rec;
  });
  out.points = aggregate(out.records, points);
  return out;
}

ChannelReport run_channel_sim(const ChannelSpec& spec, unsigned threads) {
  if (spec.trials < 1) throw DomainError("channel: trials must be positive");
  spec.solver.validate();
  std::vector<std::size_t> support = spec.delay_support;
  if (support.empty()) support.push_back(0);
  std::sort(support.begin(), support.end());
  if (std::adjacent_find(support.begin(), support.end()) != support.end()) {
    throw DomainError("channel: delay support has repeated taps");
  }
  if (support.back() >= spec.length) throw DimensionError("channel: delay tap outside [0, L)");
  if (spec.n < 1 || spec.n > spec.length) throw DimensionError("channel: N must lie in [1, L]");
  const Rng root(spec.seed);
  ChannelReport out;
  out.records.resize(static_cast<std::size_t>(spec.trials));
  parallel_for(out.records.size(), threads, [&](std::size_t t) {
    Rng rng = root.split(t);
    const GridShape shape = GridShape::line(spec.length);
    SubspaceBasis b = SubspaceBasis::identity_columns(spec.length, support);
    SubspaceBasis c = gen_gaussian_code(spec.length, spec.n, rng);
    MeasurementOp::Options opt;
    opt.fourier_cap = 0;
    PlantedInstance inst{MeasurementOp::build(std::move(b), std::move(c), shape, opt),
                         rng.normal_vector(static_cast<Eigen::Index>(support.size())),
                         rng.normal_vector(static_cast<Eigen::Index>(spec.n)), Spectrum()};
    inst.y = inst.op.apply(inst.h * inst.m.transpose());
    const std::uint64_t solve_seed = rng();
    Rng noise_rng = rng.split(1);
    Rank1 est;
    const SweepRecord r = noisy_trial(inst, spec.snr_db, noise_rng, spec.solver, solve_seed, &est);

    ChannelRecord rec;
    rec.trial = static_cast<int>(t);
    rec.err_m = r.err_m;
    rec.err_h = r.err_h;
    rec.err_x = r.err_x;
    rec.converged = r.converged;
    const Eigen::VectorXd w_est = inst.op.b_basis().synthesize(est.h);
    double on_support = 0.0;
    for (std::size_t tap : support) on_support += w_est(static_cast<Eigen::Index>(tap)) * w_est(static_cast<Eigen::Index>(tap));
    const double total = w_est.squaredNorm();
    rec.support_energy = total > 0.0 ? on_support / total : 0.0;
    out.records[t] = rec;
  });
  int ok = 0;
  for (const auto& r : out.records) ok += r.err_m < 0.02 ? 1 : 0;
  out.message_success_rate = static_cast<double>(ok) / static_cast<double>(out.records.size());
  return out;
}

std::string to_string(WaveletSupport s) { return s == WaveletSupport::kOracle ? "oracle" : "top-blurred"; }

WaveletSupport wavelet_support_from_string(const std::string& name) {
  if (name == "oracle") return WaveletSupport::kOracle;
  if (name == "top-blurred" || name == "top-N-of-blurred") return WaveletSupport::kTopBlurred;
  throw DomainError("unknown wavelet support '" + name + "'");
}

std::vector<std::size_t> top_indices(const Eigen::VectorXd& v, std::size_t count) {
  if (count > static_cast<std::size_t>(v.size())) throw DimensionError("top_indices: count exceeds length");
  std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(v[static_cast<Eigen::Index>(a)]) > std::abs(v[static_cast<Eigen::Index>(b)]);
  });
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t support_size_for_energy(const Eigen::VectorXd& coeffs, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("energy fraction must lie in (0, 1]");
  std::vector<double> e(static_cast<std::size_t>(coeffs.size()));
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) e[static_cast<std::size_t>(i)] = coeffs[i] * coeffs[i];
  std::sort(e.begin(), e.end(), std::greater<>());
  const double total = std::accumulate(e.begin(), e.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    acc += e[i];
    if (acc >= fraction * total) return i + 1;
  }
  return e.size();
}

std::vector<std::size_t> box_kernel_support(GridShape shape, std::size_t side) {
  if (side < 1 || side > shape.rows * shape.cols) throw DimensionError("box kernel: bad side length");
  const auto lo = -static_cast<long>((side - 1) / 2);
  std::set<std::size_t> out;
  const auto rows = static_cast<long>(shape.rows);
  const auto cols = static_cast<long>(shape.cols);
  const long row_span = shape.is_1d() ? 1 : static_cast<long>(side);
  const long row_lo = shape.is_1d() ? 0 : lo;
  for (long dr = row_lo; dr < row_lo + row_span; ++dr) {
    for (long dc = lo; dc < lo + static_cast<long>(side); ++dc) {
      const long r = ((dr % rows) + rows) % rows;
      const long c = ((dc % cols) + cols) % cols;
      out.insert(static_cast<std::size_t>(r * cols + c));
    }
  }
  return {out.begin(), out.end()};
}

double scaled_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) throw DimensionError("scaled_error: length mismatch");
  const double tn = truth.norm();
  if (tn == 0.0) throw DomainError("scaled_error: zero reference");
  const double en2 = estimate.squaredNorm();
  const double a = en2 > 0.0 ? truth.dot(estimate) / en2 : 0.0;
  return (truth - a * estimate).norm() / tn;
}

DeblurResult run_deblur(const Image2D& image, const DeblurSpec& spec) {
  const GridShape shape = image.shape();
  const std::size_t length = shape.size();
  if (spec.kernel_support.empty()) throw DimensionError("deblur: empty kernel support");
  for (std::size_t i : spec.kernel_support) {
    if (i >= length) throw DimensionError("deblur: kernel support outside the image");
  }
  if (spec.n < 1 || spec.n > length) throw DimensionError("deblur: N must lie in [1, L]");
  if (!spec.kernel_values.empty() && spec.kernel_values.size() != spec.kernel_support.size()) {
    throw DimensionError("deblur: kernel values do not match the support");
  }
  const int levels = spec.levels < 0 ? max_haar_levels(shape) : spec.levels;
  const std::size_t k = spec.kernel_support.size();

  Eigen::VectorXd h(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    h[static_cast<Eigen::Index>(i)] = spec.kernel_values.empty() ? 1.0 / static_cast<double>(k) : spec.kernel_values[i];
  }
  SubspaceBasis b = SubspaceBasis::identity_columns(length, spec.kernel_support);
  const Eigen::VectorXd w = b.synthesize(h);

  DeblurResult out;
  out.blurred = Image2D(shape.rows, shape.cols, circular_convolve2(w, image.pixels, shape));
  const Eigen::VectorXd theta_img = haar_forward(image.pixels, shape, levels);
  const Eigen::VectorXd theta_blur = haar_forward(out.blurred.pixels, shape, levels);
  const std::vector<std::size_t> omega =
      top_indices(spec.support == WaveletSupport::kOracle ? theta_img : theta_blur, spec.n);
  SubspaceBasis c = SubspaceBasis::haar_subset(shape, levels, omega);

  MeasurementOp::Options opt;
  opt.fourier_cap = 0;
  const MeasurementOp op = MeasurementOp::build(std::move(b), std::move(c), shape, opt);
  const Spectrum y = dft2(out.blurred.pixels, shape);
  if (spec.delta_rel >= 0.0) {
    out.delta = spec.delta_rel * y.values.norm();
  } else {
    double tail = theta_blur.squaredNorm();
    for (std::size_t i : omega) tail -= theta_blur[static_cast<Eigen::Index>(i)] * theta_blur[static_cast<Eigen::Index>(i)];
    out.delta = std::sqrt(std::max(0.0, tail));
  }
  const SolveResult res = solve_noisy(op, y, out.delta, spec.solver, spec.seed);
  out.converged = res.converged;
  const Rank1 est = extract_rank1(res.factors);
  Eigen::VectorXd w_est = op.b_basis().synthesize(est.h);
  Eigen::VectorXd x_est = op.c_basis().synthesize(est.m);
  // Fix the scale so the kernel sums to one.
  const double mass = w_est.sum();
  if (mass != 0.0) {
    w_est /= mass;
    x_est *= mass;
  }
  out.deblurred = Image2D(shape.rows, shape.cols, x_est);
  out.kernel = Image2D(shape.rows, shape.cols, w_est);
  out.err_image = scaled_error(x_est, image.pixels);
  out.err_kernel = scaled_error(w_est, w);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string phase_csv(const PhaseGridSpec& spec, const PhaseResult& result) {
  (void)spec;
  std::ostringstream os;
  os << "K,N,trial,err_x,residual,converged,success\n";
  for (const PhaseRecord& r : result.records) {
    os << r.k << ',' << r.n << ',' << r.trial << ',' << format_double(r.err_x) << ',' << format_double(r.residual)
       << ',' << (r.converged ? 1 : 0) << ',' << (r.success ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string phase_summary_csv(const PhaseGridSpec& spec, const PhaseResult& result) {
  std::ostringstream os;
  os << "K,N,trials,successes,success_rate\n";
  for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
    for (std::size_t j = 0; j < spec.n_values.size(); ++j) {
      const double rate = result.success(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      os << spec.k_values[i] << ',' << spec.n_values[j] << ',' << spec.trials << ','
         << std::lround(rate * spec.trials) << ',' << format_double(rate) << '\n';
    }
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "point," << result.axis_name << ",trial,noise_sigma,delta,err_x,err_h,err_m,residual,converged\n";
  for (const SweepRecord& r : result.records) {
    os << r.point << ',' << format_double(r.axis) << ',' << r.trial << ',' << format_double(r.noise_sigma) << ','
       << format_double(r.delta) << ',' << format_double(r.err_x) << ',' << format_double(r.err_h) << ','
       << format_double(r.err_m) << ',' << format_double(r.residual) << ',' << (r.converged ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::ostringstream os;
  os << result.axis_name << ",noise_sigma,mean_err,stderr_err,p50_err,p90_err\n";
  for (const SweepPoint& p : result.points) {
    os << format_double(p.axis) << ',' << format_double(p.noise_sigma) << ',' << format_double(p.mean_err) << ','
       << format_double(p.stderr_err) << ',' << format_double(p.p50_err) << ',' << format_double(p.p90_err) << '\n';
  }
  return os.str();
}

std::string channel_csv(const ChannelReport& report) {
  std::ostringstream os;
  os << "trial,err_m,err_h,err_x,support_energy,converged\n";
  for (const ChannelRecord& r : report.records) {
    os << r.trial << ',' << format_double(r.err_m) << ',' << format_double(r.err_h) << ',' << format_double(r.err_x)
       << ',' << format_double(r.support_energy) << ',' << (r.converged ? 1 : 0) << '\n';
  }
  return os.str();
}

Image2D phase_heatmap(const PhaseResult& result) {
  const auto rows = static_cast<std::size_t>(result.success.rows());
  const auto cols = static_cast<std::size_t>(result.success.cols());
  Image2D img(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) img.at(r, c) = result.success(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return img;
}

}  // namespace blindconv
