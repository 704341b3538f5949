#include "blindconv/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "blindconv/errors.hpp"
#include "blindconv/experiments.hpp"
#include "blindconv/haar.hpp"
#include "blindconv/image.hpp"
#include "blindconv/parallel.hpp"
#include "blindconv/rng.hpp"
#include "blindconv/stats.hpp"
#include "blindconv/theory.hpp"

namespace fs = std::filesystem;

namespace blindconv {

namespace {

class OutputDir {
 public:
  OutputDir(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    dir_ = cfg.get_string("run.out");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_ + ": " + ec.message());
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(path(name), std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path(name));
    artifacts_.push_back(name);
  }

  void write_image(const std::string& name, const Image2D& img) {
    write_pgm(path(name), img);
    artifacts_.push_back(name);
  }

  bool wants(const std::string& format) const {
    std::stringstream ss(cfg_.get_string("run.formats"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == format) return true;
    }
    return false;
  }

  /// Writes config.txt and manifest.txt; call last.
  void finish() {
    write("config.txt", cfg_.serialize());
    std::ostringstream m;
    m << "tool = blindconv\n"
      << "version = " << kToolVersion << '\n'
      << "command = " << command_ << '\n'
      << "seed = " << cfg_.get_u64("run.seed") << '\n'
      << "config_hash = " << cfg_.hash() << '\n'
      << "config = config.txt\n";
    for (const auto& a : artifacts_) m << "artifact = " << a << '\n';
    write("manifest.txt", m.str());
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::string dir_;
  std::vector<std::string> artifacts_;
};

unsigned threads_of(const RunConfig& cfg) {
  const long long t = cfg.get_int("run.threads");
  if (t < 0) throw ConfigError("run.threads must be nonnegative");
  return t == 0 ? default_threads() : static_cast<unsigned>(t);
}

std::size_t positive(const RunConfig& cfg, const std::string& key) {
  const long long v = cfg.get_int(key);
  if (v < 1) throw ConfigError(key + " must be positive");
  return static_cast<std::size_t>(v);
}

BasisKind kind_of(const RunConfig& cfg, const std::string& key) {
  try {
    return basis_kind_from_string(cfg.get_string(key));
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string vector_csv(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "index,value\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << i << ',' << format_double(v[i]) << '\n';
  return os.str();
}

Eigen::VectorXd read_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observation file " + path);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
      throw std::runtime_error(path + ": not a number: '" + tok + "'");
    }
    vals.push_back(v);
  }
  if (vals.empty()) throw std::runtime_error(path + ": empty observation");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

int cmd_deconvolve(const RunConfig& cfg, std::ostream& out) {
  const SolverOptions opts = cfg.solver_options();
  const std::uint64_t seed = cfg.get_u64("run.seed");
  const std::string obs_path = cfg.get_string("problem.observation");
  const std::size_t k = positive(cfg, "problem.K");
  const std::size_t n = positive(cfg, "problem.N");
  const double delta = cfg.get_double("problem.delta");
  if (delta < 0.0) throw ConfigError("problem.delta must be nonnegative");
  Rng rng(seed);
  const bool planted = obs_path.empty();

  std::optional<PlantedInstance> inst;
  if (planted) {
    inst = make_planted(GridShape::line(positive(cfg, "problem.L")), k, n, kind_of(cfg, "problem.b_kind"),
                        kind_of(cfg, "problem.c_kind"), rng);
    if (delta > 0.0) {
      const Eigen::VectorXd w = delta * rng.unit_vector(static_cast<Eigen::Index>(inst->op.length()));
      inst->y.values += dft(RealSignal(w)).values;
    }
  } else {
    const Eigen::VectorXd y = read_signal(obs_path);
    const GridShape shape = GridShape::line(static_cast<std::size_t>(y.size()));
    if (k > shape.size() || n > shape.size()) throw ConfigError("K and N must not exceed the observation length");
    SubspaceBasis b = make_basis(kind_of(cfg, "problem.b_kind"), shape, k, rng);
    SubspaceBasis c = make_basis(kind_of(cfg, "problem.c_kind"), shape, n, rng);
    MeasurementOp::Options o;
    o.fourier_cap = 0;
    inst = PlantedInstance{MeasurementOp::build(std::move(b), std::move(c), shape, o), Eigen::VectorXd(),
                           Eigen::VectorXd(), dft(RealSignal(y))};
  }

  const SolveResult res = solve_noisy(inst->op, inst->y, delta, opts, rng());
  const Rank1 est = extract_rank1(res.factors);

  OutputDir dir(cfg, "deconvolve");
  dir.write("h_est.csv", vector_csv(est.h));
  dir.write("m_est.csv", vector_csv(est.m));
  std::ostringstream diag;
  diag << "residual = " << format_double(res.final_residual) << '\n'
       << "relative_residual = " << format_double(res.final_residual / inst->y.values.norm()) << '\n'
       << "outer_iters = " << res.outer_iters << '\n'
       << "converged = " << (res.converged ? "true" : "false") << '\n'
       << "rank_deficient = " << (res.rank_deficient ? "true" : "false") << '\n'
       << "deficiency_ratio = " << format_double(res.deficiency_ratio) << '\n';
  if (planted) {
    const RecoveryError e = align_and_error(est.h, est.m, inst->h, inst->m);
    diag << "err_x = " << format_double(e.err_x) << '\n'
         << "err_h = " << format_double(e.err_h) << '\n'
         << "err_m = " << format_double(e.err_m) << '\n';
    out << "err_X = " << format_double(e.err_x) << '\n';
  }
  out << "residual = " << format_double(res.final_residual) << "  outer_iters = " << res.outer_iters
      << "  converged = " << (res.converged ? "true" : "false") << '\n';
  dir.write("diagnostics.txt", diag.str());
  if (cfg.get_bool("run.trace")) dir.write("trace.txt", format_trace(res));
  dir.finish();
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_phase_diagram(const RunConfig& cfg, std::ostream& out) {
  PhaseGridSpec spec;
  spec.length = positive(cfg, "phase.L");
  spec.k_values = cfg.get_size_list("phase.k_values");
  spec.n_values = cfg.get_size_list("phase.n_values");
  spec.trials = static_cast<int>(positive(cfg, "phase.trials"));
  spec.b_kind = kind_of(cfg, "phase.b_kind");
  spec.c_kind = kind_of(cfg, "phase.c_kind");
  spec.success_threshold = cfg.get_double("phase.threshold");
  spec.seed = cfg.get_u64("run.seed");
  spec.solver = cfg.solver_options();
  if (spec.k_values.empty() || spec.n_values.empty()) throw ConfigError("phase grid needs K and N values");

  const PhaseResult res = run_phase_diagram(spec, threads_of(cfg));
  OutputDir dir(cfg, "phase-diagram");
  if (dir.wants("csv")) {
    dir.write("phase.csv", phase_csv(spec, res));
    dir.write("phase_summary.csv", phase_summary_csv(spec, res));
  }
  if (dir.wants("pgm")) dir.write_image("phase.pgm", phase_heatmap(res));
  dir.finish();
  out << "phase diagram: " << spec.k_values.size() << " x " << spec.n_values.size() << " cells, " << spec.trials
      << " trials each\n";
  return kExitOk;
}

int cmd_noise_sweep(const RunConfig& cfg, std::ostream& out) {
  NoiseSweepSpec spec;
  spec.length = positive(cfg, "noise.L");
  spec.k = positive(cfg, "noise.K");
  spec.n = positive(cfg, "noise.N");
  spec.snr_db = cfg.get_double_list("noise.snr_db");
  spec.trials = static_cast<int>(positive(cfg, "noise.trials"));
  spec.b_kind = kind_of(cfg, "noise.b_kind");
  spec.c_kind = kind_of(cfg, "noise.c_kind");
  spec.seed = cfg.get_u64("run.seed");
  spec.solver = cfg.solver_options();

  const SweepResult res = run_noise_sweep(spec, threads_of(cfg));
  OutputDir dir(cfg, "noise-sweep");
  dir.write("noise.csv", sweep_csv(res));
  dir.write("noise_summary.csv", sweep_summary_csv(res));
  dir.finish();
  out << "log-log slope of error against noise: " << format_double(res.slope) << '\n';
  return kExitOk;
}

int cmd_oversample(const RunConfig& cfg, std::ostream& out) {
  OversampleSpec spec;
  spec.k = positive(cfg, "oversample.K");
  spec.n = positive(cfg, "oversample.N");
  spec.lengths = cfg.get_size_list("oversample.lengths");
  spec.snr_db = cfg.get_double("oversample.snr_db");
  spec.trials = static_cast<int>(positive(cfg, "oversample.trials"));
  spec.b_kind = kind_of(cfg, "oversample.b_kind");
  spec.c_kind = kind_of(cfg, "oversample.c_kind");
  spec.seed = cfg.get_u64("run.seed");
  spec.solver = cfg.solver_options();

  const SweepResult res = run_oversampling_sweep(spec, threads_of(cfg));
  OutputDir dir(cfg, "oversample");
  dir.write("oversample.csv", sweep_csv(res));
  dir.write("oversample_summary.csv", sweep_summary_csv(res));
  dir.finish();
  for (const SweepPoint& p : res.points) out << "L = " << p.axis << "  mean error = " << format_double(p.mean_err) << '\n';
  return kExitOk;
}

int cmd_channel(const RunConfig& cfg, std::ostream& out) {
  ChannelSpec spec;
  spec.length = positive(cfg, "channel.L");
  spec.n = positive(cfg, "channel.N");
  spec.delay_support = cfg.get_size_list("channel.delay_support");
  spec.snr_db = cfg.get_double("channel.snr_db");
  spec.trials = static_cast<int>(positive(cfg, "channel.trials"));
  spec.seed = cfg.get_u64("run.seed");
  spec.solver = cfg.solver_options();

  const ChannelReport rep = run_channel_sim(spec, threads_of(cfg));
  OutputDir dir(cfg, "channel");
  dir.write("channel.csv", channel_csv(rep));
  dir.finish();
  out << "message recovered (err_m < 0.02) in " << format_double(rep.message_success_rate * 100.0) << "% of trials\n";
  return kExitOk;
}

int cmd_deblur(const RunConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = cfg.get_u64("run.seed");
  const std::string image_path = cfg.get_string("deblur.image");
  Image2D img;
  if (image_path.empty()) {
    const std::size_t size = positive(cfg, "deblur.image_size");
    img = shapes_image(size, size, seed);
  } else {
    img = read_pgm(image_path);
  }
  const int levels = max_haar_levels(img.shape());

  DeblurSpec spec;
  spec.kernel_support = box_kernel_support(img.shape(), positive(cfg, "deblur.kernel_side"));
  try {
    spec.support = wavelet_support_from_string(cfg.get_string("deblur.support"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("deblur.support: ") + e.what());
  }
  const long long n_cfg = cfg.get_int("deblur.N");
  if (n_cfg > 0) {
    spec.n = static_cast<std::size_t>(n_cfg);
  } else {
    const double energy = cfg.get_double("deblur.energy");
    if (!(energy > 0.0 && energy <= 1.0)) throw ConfigError("deblur.energy must lie in (0, 1]");
    spec.n = support_size_for_energy(haar_forward(img.pixels, img.shape(), levels), energy);
  }
  spec.delta_rel = cfg.get_double("deblur.delta_rel");
  spec.seed = seed;
  spec.solver = cfg.solver_options();

  const DeblurResult res = run_deblur(img, spec);
  OutputDir dir(cfg, "deblur");
  std::ostringstream csv;
  csv << "support,rows,cols,K,N,delta,err_image,err_kernel,converged\n"
      << to_string(spec.support) << ',' << img.rows << ',' << img.cols << ',' << spec.kernel_support.size() << ','
      << spec.n << ',' << format_double(res.delta) << ',' << format_double(res.err_image) << ','
      << format_double(res.err_kernel) << ',' << (res.converged ? 1 : 0) << '\n';
  dir.write("deblur.csv", csv.str());
  if (dir.wants("pgm")) {
    dir.write_image("original.pgm", img);
    dir.write_image("blurred.pgm", res.blurred);
    dir.write_image("deblurred.pgm", res.deblurred);
    Image2D kernel = res.kernel;
    const double peak = kernel.pixels.cwiseAbs().maxCoeff();
    if (peak > 0.0) kernel.pixels /= peak;
    dir.write_image("kernel.pgm", kernel);
  }
  dir.finish();
  out << "image error = " << format_double(res.err_image) << "  kernel error = " << format_double(res.err_kernel)
      << "  N = " << spec.n << '\n';
  return res.converged ? kExitOk : kExitNotConverged;
}

int cmd_theory_check(const RunConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = cfg.get_u64("run.seed");
  const int seeds = static_cast<int>(positive(cfg, "theory.seeds"));
  const auto samples = static_cast<std::size_t>(positive(cfg, "theory.samples"));
  const double alpha = cfg.get_double("theory.alpha");
  const unsigned threads = threads_of(cfg);
  const Rng root(seed);
  std::vector<ReportRow> rows;
  bool invariant_failed = false;

  auto planted_op = [&](std::size_t length, std::size_t k, std::size_t n, Rng& rng) {
    return MeasurementOp::build(gen_identity_basis(length, k, IdentityMode::kFirst, rng),
                                gen_gaussian_code(length, n, rng));
  };
  auto rate = [&](int hits) { return static_cast<double>(hits) / static_cast<double>(seeds); };

  {
    Rng rng = root.split(1);
    const MeasurementOp op = MeasurementOp::build(gen_orthonormal_basis(64, 7, rng), gen_gaussian_code(64, 5, rng));
    const double defect = check_adjointness(op, 100, rng());
    const bool ok = defect <= 1e-10;
    invariant_failed = invariant_failed || !ok;
    rows.push_back({"adjointness", "L=64 K=7 N=5", 1, ok ? 1.0 : 0.0, "max defect " + format_double(defect)});
  }
  {
    Rng rng = root.split(2);
    const TangentSpace ts(rng.unit_vector(5), rng.unit_vector(4));
    const double defect = check_projector_algebra(ts, 100, rng());
    const bool ok = defect <= 1e-12;
    invariant_failed = invariant_failed || !ok;
    rows.push_back({"projector-algebra", "K=5 N=4", 1, ok ? 1.0 : 0.0, "max defect " + format_double(defect)});
  }
  {
    int within = 0;
    int gamma_ok = 0;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Rng rng = root.split(3, static_cast<std::uint64_t>(s));
      const MeasurementOp op = planted_op(256, 8, 32, rng);
      const OperatorNormReport r = check_operator_norm(op, alpha, 100, rng());
      within += r.within ? 1 : 0;
      gamma_ok += r.gamma > r.estimate ? 1 : 0;
      worst = std::max(worst, r.estimate / r.bound);
    }
    rows.push_back({"operator-norm-bound", "L=256 K=8 N=32", seeds, rate(within),
                    "max norm/bound " + format_double(worst)});
    rows.push_back({"gamma-exceeds-norm", "L=256 K=8 N=32", seeds, rate(gamma_ok), ""});
  }
  {
    int within = 0;
    bool hypothesis = true;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Rng rng = root.split(4, static_cast<std::uint64_t>(s));
      const GramBoundReport r = check_gram_bounds(planted_op(256, 16, 16, rng));
      within += r.within ? 1 : 0;
      hypothesis = hypothesis && r.hypothesis;
      lo = std::min(lo, r.lambda_min);
      hi = std::max(hi, r.lambda_max);
    }
    rows.push_back({"gram-eigenvalue-box", "L=256 K=N=16", seeds, rate(within),
                    std::string(hypothesis ? "" : "below the sample-count hypothesis; ") + "lambda range [" + format_double(lo) +
                        ", " + format_double(hi) + "]"});
  }
  {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(8);
    e1(0) = 1.0;
    const ExpectationReport r8 = check_expectation_identities(8, samples, root.split(5)(), e1, threads);
    rows.push_back({"fourth-moment-identity", "N=8", 1, r8.fourth_moment.pass ? 1.0 : 0.0,
                    "max z " + format_double(r8.fourth_moment.max_z)});
    Eigen::VectorXd v(4);
    v << 1.5, -0.5, 0.7, 0.2;
    const ExpectationReport r4 = check_expectation_identities(4, 10 * samples, root.split(6)(), v, threads);
    rows.push_back({"weighted-moment |v|^2 I", "N=4 |v|^2=" + format_double(v.squaredNorm()), 1,
                    r4.weighted_norm_sq.pass ? 1.0 : 0.0, "max z " + format_double(r4.weighted_norm_sq.max_z)});
    rows.push_back({"weighted-moment I", "N=4 |v|^2=" + format_double(v.squaredNorm()), 1,
                    r4.weighted_identity.pass ? 1.0 : 0.0, "max z " + format_double(r4.weighted_identity.max_z)});
  }
  {
    int cond = 0;
    int decay = 0;
    int mu = 0;
    int yc = 0;
    int margin = 0;
    for (int s = 0; s < seeds; ++s) {
      Rng rng = root.split(7, static_cast<std::uint64_t>(s));
      const MeasurementOp op = planted_op(1024, 8, 8, rng);
      const TangentSpace ts(rng.unit_vector(8), rng.unit_vector(8));
      cond += check_T_conditioning(op, ts) <= 0.5 ? 1 : 0;
      try {
        make_golfing_partition(op, 8, rng(), 20, PartitionScheme::kRandom);
        ++margin;
      } catch (const RetriesExhausted&) {
      }
      const GolfingPartition part = make_golfing_partition(op, 8, rng(), 1, PartitionScheme::kStrided);
      const CertificateTrace tr = build_certificate(op, ts, part, alpha);
      decay += tr.w_decay ? 1 : 0;
      mu += tr.mu_decay ? 1 : 0;
      yc += tr.residual_condition && tr.tperp_condition ? 1 : 0;
    }
    rows.push_back({"tangent-conditioning", "L=1024 K=N=8", seeds, rate(cond), ""});
    rows.push_back({"random-partition-margin", "L=1024 K=8 P=8", seeds, rate(margin), "20 draws per seed"});
    rows.push_back({"golfing-residual-decay", "L=1024 K=N=8 P=8", seeds, rate(decay), "strided partition"});
    rows.push_back({"golfing-coherence-decay", "L=1024 K=N=8 P=8", seeds, rate(mu), "strided partition"});
    rows.push_back({"certificate-conditions", "L=1024 K=N=8 P=8", seeds, rate(yc), "strided partition"});
  }
  {
    Rng rng = root.split(8);
    const MeasurementOp op = planted_op(128, 8, 8, rng);
    const TangentSpace ts(rng.unit_vector(8), rng.unit_vector(8));
    const StabilityReport r = check_stability_bound(op, ts, {1e-3, 1e-2, 1e-1}, 3, rng());
    const bool ok = std::abs(r.slope - 1.0) <= 0.15;
    rows.push_back({"stability-slope", "L=128 K=N=8", 3, ok ? 1.0 : 0.0, "slope " + format_double(r.slope)});
  }

  const std::string report = format_report(rows);
  OutputDir dir(cfg, "theory-check");
  std::ostringstream csv;
  csv << "check,regime,seeds,pass_rate,note\n";
  for (const auto& r : rows) {
    csv << '"' << r.check << "\",\"" << r.regime << "\"," << r.seeds << ',' << format_double(r.pass_rate) << ",\""
        << r.note << "\"\n";
  }
  dir.write("theory.csv", csv.str());
  dir.write("theory_report.txt", report);
  dir.finish();
  out << report;
  return invariant_failed ? kExitInvariant : kExitOk;
}

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const std::string cmd = cfg.get_string("run.command");
    if (cmd == "deconvolve") return cmd_deconvolve(cfg, out);
    if (cmd == "phase-diagram") return cmd_phase_diagram(cfg, out);
    if (cmd == "noise-sweep") return cmd_noise_sweep(cfg, out);
    if (cmd == "oversample") return cmd_oversample(cfg, out);
    if (cmd == "channel") return cmd_channel(cfg, out);
    if (cmd == "deblur") return cmd_deblur(cfg, out);
    if (cmd == "theory-check") return cmd_theory_check(cfg, out);
    throw ConfigError("unknown command '" + cmd + "'");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace blindconv
