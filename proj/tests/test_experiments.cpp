#include <doctest.h>

#include <cmath>
#include <sstream>

#include "blindconv/errors.hpp"
#include "blindconv/experiments.hpp"
#include "blindconv/haar.hpp"
#include "oracles.hpp"

using namespace blindconv;

namespace {

PhaseGridSpec small_grid() {
  PhaseGridSpec spec;
  spec.length = 128;
  spec.k_values = {4, 8};
  spec.n_values = {4, 120};
  spec.trials = 3;
  spec.seed = 17;
  return spec;
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("phase diagram: success matrix, cell isolation and determinism") {
  const PhaseGridSpec spec = small_grid();
  const PhaseResult full = run_phase_diagram(spec, 2);
  REQUIRE(full.records.size() == 12);
  CHECK(full.success.rows() == 2);
  CHECK(full.success.cols() == 2);
  CHECK(full.success(0, 0) == doctest::Approx(1.0));
  CHECK(full.success(1, 1) == doctest::Approx(0.0));

  const std::vector<PhaseRecord> cell = run_phase_cell(spec, 8, 4, 1);
  REQUIRE(cell.size() == 3);
  for (int t = 0; t < 3; ++t) {
    const PhaseRecord& f = full.records[static_cast<std::size_t>(2 * 3 + t)];
    CHECK(f.k == 8);
    CHECK(f.n == 4);
    CHECK(cell[static_cast<std::size_t>(t)].err_x == f.err_x);
  }
  CHECK(phase_csv(spec, run_phase_diagram(spec, 1)) == phase_csv(spec, full));
  CHECK(count_lines(phase_summary_csv(spec, full)) == 5);
  const Image2D heat = phase_heatmap(full);
  CHECK(heat.rows == 2);
  CHECK(heat.cols == 2);

  PhaseGridSpec bad = spec;
  bad.k_values = {200};
  CHECK_THROWS(run_phase_diagram(bad));
  bad = spec;
  bad.success_threshold = 1.5;
  CHECK_THROWS(run_phase_diagram(bad));
}

TEST_CASE("noise level from a target snr") {
  const double sigma = noise_sigma_for_snr(2.0, 3.0, 100, 20.0);
  // 10 log10(|w|^2 |x|^2 / (L sigma^2)) recovers the target.
  CHECK(10.0 * std::log10(36.0 / (100.0 * sigma * sigma)) == doctest::Approx(20.0));
  CHECK(noise_sigma_for_snr(1.0, 1.0, 10, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(noise_ball_radius(100, 0.5) == doctest::Approx(std::sqrt(120.0) * 0.5));
}

TEST_CASE("sweep aggregation") {
  std::vector<SweepRecord> recs;
  for (int t = 0; t < 10; ++t) {
    SweepRecord r;
    r.point = static_cast<std::size_t>(t % 2);
    r.axis = t % 2 == 0 ? 10.0 : 20.0;
    r.trial = t / 2;
    r.err_x = 0.1 * (t + 1);
    recs.push_back(r);
  }
  const auto pts = aggregate(recs, 2);
  CHECK(pts[0].axis == 10.0);
  CHECK(pts[0].mean_err == doctest::Approx(0.5));
  CHECK(pts[1].mean_err == doctest::Approx(0.6));
  CHECK(pts[0].p50_err == doctest::Approx(0.5));
  CHECK(pts[0].p90_err == doctest::Approx(0.9));
  CHECK_THROWS_AS(aggregate(recs, 1), DimensionError);
}

TEST_CASE("noise and oversampling sweeps are reproducible") {
  NoiseSweepSpec ns;
  ns.length = 128;
  ns.k = 6;
  ns.n = 8;
  ns.snr_db = {20, 40, std::numeric_limits<double>::infinity()};
  ns.trials = 3;
  ns.seed = 4;
  const SweepResult a = run_noise_sweep(ns, 1);
  const SweepResult b = run_noise_sweep(ns, 3);
  CHECK(sweep_csv(a) == sweep_csv(b));
  CHECK(count_lines(sweep_csv(a)) == 10);
  CHECK(a.points[0].mean_err > a.points[1].mean_err);
  CHECK(a.points[2].noise_sigma == 0.0);
  CHECK(a.points[2].mean_err < 1e-4);

  OversampleSpec os;
  os.k = 4;
  os.n = 4;
  os.lengths = {32, 32, 64};
  os.trials = 3;
  os.seed = 9;
  const SweepResult o = run_oversampling_sweep(os, 1);
  REQUIRE(o.points.size() == 3);
  CHECK(o.points[0].mean_err == o.points[1].mean_err);
  CHECK(count_lines(sweep_summary_csv(o)) == 4);
}

TEST_CASE("channel simulation") {
  ChannelSpec trivial;
  trivial.length = 64;
  trivial.n = 10;
  trivial.trials = 3;
  trivial.seed = 2;
  const ChannelReport t = run_channel_sim(trivial, 1);
  CHECK(t.message_success_rate == doctest::Approx(1.0));
  for (const auto& r : t.records) CHECK(r.err_m < 1e-5);

  ChannelSpec sparse = trivial;
  sparse.length = 128;
  sparse.delay_support = {0, 5, 11};
  const ChannelReport s = run_channel_sim(sparse, 2);
  CHECK(s.records.size() == 3);
  for (const auto& r : s.records) CHECK(r.support_energy >= 0.99);
  CHECK(channel_csv(s) == channel_csv(run_channel_sim(sparse, 1)));
  ChannelSpec bad = trivial;
  bad.delay_support = {64};
  CHECK_THROWS(run_channel_sim(bad));
}

TEST_CASE("support selection helpers") {
  Eigen::VectorXd v(6);
  v << 0.1, -3.0, 2.0, -2.0, 0.0, 1.0;
  CHECK(top_indices(v, 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK(support_size_for_energy(v, 1.0) == 5);
  CHECK(support_size_for_energy(v, 0.5) == 2);
  CHECK(box_kernel_support(GridShape{8, 8}, 3) == std::vector<std::size_t>{0, 1, 7, 8, 9, 15, 56, 57, 63});
  CHECK(box_kernel_support(GridShape::line(8), 3) == std::vector<std::size_t>{0, 1, 7});
  Eigen::VectorXd truth(3);
  truth << 1.0, 2.0, 3.0;
  CHECK(scaled_error(-4.0 * truth, truth) <= 1e-15);
  CHECK(wavelet_support_from_string("top-blurred") == WaveletSupport::kTopBlurred);
  CHECK_THROWS(wavelet_support_from_string("best"));
}

TEST_CASE("deblur operator is the 2d transform of the 2d convolution") {
  Rng rng(6);
  const GridShape shape{8, 8};
  const MeasurementOp op = MeasurementOp::build(SubspaceBasis::identity_columns(64, box_kernel_support(shape, 3)),
                                                SubspaceBasis::haar_subset(shape, 3, rng.subset(64, 10)), shape);
  const Eigen::VectorXd h = rng.normal_vector(9);
  const Eigen::VectorXd m = rng.normal_vector(10);
  const Eigen::VectorXd conv = oracle::circular_convolve2(op.b_basis().synthesize(h), op.c_basis().synthesize(m), shape);
  const Eigen::VectorXcd want = oracle::dft_matrix(shape) * conv.cast<std::complex<double>>();
  CHECK((op.apply(h * m.transpose()).values - want).norm() <= 1e-9 * want.norm());
}

TEST_CASE("deblur with a single-pixel kernel is exact") {
  const Image2D img = shapes_image(16, 16, 5);
  DeblurSpec spec;
  spec.kernel_support = {0};
  spec.n = support_size_for_energy(haar_forward(img.pixels, img.shape(), max_haar_levels(img.shape())), 1.0);
  spec.delta_rel = 0.0;
  spec.seed = 1;
  const DeblurResult res = run_deblur(img, spec);
  CHECK((res.blurred.pixels - img.pixels).norm() <= 1e-12);
  CHECK(res.err_image < 1e-5);
  CHECK(res.err_kernel < 1e-5);

  DeblurSpec bad = spec;
  bad.kernel_support = {300};
  CHECK_THROWS(run_deblur(img, bad));
}
