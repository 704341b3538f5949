// Coarse scaling check of the fast operator route: doubling L at fixed K, N
// should less than quadruple the cost of apply + adjoint.
#include <chrono>
#include <cstdio>

#include "blindconv/basis.hpp"
#include "blindconv/measurement_operator.hpp"

using namespace blindconv;

namespace {

double seconds_per_call(std::size_t length, std::size_t k, std::size_t n) {
  Rng rng(length);
  MeasurementOp::Options o;
  o.fourier_cap = 0;
  const MeasurementOp op = MeasurementOp::build(gen_identity_basis(length, k, IdentityMode::kRandomSubset, rng),
                                                gen_gaussian_code(length, n, rng), GridShape::line(length), o);
  const Eigen::MatrixXd h = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(k), 2);
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), 2);
  double sink = 0.0;
  int calls = 0;
  const auto start = std::chrono::steady_clock::now();
  double elapsed = 0.0;
  while (elapsed < 0.3) {
    const Eigen::VectorXcd v = op.apply_factored_half(h, m);
    sink += op.adjoint_half(v)(0, 0);
    ++calls;
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  if (sink == 12345.0) std::puts("");
  return elapsed / calls;
}

}  // namespace

int main() {
  const std::size_t k = 16, n = 16;
  double prev = 0.0;
  int failures = 0;
  for (std::size_t length = 1024; length <= 32768; length *= 2) {
    const double t = seconds_per_call(length, k, n);
    if (prev > 0.0) {
      const double ratio = t / prev;
      failures += ratio < 4.0 ? 0 : 1;
      std::printf("L=%6zu  %.3e s/call  ratio %.2f\n", length, t, ratio);
    } else {
      std::printf("L=%6zu  %.3e s/call\n", length, t);
    }
    prev = t;
  }
  std::printf("%s\n", failures == 0 ? "scaling ok" : "scaling worse than quadratic");
  return failures == 0 ? 0 : 1;
}
