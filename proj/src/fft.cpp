#include "blindconv/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "blindconv/errors.hpp"

namespace blindconv {
namespace {

enum class PlanKind { kForward, kInverse, kR2C, kC2R };

// FFTW planning is not thread safe, execution with the new-array interface
// is. Plans are created once per (kind, shape) and never destroyed.
// FFTW_ESTIMATE keeps plan selection (and therefore rounding) deterministic.
fftw_plan cached_plan(PlanKind kind, const GridShape& shape) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, std::size_t>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(static_cast<int>(kind), shape.rows, shape.cols);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int rank = shape.is_1d() ? 1 : 2;
  int dims[2] = {static_cast<int>(shape.rows), static_cast<int>(shape.cols)};
  const int* n = shape.is_1d() ? dims + 1 : dims;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<cdouble> cbuf(shape.size());
  std::vector<cdouble> cbuf2(shape.size());
  std::vector<cdouble> hbuf(shape.half_size());
  std::vector<double> rbuf(shape.size());
  auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());
  auto* c2 = reinterpret_cast<fftw_complex*>(cbuf2.data());
  auto* h = reinterpret_cast<fftw_complex*>(hbuf.data());
  fftw_plan plan = nullptr;
  switch (kind) {
    case PlanKind::kForward:
      plan = fftw_plan_dft(rank, n, c, c2, FFTW_FORWARD, flags);
      break;
    case PlanKind::kInverse:
      plan = fftw_plan_dft(rank, n, c, c2, FFTW_BACKWARD, flags);
      break;
    case PlanKind::kR2C:
      plan = fftw_plan_dft_r2c(rank, n, rbuf.data(), h, flags);
      break;
    case PlanKind::kC2R:
      plan = fftw_plan_dft_c2r(rank, n, h, rbuf.data(), flags);
      break;
  }
  if (plan == nullptr) throw std::runtime_error("fftw planning failed");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

std::size_t GridShape::conjugate_partner(std::size_t index) const {
  const std::size_t r = index / cols;
  const std::size_t c = index % cols;
  return ((rows - r) % rows) * cols + (cols - c) % cols;
}

FourierGrid::FourierGrid(GridShape shape) : shape_(shape) {
  if (shape.rows == 0 || shape.cols == 0) throw DimensionError("empty Fourier grid");
  scale_ = 1.0 / std::sqrt(static_cast<double>(shape.size()));
  const std::size_t hc = shape.half_cols();
  weights_.resize(static_cast<Eigen::Index>(shape.half_size()));
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < hc; ++c) {
      const bool self_paired_column = c == 0 || (shape.cols % 2 == 0 && c == shape.cols / 2);
      weights_[static_cast<Eigen::Index>(r * hc + c)] = self_paired_column ? 1.0 : 2.0;
    }
  }
  plan_forward_ = cached_plan(PlanKind::kForward, shape);
  plan_inverse_ = cached_plan(PlanKind::kInverse, shape);
  plan_r2c_ = cached_plan(PlanKind::kR2C, shape);
  plan_c2r_ = cached_plan(PlanKind::kC2R, shape);
}

void FourierGrid::forward(std::span<const cdouble> in, std::span<cdouble> out) const {
  if (in.size() != size() || out.size() != size()) throw DimensionError("forward: length mismatch");
  std::vector<cdouble> tmp(in.begin(), in.end());
  fftw_execute_dft(static_cast<fftw_plan>(plan_forward_), reinterpret_cast<fftw_complex*>(tmp.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  for (auto& v : out) v *= scale_;
}

void FourierGrid::inverse(std::span<const cdouble> in, std::span<cdouble> out) const {
  if (in.size() != size() || out.size() != size()) throw DimensionError("inverse: length mismatch");
  std::vector<cdouble> tmp(in.begin(), in.end());
  fftw_execute_dft(static_cast<fftw_plan>(plan_inverse_), reinterpret_cast<fftw_complex*>(tmp.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  for (auto& v : out) v *= scale_;
}

void FourierGrid::forward_real(std::span<const double> in, std::span<cdouble> half_out) const {
  if (in.size() != size() || half_out.size() != half_size()) {
    throw DimensionError("forward_real: length mismatch");
  }
  std::vector<double> tmp(in.begin(), in.end());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), tmp.data(),
                       reinterpret_cast<fftw_complex*>(half_out.data()));
  for (auto& v : half_out) v *= scale_;
}

void FourierGrid::inverse_real(std::span<const cdouble> half_in, std::span<double> out) const {
  if (half_in.size() != half_size() || out.size() != size()) {
    throw DimensionError("inverse_real: length mismatch");
  }
  // c2r overwrites its input.
  std::vector<cdouble> tmp(half_in.begin(), half_in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_), reinterpret_cast<fftw_complex*>(tmp.data()),
                       out.data());
  for (auto& v : out) v *= scale_;
}

std::size_t FourierGrid::half_to_full(std::size_t h) const {
  const std::size_t hc = shape_.half_cols();
  return (h / hc) * shape_.cols + h % hc;
}

Eigen::VectorXcd FourierGrid::expand_half(const Eigen::VectorXcd& half) const {
  if (static_cast<std::size_t>(half.size()) != half_size()) throw DimensionError("expand_half: length mismatch");
  const std::size_t hc = shape_.half_cols();
  Eigen::VectorXcd full(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < shape_.rows; ++r) {
    for (std::size_t c = 0; c < shape_.cols; ++c) {
      const std::size_t idx = r * shape_.cols + c;
      if (c < hc) {
        full[static_cast<Eigen::Index>(idx)] = half[static_cast<Eigen::Index>(r * hc + c)];
      } else {
        const std::size_t p = shape_.conjugate_partner(idx);
        const std::size_t pr = p / shape_.cols;
        const std::size_t pc = p % shape_.cols;
        full[static_cast<Eigen::Index>(idx)] = std::conj(half[static_cast<Eigen::Index>(pr * hc + pc)]);
      }
    }
  }
  return full;
}

Eigen::VectorXcd FourierGrid::restrict_to_half(const Eigen::VectorXcd& full) const {
  if (static_cast<std::size_t>(full.size()) != size()) throw DimensionError("restrict_to_half: length mismatch");
  Eigen::VectorXcd half(static_cast<Eigen::Index>(half_size()));
  for (std::size_t h = 0; h < half_size(); ++h) {
    half[static_cast<Eigen::Index>(h)] = full[static_cast<Eigen::Index>(half_to_full(h))];
  }
  return half;
}

}  // namespace blindconv
