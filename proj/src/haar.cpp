#include "blindconv/haar.hpp"

#include <cmath>
#include <vector>

#include "blindconv/errors.hpp"

namespace blindconv {
namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check(GridShape shape, int levels, Eigen::Index n) {
  if (static_cast<std::size_t>(n) != shape.size()) throw DimensionError("haar: size does not match grid");
  if (levels < 0 || levels > max_haar_levels(shape)) {
    throw DimensionError("haar: grid not divisible by 2^levels");
  }
}

// One analysis step on `len` strided samples starting at `base`.
void analyze(double* data, std::size_t base, std::size_t stride, std::size_t len, std::vector<double>& tmp) {
  const std::size_t half = len / 2;
  tmp.resize(len);
  for (std::size_t i = 0; i < half; ++i) {
    const double a = data[base + (2 * i) * stride];
    const double b = data[base + (2 * i + 1) * stride];
    tmp[i] = (a + b) * kInvSqrt2;
    tmp[half + i] = (a - b) * kInvSqrt2;
  }
  for (std::size_t i = 0; i < len; ++i) data[base + i * stride] = tmp[i];
}

void synthesize(double* data, std::size_t base, std::size_t stride, std::size_t len, std::vector<double>& tmp) {
  const std::size_t half = len / 2;
  tmp.resize(len);
  for (std::size_t i = 0; i < half; ++i) {
    const double s = data[base + i * stride];
    const double d = data[base + (half + i) * stride];
    tmp[2 * i] = (s + d) * kInvSqrt2;
    tmp[2 * i + 1] = (s - d) * kInvSqrt2;
  }
  for (std::size_t i = 0; i < len; ++i) data[base + i * stride] = tmp[i];
}

}  // namespace

int max_haar_levels(GridShape shape) {
  int levels = 0;
  std::size_t r = shape.rows;
  std::size_t c = shape.cols;
  while (c % 2 == 0 && c > 1 && (shape.rows == 1 || (r % 2 == 0 && r > 1))) {
    c /= 2;
    if (shape.rows > 1) r /= 2;
    ++levels;
  }
  return levels;
}

Eigen::VectorXd haar_forward(const Eigen::VectorXd& grid, GridShape shape, int levels) {
  check(shape, levels, grid.size());
  Eigen::VectorXd out = grid;
  std::vector<double> tmp;
  std::size_t rows = shape.rows;
  std::size_t cols = shape.cols;
  for (int level = 0; level < levels; ++level) {
    for (std::size_t r = 0; r < rows; ++r) analyze(out.data(), r * shape.cols, 1, cols, tmp);
    if (!shape.is_1d()) {
      for (std::size_t c = 0; c < cols; ++c) analyze(out.data(), c, shape.cols, rows, tmp);
      rows /= 2;
    }
    cols /= 2;
  }
  return out;
}

Eigen::VectorXd haar_inverse(const Eigen::VectorXd& coeffs, GridShape shape, int levels) {
  check(shape, levels, coeffs.size());
  Eigen::VectorXd out = coeffs;
  std::vector<double> tmp;
  for (int level = levels - 1; level >= 0; --level) {
    const std::size_t cols = shape.cols >> level;
    const std::size_t rows = shape.is_1d() ? 1 : shape.rows >> level;
    if (!shape.is_1d()) {
      for (std::size_t c = 0; c < cols; ++c) synthesize(out.data(), c, shape.cols, rows, tmp);
    }
    for (std::size_t r = 0; r < rows; ++r) synthesize(out.data(), r * shape.cols, 1, cols, tmp);
  }
  return out;
}

}  // namespace blindconv
