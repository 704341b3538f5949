#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "blindconv/fft.hpp"

namespace blindconv {

/// Grayscale image, row-major, values nominally in [0, 1].
struct Image2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Eigen::VectorXd pixels;

  Image2D() = default;
  Image2D(std::size_t r, std::size_t c);
  Image2D(std::size_t r, std::size_t c, Eigen::VectorXd values);

  GridShape shape() const { return {rows, cols}; }
  double& at(std::size_t r, std::size_t c) { return pixels[static_cast<Eigen::Index>(r * cols + c)]; }
  double at(std::size_t r, std::size_t c) const { return pixels[static_cast<Eigen::Index>(r * cols + c)]; }
};

/// Binary PGM (P5), maxval <= 255. Pixels are scaled to [0, 1].
Image2D read_pgm(const std::string& path);
/// Values are clamped to [0, 1] and quantized to 0..255.
void write_pgm(const std::string& path, const Image2D& image);

/// Piecewise-constant test image: a few rectangles and discs on a dark background.
Image2D shapes_image(std::size_t rows, std::size_t cols, std::uint64_t seed);

Image2D haar2d(const Image2D& image, int levels);
Image2D haar2d_inverse(const Image2D& coeffs, int levels);

}  // namespace blindconv
