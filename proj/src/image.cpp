#include "blindconv/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "blindconv/errors.hpp"
#include "blindconv/haar.hpp"
#include "blindconv/rng.hpp"

namespace blindconv {

Image2D::Image2D(std::size_t r, std::size_t c) : rows(r), cols(c), pixels(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r * c))) {}

Image2D::Image2D(std::size_t r, std::size_t c, Eigen::VectorXd values) : rows(r), cols(c), pixels(std::move(values)) {
  if (static_cast<std::size_t>(pixels.size()) != r * c) throw DimensionError("image: pixel count does not match size");
}

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

}  // namespace

Image2D read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (header_token(in) != "P5") throw std::runtime_error(path + ": not a binary PGM (P5) file");
  std::size_t cols = 0;
  std::size_t rows = 0;
  int maxval = 0;
  try {
    cols = std::stoul(header_token(in));
    rows = std::stoul(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
  if (rows == 0 || cols == 0 || maxval < 1 || maxval > 255) throw std::runtime_error(path + ": unsupported PGM header");
  in.get();
  std::vector<unsigned char> raw(rows * cols);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw std::runtime_error(path + ": truncated PGM data");
  Image2D img(rows, cols);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[static_cast<Eigen::Index>(i)] = raw[i] / static_cast<double>(maxval);
  return img;
}

void write_pgm(const std::string& path, const Image2D& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
  std::vector<unsigned char> raw(image.rows * image.cols);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.pixels[static_cast<Eigen::Index>(i)], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Image2D shapes_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw DimensionError("shapes_image: empty size");
  Rng rng(seed);
  Image2D img(rows, cols);
  img.pixels.setConstant(0.1);
  const double h = static_cast<double>(rows);
  const double w = static_cast<double>(cols);
  for (int k = 0; k < 3; ++k) {
    const double r0 = rng.uniform() * 0.6 * h;
    const double c0 = rng.uniform() * 0.6 * w;
    const double rh = (0.15 + 0.25 * rng.uniform()) * h;
    const double cw = (0.15 + 0.25 * rng.uniform()) * w;
    const double level = 0.4 + 0.5 * rng.uniform();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (r >= r0 && r < r0 + rh && c >= c0 && c < c0 + cw) img.at(r, c) = level;
      }
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double rc = (0.2 + 0.6 * rng.uniform()) * h;
    const double cc = (0.2 + 0.6 * rng.uniform()) * w;
    const double rad = (0.08 + 0.12 * rng.uniform()) * std::min(h, w);
    const double level = 0.3 + 0.7 * rng.uniform();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dr = static_cast<double>(r) - rc;
        const double dc = static_cast<double>(c) - cc;
        if (dr * dr + dc * dc <= rad * rad) img.at(r, c) = level;
      }
    }
  }
  return img;
}

Image2D haar2d(const Image2D& image, int levels) {
  return Image2D(image.rows, image.cols, haar_forward(image.pixels, image.shape(), levels));
}

Image2D haar2d_inverse(const Image2D& coeffs, int levels) {
  return Image2D(coeffs.rows, coeffs.cols, haar_inverse(coeffs.pixels, coeffs.shape(), levels));
}

}  // namespace blindconv
