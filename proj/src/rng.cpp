#include "blindconv/rng.hpp"

#include <algorithm>
#include <numeric>

#include "blindconv/errors.hpp"

namespace blindconv {
namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

Rng Rng::split(std::uint64_t tag) const { return Rng(mix64(key_ ^ mix64(tag * kGolden + 0x632be59bd9b4e019ULL)), true); }

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() { return gauss_(*this); }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw DimensionError("Rng::below(0)");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd Rng::unit_vector(Eigen::Index n) {
  Eigen::VectorXd v = normal_vector(n);
  double norm = v.norm();
  while (norm == 0.0) {
    v = normal_vector(n);
    norm = v.norm();
  }
  return v / norm;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
  return p;
}

std::vector<std::size_t> Rng::subset(std::size_t n, std::size_t k) {
  if (k > n) throw DimensionError("subset size exceeds population");
  std::vector<std::size_t> p = permutation(n);
  p.resize(k);
  std::sort(p.begin(), p.end());
  return p;
}

}  // namespace blindconv
