#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace blindconv {

/// Counter-based splittable generator.
///
/// Output i of a stream is a SplitMix64 finalization of (key + i * golden).
/// split(tag) derives an independent child key, so any cell/trial of an
/// experiment grid can be regenerated in isolation from (seed, path of tags).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  Rng split(std::uint64_t tag) const;
  template <typename... Tags>
  Rng split(std::uint64_t first, Tags... rest) const {
    return split(first).split(static_cast<std::uint64_t>(rest)...);
  }

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// Standard Gaussian vector scaled to unit Euclidean norm.
  Eigen::VectorXd unit_vector(Eigen::Index n);
  /// k distinct indices from [0, n), sorted ascending.
  std::vector<std::size_t> subset(std::size_t n, std::size_t k);
  std::vector<std::size_t> permutation(std::size_t n);

  std::uint64_t key() const { return key_; }

 private:
  Rng(std::uint64_t key, bool /*raw*/) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> gauss_;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace blindconv
