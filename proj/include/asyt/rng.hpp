#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace asyt {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed from a base seed and a path of stream tags.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (auto t : tags) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

/// Uniform integer in [0, n) by rejection; independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename Derived>
void fill_gaussian(Eigen::MatrixBase<Derived>& m, Rng& rng, double stddev) {
  using Scalar = typename Derived::Scalar;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(stddev * dist(rng));
}

enum class Stream : std::uint64_t {
  init = 1,
  shuffle = 2,
  noise = 3,
  device = 4,
  readout = 5,
  perturbation = 6,
  split = 7,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream stream,
                                 std::uint64_t index = 0) {
  return derive_seed(seed, {static_cast<std::uint64_t>(stream), index});
}

}  // namespace asyt
