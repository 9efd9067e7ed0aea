#pragma once

#include <cstdint>
#include <numbers>
#include <cmath>

#include <Eigen/Core>

namespace kaclab {

/// Counter-based pseudo-random stream keyed by (seed, stream id).
///
/// The state is an additive counter advanced by the splitmix64 increment;
/// each output is a bijective mix of the counter, so streams with the same
/// key reproduce identical sequences bit-for-bit and distinct keys give
/// statistically independent streams with no coordination between workers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    state_ = mix64(mix64(seed ^ 0x8e3c5fd1846e3bc5ull) ^
                   mix64(stream ^ 0x1d8e4e27c47d124full));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Derived stream that is independent of this one and of other children.
  RngStream fork(std::uint64_t child) const {
    return RngStream(mix64(seed_ ^ mix64(stream_ + 0x9e6c63d0876a7a35ull)),
                     child);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in {0, ..., k-1} (Lemire reduction; k << 2^64 here).
  std::uint64_t uniform_below(std::uint64_t k) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * k) >> 64);
  }

  /// Standard normal via Box-Muller; consumes exactly two words per call.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  Eigen::VectorXd normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  /// Uniformly distributed direction on the unit sphere in R^d.
  Eigen::VectorXd unit_vector(Eigen::Index d) {
    Eigen::VectorXd v = normal_vector(d);
    double nrm = v.norm();
    while (nrm < 1e-300) {
      v = normal_vector(d);
      nrm = v.norm();
    }
    return v / nrm;
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
};

}  // namespace kaclab
