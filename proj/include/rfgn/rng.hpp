#pragma once

#include "rfgn/types.hpp"

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rfgn {

// Deterministic, platform-independent generator. std::mt19937_64 is portable
// but the standard distributions are not, so both the engine and the
// distributions are hand-rolled here. Every random stream in the project is
// derived from one user seed plus a component label.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

  static Rng stream(std::uint64_t seed, std::string_view label) {
    return Rng(derive_seed(seed, label));
  }

  // splitmix64
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform(std::uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform real in [0, 1).
  Real uniform_real() {
    return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  Real normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Real u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform_real();
    const Real u2 = uniform_real();
    const Real radius = std::sqrt(-2.0 * std::log(u1));
    const Real angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Real stddev) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stddev * normal();
    return m;
  }

 private:
  std::uint64_t state_;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rfgn
