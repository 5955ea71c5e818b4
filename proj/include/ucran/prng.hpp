// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace ucran {

/// Philox4x32-10 counter-based generator. Every draw is addressed by a
/// (stream, index) pair, so the generated ensemble is independent of loop
/// order and identical across platforms. The stream/index assignment used by
/// the instance generator is part of the file-format contract (see README).
class Philox {
 public:
  explicit Philox(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// One 128-bit Philox block as four 32-bit words.
  std::array<std::uint32_t, 4> block(std::uint64_t stream,
                                     std::uint64_t index) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * c0;
      const std::uint64_t p1 = 0xCD9E8D57ULL * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    return {c0, c1, c2, c3};
  }

  /// Uniform double in (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    const auto b = block(stream, index);
    return to_unit(b[0], b[1]);
  }

  /// Standard normal draw; index n maps to one of the two Box-Muller
  /// variates of block n/2, so consecutive indices never collide.
  double normal(std::uint64_t stream, std::uint64_t index) const {
    const auto b = block(stream, index >> 1);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return (index & 1) ? r * std::sin(a) : r * std::cos(a);
  }

  /// Circularly symmetric complex normal with unit variance.
  std::complex<double> cnormal(std::uint64_t stream,
                               std::uint64_t index) const {
    const auto b = block(stream, index);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-std::log(u1));  // variance 1/2 per part
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t z = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(z >> 11) + 0.5) * 0x1p-53;
  }

  std::uint64_t seed_;
};

}  // namespace ucran
