#pragma once

#include <cstdint>
#include <random>

#include "tradecast/errors.hpp"
#include "tradecast/matrix.hpp"

namespace tradecast {

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is pinned by the C++ standard (the 10000th draw from seed 5489 is
// 9981545732273789042), so identical seeds give identical streams on every
// conforming platform. Floating-point draws use a fixed 53-bit mapping rather
// than std::uniform_real_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    if (!(lo < hi)) {
      throw ArgumentError("next_uniform: requires lo < hi, got [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + ")");
    }
    return lo + next_unit() * (hi - lo);
  }

  // Uniform index in [0, n): floor(unit * n).
  std::size_t next_index(std::size_t n) {
    if (n == 0) throw ArgumentError("next_index: n must be positive");
    auto idx = static_cast<std::size_t>(next_unit() * static_cast<double>(n));
    return idx < n ? idx : n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

// rows-by-cols matrix of uniform draws in [lo, hi), filled row-major.
inline Matrix seeded_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo,
                             double hi) {
  if (!(lo < hi)) {
    throw ArgumentError("seeded_uniform: requires lo < hi, got [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + ")");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = lo + rng.next_unit() * (hi - lo);
  return m;
}

}  // namespace tradecast
