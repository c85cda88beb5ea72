#pragma once

#include <cstdint>
#include <random>

namespace nsw {

// mt19937_64 output is pinned by the standard; converting to doubles through
// uniform_real_distribution is not. This wrapper keeps every drawn double
// bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] via rejection-free Lemire-style reduction.
  int uniform_int(int lo, int hi);

  // Derive an independent stream (e.g. per trial) without correlation.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 eng_;
};

}  // namespace nsw
