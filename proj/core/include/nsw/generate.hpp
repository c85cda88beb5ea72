#pragma once

#include <cstdint>

#include "nsw/instance.hpp"

namespace nsw {

// Random instance family used by tests and the bench harness.
// First marginals are uniform in [u1_lo, u1_hi]; each later marginal is a
// uniform fraction of its predecessor, so columns are strictly decreasing
// with probability one and every marginal is positive.
struct GenerateParams {
  std::uint64_t seed = 1;
  int n = 2;
  int m = 2;
  int k_lo = 1;
  int k_hi = 3;
  double u1_lo = 1.0;
  double u1_hi = 10.0;
};

Instance generate(const GenerateParams& params);

}  // namespace nsw
