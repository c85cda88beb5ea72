#include "nsw/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsw/errors.hpp"

namespace nsw {

double agent_utility(const Instance& inst, const Allocation& al, int a) {
  double total = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    // Utility is additive over per-copy fractions against the sorted
    // marginals, which matches concave interpolation for prefix-form
    // allocations and upper-bounds it otherwise.
    for (int j = 0; j < inst.k[i]; ++j)
      total += al.x[a][i][j] * inst.u[a][i][j];
  }
  return total;
}

NswValue nsw_of_utilities(const std::vector<double>& utilities) {
  NswValue v;
  v.any_zero = false;
  double log_sum = 0.0;
  for (double u : utilities) {
    if (u <= 0.0) {
      v.any_zero = true;
    } else {
      log_sum += std::log(u);
    }
  }
  if (v.any_zero) {
    v.log_product = -std::numeric_limits<double>::infinity();
    v.product = 0.0;
    v.geometric_mean = 0.0;
    return v;
  }
  v.log_product = log_sum;
  v.product = 1.0;
  for (double u : utilities) v.product *= u;
  v.geometric_mean =
      utilities.empty() ? 1.0 : std::exp(log_sum / (double)utilities.size());
  return v;
}

NswValue nsw_value(const Instance& inst, const Allocation& al) {
  std::vector<double> utilities(inst.n);
  for (int a = 0; a < inst.n; ++a) utilities[a] = agent_utility(inst, al, a);
  return nsw_of_utilities(utilities);
}

Allocation canonicalize(const Instance& inst, const Allocation& al) {
  Allocation out = Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i) {
      double count = 0.0;
      for (int j = 0; j < inst.k[i]; ++j) count += al.x[a][i][j];
      double rounded = std::round(count);
      if (std::abs(count - rounded) > 1e-6)
        throw Error(ErrorCode::InvalidAllocation,
                    "cannot canonicalize a fractional allocation");
      int c = (int)rounded;
      if (c < 0 || c > inst.k[i])
        throw Error(ErrorCode::InvalidAllocation,
                    "copy count out of range while canonicalizing");
      for (int j = 0; j < c; ++j) out.x[a][i][j] = 1.0;
    }
  out.integral = true;
  return out;
}

Allocation allocation_from_counts(const Instance& inst,
                                  const std::vector<std::vector<int>>& counts) {
  Allocation out = Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i) {
      int c = counts[a][i];
      if (c < 0 || c > inst.k[i])
        throw Error(ErrorCode::InvalidAllocation,
                    "copy count out of range");
      for (int j = 0; j < c; ++j) out.x[a][i][j] = 1.0;
    }
  return out;
}

}  // namespace nsw
