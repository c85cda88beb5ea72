#pragma once

#include "nsw/instance.hpp"

namespace nsw {

// Nash social welfare of an allocation. The product of n utilities can
// overflow or underflow a double long before the instance is interesting,
// so the log form is the primary representation; `product` is exp(log) and
// may round to 0 or inf.
struct NswValue {
  double log_product = 0.0;  // -inf when some agent has zero utility
  double product = 1.0;
  double geometric_mean = 1.0;
  bool any_zero = false;
};

double agent_utility(const Instance& inst, const Allocation& al, int a);

NswValue nsw_value(const Instance& inst, const Allocation& al);

// NSW of a per-agent utility vector (same log-domain conventions).
NswValue nsw_of_utilities(const std::vector<double>& util);

// For integral allocations only the number of copies per (agent, type)
// matters; the canonical form assigns each agent's copies to the lowest
// copy slots (prefix form). Fails on non-integral input.
Allocation canonicalize(const Instance& inst, const Allocation& al);

// Copy counts -> prefix-form allocation. counts[a][i] <= k_i required.
Allocation allocation_from_counts(const Instance& inst,
                                  const std::vector<std::vector<int>>& counts);

}  // namespace nsw
