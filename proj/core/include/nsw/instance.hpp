#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nsw {

// One copy slot of an item type, addressed by agent a, type i, copy j.
// Copies are ordered: u[a][i][j] is the marginal utility of the (j+1)-th copy
// of type i that agent a receives, and marginals are nonincreasing in j.
struct Triplet {
  int a = 0;
  int i = 0;
  int j = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Market with n agents, m item types, k[i] identical copies of type i and
// separable piecewise-linear concave utilities given by per-copy marginals.
struct Instance {
  int n = 0;
  int m = 0;
  std::vector<int> k;                               // size m
  std::vector<std::vector<std::vector<double>>> u;  // n x m x k[i]

  int total_items() const;     // K = sum k_i
  double max_value_ratio() const;  // max positive marginal / min positive marginal

  // Utility of the first c copies of type i for agent a.
  double prefix_utility(int a, int i, int c) const;

  bool values_anything(int a) const;
};

struct Violation {
  std::string what;
};

// Structural checks: dimensions agree, k >= 1, marginals finite, nonnegative
// and nonincreasing per (agent, type). Empty result means valid.
std::vector<Violation> validate(const Instance& inst);

void require_valid(const Instance& inst);  // throws Error(InvalidInstance)

// Fractional or integral assignment; x mirrors the shape of Instance::u.
// Feasible when 0 <= x_aij <= 1 and sum_{a,j} x_aij <= k_i for every type.
struct Allocation {
  std::vector<std::vector<std::vector<double>>> x;
  bool integral = false;

  static Allocation zeros(const Instance& inst);
};

std::vector<Violation> validate_allocation(const Instance& inst, const Allocation& al);

// Flat indexing of all (a, i, j) slots in lexicographic order.
class TripletIndex {
 public:
  explicit TripletIndex(const Instance& inst);

  int count() const { return static_cast<int>(trips_.size()); }
  const Triplet& at(int id) const { return trips_[id]; }
  int id_of(int a, int i, int j) const;

 private:
  std::vector<Triplet> trips_;
  std::vector<std::vector<int>> base_;  // base_[a][i] = id of (a, i, 0)
};

}  // namespace nsw
