#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nsw/instance.hpp"
#include "nsw/welfare.hpp"

namespace nsw::oracle {

inline constexpr std::uint64_t kDefaultLimit = 10'000'000;

// Number of integral allocations the exhaustive solver would visit:
// product over types of |{count vectors c in N^n : sum c <= k_i}|.
// Saturates at uint64 max.
std::uint64_t search_space_size(const Instance& inst);

struct ExactResult {
  Allocation best;       // prefix-canonical
  NswValue value;
  std::uint64_t visited = 0;
};

// Exhaustive optimum of the Nash social welfare over integral allocations.
// Per type, only per-agent copy counts matter; count vectors are enumerated
// lexicographically and ties keep the first maximizer found. Throws
// Error(SearchSpaceExceeded) when the state count is above `limit`.
ExactResult solve_exact(const Instance& inst, std::uint64_t limit = kDefaultLimit);

// ---- Independent enumeration of the sampling procedure ----------------
//
// The randomized rounding draws, for each type i, k_i independent samples
// from the categorical distribution P[(a,i,j)] = x_aij / k_i (remaining mass
// is a no-op). These helpers enumerate that outcome space exactly and are
// the ground truth the Monte-Carlo estimator and the per-set probability
// bound are tested against.

// Number of outcomes: prod_i (support_i)^{k_i} with support_i counting the
// positive-x triplets of type i plus the no-op when slack remains.
std::uint64_t outcome_space_size(const Instance& inst, const Allocation& x);

// Callback receives the joint probability of one outcome and, per type, the
// list of drawn triplet ids (TripletIndex ids; -1 marks a no-op draw).
using OutcomeFn =
    std::function<void(double prob, const std::vector<std::vector<int>>& draws)>;

void enumerate_outcomes(const Instance& inst, const Allocation& x,
                        std::uint64_t limit, const OutcomeFn& fn);

// Exact E[prod_a u_a] of the rounding: each drawn triplet (a,i,*) hands agent
// a one more copy of type i (never beyond k_i), and utilities are the prefix
// marginals of the copies held.
double exact_expected_welfare(const Instance& inst, const Allocation& x,
                              std::uint64_t limit = kDefaultLimit);

// Exact P[every triplet in S is drawn at least once].
double exact_sample_probability(const Instance& inst, const Allocation& x,
                                const std::vector<Triplet>& s,
                                std::uint64_t limit = kDefaultLimit);

}  // namespace nsw::oracle
