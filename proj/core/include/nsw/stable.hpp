#pragma once

#include <cstdint>
#include <vector>

#include "nsw/instance.hpp"
#include "nsw/welfare.hpp"

namespace nsw::stable {

// Log-domain evaluation of a positive function with its gradient taken in
// log coordinates: grad[i] = d log f / d log v_i.
struct PolyEval {
  double log_value = 0.0;
  std::vector<double> grad;
};

// p_x(y) = prod_a (sum_i y_i * w_ai) with w_ai = sum_j x_aij u_aij.
// Throws Error(DegenerateInput) naming an agent whose linear form is zero.
PolyEval eval_p(const Instance& inst, const Allocation& x,
                const std::vector<double>& y);

// Companion polynomial: coefficient of t^(K-n) in prod_i (t + w_i/k_i)^{k_i},
// evaluated by sequential convolution of log-magnitude coefficient arrays.
// Throws Error(RelaxationUndefined) when n > K (no such coefficient).
PolyEval eval_q(const Instance& inst, const std::vector<double>& w);

// Reference monomial coefficient of q: for exponent vector kappa with
// sum kappa = n, coeff = prod_i k_i^{-kappa_i} * C(k_i, kappa_i).
// Used only to cross-check eval_q in tests.
double coeff_q(const std::vector<int>& k, const std::vector<int>& kappa);

// Saddle objective in log coordinates:
//   f(y, z) = log p_x(e^y) + log q(alpha .* e^z) - <alpha, y> - <alpha, z>.
// Convex in (y, z); constant along y -> y + c*1 when sum(alpha) = n.
double objective(const Instance& inst, const Allocation& x,
                 const std::vector<double>& alpha, const std::vector<double>& y,
                 const std::vector<double>& z);

struct RelaxOptions {
  double inner_tol = 1e-5;      // stop inner descent at this grad norm
  int inner_max_iter = 400;
  int outer_max_iter = 600;
  double outer_min_gain = 1e-6; // plateau threshold...
  int outer_patience = 50;      // ...held this many consecutive steps
};

struct RelaxationSolution {
  Allocation x;                 // fractional, sum_{a,j} x_aij = k_i
  std::vector<double> alpha;    // on the simplex scaled to sum = n
  std::vector<double> y;
  std::vector<double> z;
  double value = 0.0;           // log of the saddle value; -inf when n > K
  int outer_iterations = 0;
  double inner_residual = 0.0;
  bool converged = false;
};

// Maximizes inf_{y,z} f over x in the relaxed allocation polytope and alpha
// on the scaled simplex by projected supergradient ascent (inner problem
// solved by gradient descent with backtracking, outer gradients by the
// envelope theorem). The value dominates log NSW of every integral
// allocation; tightness beyond the dominance tests is not certified.
RelaxationSolution solve_relaxation(const Instance& inst,
                                    const RelaxOptions& opts = {});

struct SampleOutcome {
  std::vector<std::vector<int>> draws;  // per type, k_i triplet ids (-1 no-op)
  Allocation x;                         // integral, prefix form
  NswValue value;
};

// Per type i, k_i independent categorical draws with P[(a,i,j)] = x_aij/k_i;
// each draw of (a,i,*) hands agent a one more copy of type i. Deterministic
// in (x, seed).
SampleOutcome randomized_round(const Instance& inst, const Allocation& x,
                               std::uint64_t seed);

struct WelfareEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double best_product = 0.0;
  Allocation best;
};

WelfareEstimate estimate_expected_welfare(const Instance& inst,
                                          const Allocation& x,
                                          std::uint64_t trials,
                                          std::uint64_t seed);

// Closed-form lower bound on P[every triplet of S is drawn at least once]:
//   prod_{(a,i,j) in S} (x_aij / k_i) * prod_i e^{-e_S(i)} k_i!/(k_i-e_S(i))!
// Requires |S| = n and e_S(i) <= k_i.
double sampling_lower_bound(const Instance& inst, const Allocation& x,
                            const std::vector<Triplet>& s);

}  // namespace nsw::stable
