#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsw/instance.hpp"
#include "nsw/maxflow.hpp"

namespace nsw::market {

// Agents hold one dollar each and buy utility: a base price p_i per copy of
// type i plus, on copies strictly better than the market rate, a personal
// premium. b_a is agent a's utility-per-dollar rate.
using PriceVector = std::vector<double>;
using BangPerBuck = std::vector<double>;

inline constexpr double kEpsNum = 1e-9;     // dimensionless comparisons
inline constexpr double kEpsBand = 1e-7;    // dollar-level band checks

inline double eps_money(int n) { return n * kEpsNum; }

enum class ItemClass : std::uint8_t { Superior, Active, Inferior };

// Classification of every copy slot under (p, b):
//   Superior: u_aij/p_i > b_a  -> the agent must take the whole copy and pays
//             u_aij/b_a (base p_i plus premium q_aij = u_aij/b_a - p_i).
//   Active:   u_aij/p_i = b_a (within kEpsNum, compared as u/(b p) vs 1)
//             -> any x in [0,1] at base price only.
//   Inferior: u_aij/p_i < b_a  -> must not be bought.
// A zero-priced copy with positive marginal is Superior with premium-only
// spending (u_aij/b_a); its base spending is 0.
struct Classification {
  std::vector<std::vector<std::vector<ItemClass>>> cls;  // n x m x k_i
  std::vector<double> forced_spend;   // e_a: premium-inclusive superior money
  std::vector<int> superior_count;    // l_i per type
  std::vector<std::vector<int>> active_count;  // per (a, i)
};

Classification classify(const Instance& inst, const PriceVector& p,
                        const BangPerBuck& b);

// p_i rounded up to the Delta grid; the next multiple when already on it.
double delta_price(double p, double delta);
// Per-copy spending capacity c(p_i, Delta) = min(1, delta_price).
double delta_capacity(double p, double delta);

// Flow network over s -> agents -> types -> t for one (p, b, Delta) state:
//   cap(s, a)  = 1 - e_a                 (money not forced into superiors)
//   cap(a, i)  = active_count(a,i) * c(p_i, Delta)
//   cap(i, t)  = (k_i - l_i) * c(p_i, Delta), with a lower bound of
//                (k_i - l_i) * min(1, p_i) so every maximum flow found is a
//                Delta-allocation, not just budget-maximal.
// Flow units are dollars of base spending on active copies.
struct MarketNetwork {
  FlowGraph graph;
  int s = 0;
  int t = 0;
  std::vector<int> agent_edge;                // handle of (s, a)
  std::vector<std::vector<int>> active_edge;  // handle of (a, i), -1 if none
  std::vector<int> type_edge;                 // handle of (i, t), -1 if cap 0
  std::vector<double> type_lower;             // lower bound on (i, t)

  MarketNetwork() : graph(0) {}
};

MarketNetwork build_network(const Instance& inst, const PriceVector& p,
                            const BangPerBuck& b, double delta,
                            const Classification& cls);

// Runs the lower-bounded max flow and checks it is also an unconstrained
// maximum. Returns false when no Delta-allocation exists under (p, b).
bool solve_network(MarketNetwork& net);

// Minimum cut farthest from s: X/Y are the agents/types with no residual
// path to t, with agents that neither hold surplus nor route flow into Y
// dropped (scaling their b would only force premium overspending).
struct CutSets {
  std::vector<bool> x_agent;
  std::vector<bool> y_type;
};
CutSets min_cut_max_t(const Instance& inst, const MarketNetwork& net);

enum class EventKind : std::uint8_t {
  InferiorActivates,   // a in X, i not in Y: falling b_a meets u_aij/p_i
  SuperiorActivates,   // a not in X, i in Y: rising p_i meets u_aij/b_a
  CapacityIncrease,    // i in Y, p_i < 1 reaches the next Delta multiple
  BudgetExhausted,     // a in X: premium spending e_a * gamma reaches 1
  BandBoundary,        // feasibility clamp found by bisection
  None,
};

const char* event_kind_name(EventKind k);

struct Event {
  EventKind kind = EventKind::None;
  double gamma = 1.0;
  Triplet trip;   // for the first two kinds
  int type = -1;  // CapacityIncrease
  int agent = -1; // BudgetExhausted
};

// Smallest gamma > 1 among all candidate events. Throws
// Error(MalformedMarketState) when no event exists while surplus remains.
Event next_event(const Instance& inst, const PriceVector& p,
                 const BangPerBuck& b, double delta,
                 const Classification& cls, const CutSets& cut);

struct SpendingRecord {
  std::vector<std::vector<std::vector<double>>> base;   // x_aij * p_i
  std::vector<std::vector<std::vector<double>>> extra;  // q_aij on superiors
  double agent_total(int a) const;
  double type_base_total(int i) const;
};

struct IterationStats {
  std::uint64_t iterations = 0;
  std::uint64_t events_inferior = 0;
  std::uint64_t events_superior = 0;
  std::uint64_t events_capacity = 0;
  std::uint64_t events_budget = 0;
  std::uint64_t events_boundary = 0;
  bool band_ok = true;          // Delta-allocation band after every iteration
  double max_band_violation = 0.0;
  bool monotone_ok = true;      // p never decreased, b never increased
  bool surplus_bound_ok = true; // surplus <= K * Delta after each halving
};

// One line per committed event, JSON-encoded by the caller.
struct TraceEntry {
  int phase = 0;
  std::uint64_t iteration = 0;
  double delta = 0.0;
  EventKind kind = EventKind::None;
  double gamma = 1.0;
  double surplus = 0.0;
  PriceVector p;
  BangPerBuck b;
};

using TraceSink = std::vector<TraceEntry>;

struct PriceIncreaseResult {
  PriceVector p;
  BangPerBuck b;
  Allocation x;
  SpendingRecord spending;
  IterationStats stats;
};

// Raises prices of under-sold types (and lowers the bang-per-buck of the
// agents holding unspent money) until every budget is spent, maintaining a
// Delta-allocation throughout. Precondition: (p, b) supports one.
PriceIncreaseResult price_increase(const Instance& inst, PriceVector p,
                                   BangPerBuck b, double delta,
                                   TraceSink* trace = nullptr, int phase = 0);

struct InitState {
  PriceVector p;
  BangPerBuck b;
};

// Ground state: one anchor agent holds active-or-better demand on every
// positively priced type at prices u_{a,i,k_i}/b_a with b_a = 2 * sum(u_a),
// so it spends at most half a dollar; everyone else is priced out. Types
// nobody values to the last copy stay at price zero, which requires their
// total positive-copy demand to fit the supply. Throws
// Error(UnsupportedInstance) when no such anchor structure exists.
InitState initialize(const Instance& inst, double delta);

struct EquilibriumResult {
  PriceVector p;
  BangPerBuck b;
  Allocation x;
  SpendingRecord spending;
  double delta_final = 0.0;
  double eps_eq = 0.0;          // K * delta_final
  int phases = 0;
  IterationStats stats;
};

// Halve Delta, re-run price_increase, repeat; the phase count default follows
// the scaling schedule K + log2(V) + slack and may be overridden.
EquilibriumResult scaling_algorithm(const Instance& inst,
                                    std::optional<int> phases = std::nullopt,
                                    TraceSink* trace = nullptr);

int default_phase_count(const Instance& inst);

// Spending-restricted equilibrium checks at tolerance eps:
//  1. spending is admissible for (p, b) (class-consistent per copy slot),
//  2. every budget is exactly spent,
//  3. base spending per produced item unit equals min(p_i, 1).
// Returns the empty vector on success.
std::vector<Violation> verify_equilibrium(const Instance& inst,
                                          const PriceVector& p,
                                          const Allocation& x,
                                          const BangPerBuck& b,
                                          const SpendingRecord& spending,
                                          double eps);

}  // namespace nsw::market
