#pragma once

#include <vector>

#include "nsw/instance.hpp"
#include "nsw/market.hpp"

namespace nsw::rounding {

// Everything here runs on the normalized instance (marginals divided by the
// owner's bang-per-buck), where each agent's equilibrium spending equals the
// utility it buys.

Instance normalize(const Instance& inst, const market::BangPerBuck& b);

// Types priced above one dollar.
std::vector<int> high_price_set(const market::PriceVector& p);

// log of prod_{p_i > 1} p_i^{k_i}; an upper bound on the optimal NSW product
// of the normalized instance at any spending-restricted equilibrium.
double log_upper_bound(const market::PriceVector& p, const std::vector<int>& k);

// One sellable unit of a type: either a whole superior copy owned by one
// agent, or a min(1, p_i)-dollar slice of the active pool shared by several.
struct UnitShare {
  int agent = 0;
  double fraction = 0.0;  // of one copy
  double money = 0.0;     // base dollars
};

struct ItemUnit {
  int type = 0;
  bool superior = false;
  int owner = -1;          // superior units only
  double extra = 0.0;      // owner premium (superior units only)
  double price = 0.0;      // min(1, p_i), filled by build_spending_graph
  std::vector<UnitShare> shares;
  double money() const;
};

// Bipartite agent/unit multigraph; edge weight is base money.
struct SpendingGraph {
  std::vector<ItemUnit> units;
  // edges[agent] -> list of (unit index, money). Kept merged: at most one
  // edge per agent-unit pair.
  std::vector<std::vector<std::pair<int, double>>> edges;
  std::vector<double> unit_price;  // min(1, p_i) capacity; price() of the unit
};

// Splits each type's sold copies into units: one per superior copy, then the
// active pool greedily packed (agents in index order) into slices holding
// min(1, p_i) dollars each. At a verified equilibrium this yields exactly
// k_i - l_i active units for a fully sold type.
SpendingGraph build_spending_graph(const Instance& inst,
                                   const market::PriceVector& p,
                                   const Allocation& x,
                                   const market::SpendingRecord& spending);

// Removes cycles by shifting money around each cycle until an edge empties;
// per-agent and per-unit totals are preserved. The result is a forest.
void break_cycles(SpendingGraph& g);

struct RoundResult {
  Allocation x;                 // integral, prefix form
  std::vector<double> utility;  // on the normalized instance
  double log_product = 0.0;
  bool flagged = false;         // some agent ended with zero utility
};

// Tree rounding: root each tree at its lowest-index agent, hand leaf units
// and cheap units (p_i <= 1/2) to their parent agents, then match every
// remaining unit to one adjacent agent, maximizing the number of agents
// rescued from zero utility first and sum of log utilities second.
RoundResult round_allocation(const Instance& inst,
                             const market::PriceVector& p,
                             const SpendingGraph& forest);

// Linear-market reduction: one single-copy type per unit. A superior unit is
// valued base+premium by its owner alone; an active unit is valued p_i by
// each agent holding a share of it. Unit prices keep the upper bound of the
// original prices exactly.
struct LinearReduction {
  Instance instance;                 // all k = 1
  market::PriceVector unit_price;
  Allocation x;                      // shares reinterpreted on units
  std::vector<int> source_type;      // unit -> original type
};

LinearReduction to_linear_instance(const Instance& inst,
                                   const market::PriceVector& p,
                                   const SpendingGraph& graph);

}  // namespace nsw::rounding
