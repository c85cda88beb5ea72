#include "nsw/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsw/errors.hpp"
#include "nsw/welfare.hpp"

namespace nsw::rounding {
namespace {

constexpr double kEps = 1e-12;

// A genuine partial unit at the tail of a type's active pool holds nearly a
// full price quantum; anything this small relative to the unit price is band
// tolerance noise and gets folded into the previous unit.
constexpr double kTrailingFrac = 0.005;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double ItemUnit::money() const {
  double total = 0.0;
  for (const UnitShare& s : shares) total += s.money;
  return total;
}

Instance normalize(const Instance& inst, const market::BangPerBuck& b) {
  require_valid(inst);
  if (static_cast<int>(b.size()) != inst.n)
    throw Error(ErrorCode::UsageError, "bang-per-buck vector size mismatch");
  for (double v : b)
    if (!std::isfinite(v) || v <= 0.0)
      throw Error(ErrorCode::UsageError,
                  "bang-per-buck entries must be positive and finite");
  Instance out = inst;
  for (int a = 0; a < inst.n; ++a)
    for (auto& row : out.u[a])
      for (double& v : row) v /= b[a];
  return out;
}

std::vector<int> high_price_set(const market::PriceVector& p) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(p.size()); ++i)
    if (p[i] > 1.0) out.push_back(i);
  return out;
}

double log_upper_bound(const market::PriceVector& p, const std::vector<int>& k) {
  if (p.size() != k.size())
    throw Error(ErrorCode::UsageError, "price/supply vector size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 1.0) total += k[i] * std::log(p[i]);
  return total;
}

SpendingGraph build_spending_graph(const Instance& inst,
                                   const market::PriceVector& p,
                                   const Allocation& x,
                                   const market::SpendingRecord& spending) {
  require_valid(inst);
  if (static_cast<int>(p.size()) != inst.m)
    throw Error(ErrorCode::UsageError, "price vector size mismatch");

  SpendingGraph g;
  g.edges.assign(inst.n, {});

  for (int i = 0; i < inst.m; ++i) {
    const double beta = std::min(1.0, p[i]);

    // Superior copies first, one unit per copy, owned outright.
    for (int a = 0; a < inst.n; ++a) {
      for (int j = 0; j < inst.k[i]; ++j) {
        if (spending.extra[a][i][j] <= market::kEpsNum) continue;
        ItemUnit unit;
        unit.type = i;
        unit.superior = true;
        unit.owner = a;
        unit.extra = spending.extra[a][i][j];
        unit.price = beta;
        unit.shares.push_back({a, x.x[a][i][j], spending.base[a][i][j]});
        g.units.push_back(std::move(unit));
      }
    }

    if (beta <= 0.0) continue;

    // Active pool: contributions in (agent, copy) order, packed greedily into
    // beta-dollar slices. An agent may span a slice boundary; within a slice
    // its pieces are merged into one share.
    const size_t first_active = g.units.size();
    ItemUnit open;
    open.type = i;
    open.price = beta;
    double room = beta;
    bool has_open = false;

    auto close_open = [&]() {
      if (!has_open) return;
      g.units.push_back(std::move(open));
      open = ItemUnit{};
      open.type = i;
      open.price = beta;
      room = beta;
      has_open = false;
    };
    auto add_share = [&](int agent, double take) {
      for (UnitShare& s : open.shares) {
        if (s.agent == agent) {
          s.money += take;
          s.fraction += take / beta;
          return;
        }
      }
      open.shares.push_back({agent, take / beta, take});
    };

    for (int a = 0; a < inst.n; ++a) {
      for (int j = 0; j < inst.k[i]; ++j) {
        if (spending.extra[a][i][j] > market::kEpsNum) continue;
        double money = spending.base[a][i][j];
        while (money > market::kEpsNum) {
          const double take = std::min(money, room);
          add_share(a, take);
          has_open = true;
          money -= take;
          room -= take;
          if (room <= market::kEpsNum) close_open();
        }
      }
    }
    if (has_open) {
      // Fold a tolerance-sized tail into the previous slice of this type.
      if (beta - room <= kTrailingFrac * beta && g.units.size() > first_active) {
        ItemUnit& prev = g.units.back();
        for (const UnitShare& s : open.shares) {
          bool merged = false;
          for (UnitShare& t : prev.shares) {
            if (t.agent == s.agent) {
              t.money += s.money;
              t.fraction += s.fraction;
              merged = true;
              break;
            }
          }
          if (!merged) prev.shares.push_back(s);
        }
        has_open = false;
        open = ItemUnit{};
      } else {
        close_open();
      }
    }
  }

  g.unit_price.resize(g.units.size());
  for (size_t u = 0; u < g.units.size(); ++u) {
    g.unit_price[u] = g.units[u].price;
    for (const UnitShare& s : g.units[u].shares)
      g.edges[s.agent].push_back({static_cast<int>(u), s.money});
  }
  return g;
}

void break_cycles(SpendingGraph& g) {
  const int n = static_cast<int>(g.edges.size());
  const int nu = static_cast<int>(g.units.size());

  struct FlatEdge {
    int agent;
    int unit;
    double money;
    bool alive;
  };
  std::vector<FlatEdge> es;
  for (int a = 0; a < n; ++a)
    for (const auto& [u, money] : g.edges[a])
      es.push_back({a, u, money, true});

  // Vertices: agents [0, n), units [n, n + nu).
  const int nv = n + nu;
  std::vector<std::vector<int>> adj(nv);
  auto rebuild_adj = [&]() {
    for (auto& lst : adj) lst.clear();
    for (int e = 0; e < static_cast<int>(es.size()); ++e) {
      if (!es[e].alive) continue;
      adj[es[e].agent].push_back(e);
      adj[n + es[e].unit].push_back(e);
    }
  };

  // Money shifts around one cycle until an edge empties, so each pass kills
  // at least one edge and the loop terminates.
  while (true) {
    rebuild_adj();

    std::vector<int> state(nv, 0);  // 0 fresh, 1 on stack, 2 done
    std::vector<int> parent_edge(nv, -1);
    std::vector<int> cycle;  // edge ids, in cycle order

    for (int start = 0; start < nv && cycle.empty(); ++start) {
      if (state[start] != 0) continue;
      struct Frame {
        int v;
        size_t next;
      };
      std::vector<Frame> stack{{start, 0}};
      state[start] = 1;
      while (!stack.empty() && cycle.empty()) {
        Frame& fr = stack.back();
        if (fr.next >= adj[fr.v].size()) {
          state[fr.v] = 2;
          stack.pop_back();
          continue;
        }
        const int e = adj[fr.v][fr.next++];
        if (e == parent_edge[fr.v]) continue;
        const FlatEdge& fe = es[e];
        const int w = (fr.v < n) ? n + fe.unit : fe.agent;
        if (state[w] == 0) {
          state[w] = 1;
          parent_edge[w] = e;
          stack.push_back({w, 0});
        } else if (state[w] == 1) {
          cycle.push_back(e);
          int v = fr.v;
          while (v != w) {
            const int pe = parent_edge[v];
            cycle.push_back(pe);
            const FlatEdge& pf = es[pe];
            v = (v < n) ? n + pf.unit : pf.agent;
          }
        }
      }
    }
    if (cycle.empty()) break;

    double min_even = std::numeric_limits<double>::infinity();
    double min_odd = min_even;
    for (size_t idx = 0; idx < cycle.size(); ++idx) {
      const double money = es[cycle[idx]].money;
      ((idx % 2 == 0) ? min_even : min_odd) = std::min((idx % 2 == 0) ? min_even : min_odd, money);
    }
    const int parity = (min_even <= min_odd) ? 0 : 1;
    const double delta = std::min(min_even, min_odd);
    for (size_t idx = 0; idx < cycle.size(); ++idx) {
      FlatEdge& fe = es[cycle[idx]];
      fe.money += (static_cast<int>(idx % 2) == parity) ? -delta : delta;
      if (fe.money <= kEps) {
        fe.money = 0.0;
        fe.alive = false;
      }
    }
  }

  // Rebuild the merged edge lists and the active units' shares from the
  // surviving edges. Superior units keep their original share (their single
  // edge has degree one and can never sit on a cycle).
  std::vector<std::vector<int>> unit_edges(nu);
  for (auto& lst : g.edges) lst.clear();
  std::vector<int> order(es.size());
  for (size_t e = 0; e < es.size(); ++e) order[e] = static_cast<int>(e);
  std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    if (es[lhs].agent != es[rhs].agent) return es[lhs].agent < es[rhs].agent;
    return es[lhs].unit < es[rhs].unit;
  });
  for (int e : order) {
    if (!es[e].alive) continue;
    g.edges[es[e].agent].push_back({es[e].unit, es[e].money});
    unit_edges[es[e].unit].push_back(e);
  }
  for (int u = 0; u < nu; ++u) {
    ItemUnit& unit = g.units[u];
    if (unit.superior) continue;
    unit.shares.clear();
    for (int e : unit_edges[u]) {
      const double frac = (unit.price > 0.0) ? es[e].money / unit.price : 0.0;
      unit.shares.push_back({es[e].agent, frac, es[e].money});
    }
    std::sort(unit.shares.begin(), unit.shares.end(),
              [](const UnitShare& lhs, const UnitShare& rhs) { return lhs.agent < rhs.agent; });
  }
}

RoundResult round_allocation(const Instance& inst,
                             const market::PriceVector& p,
                             const SpendingGraph& forest) {
  require_valid(inst);
  const int n = inst.n;
  const int nu = static_cast<int>(forest.units.size());
  const int nv = n + nu;

  std::vector<std::vector<int>> adj(nv);  // agents [0, n), units [n, n + nu)
  for (int a = 0; a < n; ++a)
    for (const auto& [u, money] : forest.edges[a]) {
      adj[a].push_back(n + u);
      adj[n + u].push_back(a);
    }
  for (int u = 0; u < nu; ++u)
    if (adj[n + u].empty() && forest.units[u].superior && forest.units[u].owner >= 0) {
      adj[n + u].push_back(forest.units[u].owner);
      adj[forest.units[u].owner].push_back(n + u);
    }

  std::vector<std::vector<int>> counts(n, std::vector<int>(inst.m, 0));
  std::vector<int> type_given(inst.m, 0);
  auto give = [&](int agent, int type) {
    if (type_given[type] >= inst.k[type]) return;
    if (counts[agent][type] >= inst.k[type]) return;
    ++counts[agent][type];
    ++type_given[type];
  };

  std::vector<int> parent(nv, -1);
  std::vector<char> visited(nv, 0);

  for (int root = 0; root < n; ++root) {
    if (visited[root]) continue;
    // BFS one tree; roots are the lowest-index agent of each component.
    std::vector<int> bfs{root};
    visited[root] = 1;
    parent[root] = -1;
    for (size_t head = 0; head < bfs.size(); ++head) {
      const int v = bfs[head];
      for (int w : adj[v]) {
        if (visited[w]) continue;
        visited[w] = 1;
        parent[w] = v;
        bfs.push_back(w);
      }
    }

    std::vector<int> comp_agents;
    struct Pending {
      int unit;                     // unit index
      std::vector<int> candidates;  // adjacent agents, children first
    };
    std::vector<Pending> pending;

    for (int v : bfs) {
      if (v < n) {
        comp_agents.push_back(v);
        continue;
      }
      const int u = v - n;
      const int par = parent[v];  // parent agent (v != root since root is an agent)
      std::vector<int> child_agents;
      for (int w : adj[v])
        if (w != par) child_agents.push_back(w);
      const bool cheap = p[forest.units[u].type] <= 0.5 + kEps;
      if (child_agents.empty() || cheap) {
        give(par, forest.units[u].type);
        continue;
      }
      std::vector<int> cand = child_agents;
      if (par >= 0) cand.push_back(par);
      pending.push_back({u, std::move(cand)});
    }

    if (pending.empty()) continue;

    // Match each expensive internal unit to one adjacent agent, distinct
    // agents across units. Assigning every unit to one of its child agents is
    // always conflict-free (each agent has a single parent unit), so a full
    // assignment exists; the search just picks the best one.
    std::sort(pending.begin(), pending.end(),
              [](const Pending& lhs, const Pending& rhs) { return lhs.unit < rhs.unit; });

    const size_t limit = 200000;
    size_t leaves = 0;
    std::vector<int> assign(pending.size(), -1);
    std::vector<int> best_assign;
    int best_rescued = -1;
    double best_logsum = kNegInf;
    std::vector<char> used(n, 0);

    auto score_current = [&]() {
      std::vector<std::vector<int>> local = counts;
      std::vector<int> local_given = type_given;
      for (size_t idx = 0; idx < pending.size(); ++idx) {
        const int agent = assign[idx];
        const int type = forest.units[pending[idx].unit].type;
        if (local_given[type] >= inst.k[type]) continue;
        if (local[agent][type] >= inst.k[type]) continue;
        ++local[agent][type];
        ++local_given[type];
      }
      int rescued = 0;
      double logsum = 0.0;
      for (int a : comp_agents) {
        double util = 0.0;
        for (int i = 0; i < inst.m; ++i) util += inst.prefix_utility(a, i, local[a][i]);
        if (util > 0.0) {
          ++rescued;
          logsum += std::log(util);
        }
      }
      if (rescued > best_rescued ||
          (rescued == best_rescued && logsum > best_logsum + 1e-12)) {
        best_rescued = rescued;
        best_logsum = logsum;
        best_assign.assign(assign.begin(), assign.end());
      }
    };

    std::function<void(size_t)> dfs = [&](size_t idx) {
      if (leaves >= limit) return;
      if (idx == pending.size()) {
        ++leaves;
        score_current();
        return;
      }
      for (int agent : pending[idx].candidates) {
        if (used[agent]) continue;
        used[agent] = 1;
        assign[idx] = agent;
        dfs(idx + 1);
        used[agent] = 0;
        if (leaves >= limit) return;
      }
    };
    dfs(0);

    if (best_assign.empty()) {
      // Search never completed an assignment (only possible under the leaf
      // cap); fall back to the canonical child-first matching.
      best_assign.assign(pending.size(), -1);
      std::fill(used.begin(), used.end(), 0);
      for (size_t idx = 0; idx < pending.size(); ++idx) {
        for (int agent : pending[idx].candidates) {
          if (used[agent]) continue;
          used[agent] = 1;
          best_assign[idx] = agent;
          break;
        }
        if (best_assign[idx] < 0) best_assign[idx] = pending[idx].candidates.front();
      }
    }
    for (size_t idx = 0; idx < pending.size(); ++idx)
      give(best_assign[idx], forest.units[pending[idx].unit].type);
  }

  RoundResult out;
  out.utility.assign(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < inst.m; ++i)
      out.utility[a] += inst.prefix_utility(a, i, counts[a][i]);
  out.x = allocation_from_counts(inst, counts);
  out.log_product = 0.0;
  for (int a = 0; a < n; ++a) {
    if (out.utility[a] > 0.0) {
      out.log_product += std::log(out.utility[a]);
    } else {
      out.log_product = kNegInf;
      out.flagged = true;
    }
  }
  return out;
}

LinearReduction to_linear_instance(const Instance& inst,
                                   const market::PriceVector& p,
                                   const SpendingGraph& graph) {
  require_valid(inst);
  const int nu = static_cast<int>(graph.units.size());

  LinearReduction red;
  red.instance.n = inst.n;
  red.instance.m = nu;
  red.instance.k.assign(nu, 1);
  red.instance.u.assign(inst.n, std::vector<std::vector<double>>(nu, {0.0}));
  red.unit_price.assign(nu, 0.0);
  red.source_type.assign(nu, 0);
  red.x.x.assign(inst.n, std::vector<std::vector<double>>(nu, {0.0}));
  red.x.integral = false;

  for (int u = 0; u < nu; ++u) {
    const ItemUnit& unit = graph.units[u];
    const int i = unit.type;
    red.source_type[u] = i;
    red.unit_price[u] = p[i];
    if (unit.superior) {
      red.instance.u[unit.owner][u][0] = unit.price + unit.extra;
      red.x.x[unit.owner][u][0] =
          unit.shares.empty() ? 1.0 : std::min(1.0, unit.shares.front().fraction);
    } else {
      for (const UnitShare& s : unit.shares) {
        red.instance.u[s.agent][u][0] = p[i];
        red.x.x[s.agent][u][0] = std::min(1.0, s.fraction);
      }
    }
  }
  return red;
}

}  // namespace nsw::rounding
