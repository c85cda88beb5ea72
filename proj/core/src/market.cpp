#include "nsw/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "nsw/errors.hpp"

namespace nsw::market {

Classification classify(const Instance& inst, const PriceVector& p,
                        const BangPerBuck& b) {
  Classification cls;
  cls.cls.resize(inst.n);
  cls.forced_spend.assign(inst.n, 0.0);
  cls.superior_count.assign(inst.m, 0);
  cls.active_count.assign(inst.n, std::vector<int>(inst.m, 0));
  for (int a = 0; a < inst.n; ++a) {
    cls.cls[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) {
      cls.cls[a][i].assign(inst.k[i], ItemClass::Inferior);
      for (int j = 0; j < inst.k[i]; ++j) {
        double u = inst.u[a][i][j];
        ItemClass c;
        if (u <= 0.0) {
          c = ItemClass::Inferior;  // worthless copies are never bought
        } else if (p[i] <= 0.0) {
          c = ItemClass::Superior;  // free copy with positive value
        } else {
          double ratio = u / (b[a] * p[i]);
          if (std::abs(ratio - 1.0) <= kEpsNum)
            c = ItemClass::Active;
          else
            c = ratio > 1.0 ? ItemClass::Superior : ItemClass::Inferior;
        }
        cls.cls[a][i][j] = c;
        if (c == ItemClass::Superior) {
          cls.forced_spend[a] += u / b[a];
          ++cls.superior_count[i];
        } else if (c == ItemClass::Active) {
          ++cls.active_count[a][i];
        }
      }
    }
  }
  return cls;
}

double delta_price(double p, double delta) {
  double q = std::round(p / delta);
  if (std::abs(p - q * delta) <= 1e-12 * std::max(1.0, std::abs(p)))
    return (q + 1.0) * delta;  // already on the grid: step to the next line
  return std::ceil(p / delta) * delta;
}

double delta_capacity(double p, double delta) {
  return std::min(1.0, delta_price(p, delta));
}

MarketNetwork build_network(const Instance& inst, const PriceVector& p,
                            const BangPerBuck& /*b*/, double delta,
                            const Classification& cls) {
  MarketNetwork net;
  int n = inst.n;
  int m = inst.m;
  net.graph = FlowGraph(n + m + 2);
  net.s = 0;
  net.t = n + m + 1;
  net.agent_edge.resize(n);
  net.active_edge.assign(n, std::vector<int>(m, -1));
  net.type_edge.assign(m, -1);
  net.type_lower.assign(m, 0.0);
  for (int a = 0; a < n; ++a) {
    double cap = std::max(0.0, 1.0 - cls.forced_spend[a]);
    net.agent_edge[a] = net.graph.add_edge(net.s, 1 + a, cap);
  }
  for (int i = 0; i < m; ++i) {
    int spare = inst.k[i] - cls.superior_count[i];
    if (p[i] <= 0.0 || spare <= 0) continue;
    double cap = spare * delta_capacity(p[i], delta);
    double lower = spare * std::min(1.0, p[i]);
    net.type_lower[i] = lower;
    net.type_edge[i] = net.graph.add_edge(1 + n + i, net.t, cap, lower);
  }
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < m; ++i) {
      if (cls.active_count[a][i] == 0 || net.type_edge[i] == -1) continue;
      double cap = cls.active_count[a][i] * delta_capacity(p[i], delta);
      net.active_edge[a][i] = net.graph.add_edge(1 + a, 1 + n + i, cap);
    }
  return net;
}

bool solve_network(MarketNetwork& net) {
  auto lb = net.graph.max_flow_with_lower_bounds(net.s, net.t);
  if (!lb.feasible) return false;
  // The lower bounds only pin the distribution; they must not cost value.
  FlowGraph probe = net.graph;
  double plain = probe.max_flow(net.s, net.t);
  return lb.value >= plain - 1e-9 * std::max(1.0, plain);
}

CutSets min_cut_max_t(const Instance& inst, const MarketNetwork& net) {
  auto reach = net.graph.reaches_sink(net.t);
  CutSets cut;
  cut.x_agent.assign(inst.n, false);
  cut.y_type.assign(inst.m, false);
  for (int i = 0; i < inst.m; ++i)
    cut.y_type[i] = net.type_edge[i] != -1 && !reach[1 + inst.n + i];
  for (int a = 0; a < inst.n; ++a) {
    if (reach[1 + a]) continue;
    bool surplus = net.graph.residual(net.agent_edge[a]) > kEpsNum;
    bool into_y = false;
    for (int i = 0; i < inst.m && !into_y; ++i)
      into_y = cut.y_type[i] && net.active_edge[a][i] != -1 &&
               net.graph.flow(net.active_edge[a][i]) > kEpsNum;
    // Agents that neither hold money nor buy from Y gain nothing from a
    // lower rate; scaling them would only inflate premium spending.
    cut.x_agent[a] = surplus || into_y;
  }
  return cut;
}

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::InferiorActivates: return "inferior-activates";
    case EventKind::SuperiorActivates: return "superior-activates";
    case EventKind::CapacityIncrease: return "capacity-increase";
    case EventKind::BudgetExhausted: return "budget-exhausted";
    case EventKind::BandBoundary: return "band-boundary";
    case EventKind::None: return "none";
  }
  return "none";
}

namespace {

constexpr double kGammaTiny = 1e-12;

}  // namespace

Event next_event(const Instance& inst, const PriceVector& p,
                 const BangPerBuck& b, double delta,
                 const Classification& cls, const CutSets& cut) {
  Event best;
  best.gamma = std::numeric_limits<double>::infinity();
  auto consider = [&](EventKind kind, double gamma, Triplet trip, int type,
                      int agent) {
    if (!(gamma > 1.0 + kGammaTiny)) return;
    if (gamma < best.gamma) best = {kind, gamma, trip, type, agent};
  };
  for (int a = 0; a < inst.n; ++a) {
    if (!cut.x_agent[a]) continue;
    // Falling b_a pulls inferior copies outside Y up to the market rate.
    for (int i = 0; i < inst.m; ++i) {
      if (cut.y_type[i] || p[i] <= 0.0) continue;
      for (int j = 0; j < inst.k[i]; ++j) {
        double u = inst.u[a][i][j];
        if (u > 0.0 && cls.cls[a][i][j] == ItemClass::Inferior)
          consider(EventKind::InferiorActivates, b[a] * p[i] / u, {a, i, j},
                   -1, -1);
      }
    }
    // Premium spending scales with gamma and may not pass the budget.
    if (cls.forced_spend[a] > kEpsNum)
      consider(EventKind::BudgetExhausted, 1.0 / cls.forced_spend[a], {}, -1,
               a);
  }
  for (int i = 0; i < inst.m; ++i) {
    if (!cut.y_type[i]) continue;
    // Rising p_i pulls superior copies of unscaled agents down to the rate.
    for (int a = 0; a < inst.n; ++a) {
      if (cut.x_agent[a]) continue;
      for (int j = 0; j < inst.k[i]; ++j)
        if (cls.cls[a][i][j] == ItemClass::Superior)
          consider(EventKind::SuperiorActivates,
                   inst.u[a][i][j] / (b[a] * p[i]), {a, i, j}, -1, -1);
    }
    // Next capacity step of the spending band.
    if (p[i] < 1.0)
      consider(EventKind::CapacityIncrease,
               std::min(delta_price(p[i], delta), 1.0) / p[i], {}, i, -1);
  }
  if (best.kind == EventKind::None)
    throw Error(ErrorCode::MalformedMarketState,
                "no admissible price event although budgets remain unspent");
  return best;
}

double SpendingRecord::agent_total(int a) const {
  double total = 0.0;
  for (std::size_t i = 0; i < base[a].size(); ++i)
    for (std::size_t j = 0; j < base[a][i].size(); ++j)
      total += base[a][i][j] + extra[a][i][j];
  return total;
}

double SpendingRecord::type_base_total(int i) const {
  double total = 0.0;
  for (const auto& agent : base)
    for (double v : agent[i]) total += v;
  return total;
}

namespace {

struct SolvedState {
  Classification cls;
  MarketNetwork net;
  bool feasible = false;
  double surplus = 0.0;
};

bool spending_limits_ok(const Instance& inst, const Classification& cls) {
  for (int a = 0; a < inst.n; ++a)
    if (cls.forced_spend[a] > 1.0 + kEpsBand) return false;
  for (int i = 0; i < inst.m; ++i)
    if (cls.superior_count[i] > inst.k[i]) return false;
  return true;
}

SolvedState solve_state(const Instance& inst, const PriceVector& p,
                        const BangPerBuck& b, double delta) {
  SolvedState st;
  st.cls = classify(inst, p, b);
  if (!spending_limits_ok(inst, st.cls)) return st;
  st.net = build_network(inst, p, b, delta, st.cls);
  st.feasible = solve_network(st.net);
  if (st.feasible)
    for (int a = 0; a < inst.n; ++a)
      st.surplus += st.net.graph.residual(st.net.agent_edge[a]);
  return st;
}

void scale_state(PriceVector& p, BangPerBuck& b, const CutSets& cut,
                 double gamma) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (cut.y_type[i]) p[i] *= gamma;
  for (std::size_t a = 0; a < b.size(); ++a)
    if (cut.x_agent[a]) b[a] /= gamma;
}

std::vector<std::vector<std::vector<double>>> zeros_like(
    const Instance& inst) {
  std::vector<std::vector<std::vector<double>>> z(inst.n);
  for (int a = 0; a < inst.n; ++a) {
    z[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) z[a][i].assign(inst.k[i], 0.0);
  }
  return z;
}

// Reads the allocation out of a solved state. Superior copies are whole
// purchases at base min(1, p) plus premium; active money fills copies at the
// band-top unit price c(p, Delta), so fractions stay in [0, 1] even when an
// agent edge is saturated.
void extract_allocation(const Instance& inst, const PriceVector& p,
                        const BangPerBuck& b, double delta,
                        const SolvedState& st, Allocation& x,
                        SpendingRecord& spending) {
  x = Allocation::zeros(inst);
  x.integral = false;
  spending.base = zeros_like(inst);
  spending.extra = zeros_like(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i) {
      for (int j = 0; j < inst.k[i]; ++j)
        if (st.cls.cls[a][i][j] == ItemClass::Superior) {
          double pb = std::min(1.0, p[i]);
          x.x[a][i][j] = 1.0;
          spending.base[a][i][j] = pb;
          spending.extra[a][i][j] = inst.u[a][i][j] / b[a] - pb;
        }
      int edge = st.net.active_edge[a][i];
      if (edge == -1) continue;
      double money = st.net.graph.flow(edge);
      double c = delta_capacity(p[i], delta);
      for (int j = 0; j < inst.k[i] && money > kEpsNum; ++j) {
        if (st.cls.cls[a][i][j] != ItemClass::Active) continue;
        double take = std::min(c, money);
        x.x[a][i][j] = take / c;
        spending.base[a][i][j] = take;
        money -= take;
      }
    }
}

// Total base money per type must stay inside the Delta band
// [k_i min(1,p_i), k_i c(p_i, Delta)].
double band_violation(const Instance& inst, const PriceVector& p, double delta,
                      const SolvedState& st) {
  double worst = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    if (p[i] <= 0.0) continue;
    double base = st.cls.superior_count[i] * std::min(1.0, p[i]);
    if (st.net.type_edge[i] != -1) base += st.net.graph.flow(st.net.type_edge[i]);
    double lo = inst.k[i] * std::min(1.0, p[i]);
    double hi = inst.k[i] * delta_capacity(p[i], delta);
    worst = std::max(worst, std::max(lo - base, base - hi));
  }
  return worst;
}

}  // namespace

PriceIncreaseResult price_increase(const Instance& inst, PriceVector p,
                                   BangPerBuck b, double delta,
                                   TraceSink* trace, int phase) {
  if ((int)p.size() != inst.m || (int)b.size() != inst.n)
    throw Error(ErrorCode::UsageError, "price/rate vector shape mismatch");
  IterationStats stats;
  const std::uint64_t iteration_limit =
      10000ull * (std::uint64_t)(inst.total_items() + inst.n + inst.m);
  SolvedState st = solve_state(inst, p, b, delta);
  if (!st.feasible)
    throw Error(ErrorCode::MalformedMarketState,
                "starting prices admit no spending plan on this grid");
  while (st.surplus > eps_money(inst.n)) {
    if (stats.iterations >= iteration_limit)
      throw Error(ErrorCode::IterationLimit,
                  "price increase exceeded its iteration budget");
    CutSets cut = min_cut_max_t(inst, st.net);
    bool any_agent = false;
    for (bool v : cut.x_agent) any_agent |= v;
    if (!any_agent)
      throw Error(ErrorCode::MalformedMarketState,
                  "cut holds no agents although budgets remain unspent");
    Event ev = next_event(inst, p, b, delta, st.cls, cut);
    double gamma = ev.gamma;
    EventKind kind = ev.kind;
    auto feasible_at = [&](double g) {
      PriceVector pp = p;
      BangPerBuck bb = b;
      scale_state(pp, bb, cut, g);
      return solve_state(inst, pp, bb, delta).feasible;
    };
    if (!feasible_at(gamma)) {
      // The spending band is monotone between events, so the last feasible
      // scale factor below gamma is a bisection target.
      double lo = 1.0;
      double hi = gamma;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible_at(mid) ? lo : hi) = mid;
      }
      gamma = lo;
      kind = EventKind::BandBoundary;
      if (!(gamma > 1.0 + kGammaTiny)) {
        // Pinned against the band: an active copy of a scaled agent on an
        // unscaled type sits at the top of its tolerance, so any positive
        // step turns it into a forced whole purchase and the remaining
        // copies of that type cannot reach their floor until more structure
        // appears (typically the agent's next copy going active). Walk the
        // upcoming events without committing and jump to the first scale
        // factor whose state carries the band again.
        PriceVector pp = p;
        BangPerBuck bb = b;
        double cursor = 1.0;
        bool landed = false;
        const int leap_limit = 4 * (inst.total_items() + inst.n + inst.m) + 16;
        for (int step = 0; step < leap_limit && !landed; ++step) {
          Classification cc = classify(inst, pp, bb);
          Event hop = next_event(inst, pp, bb, delta, cc, cut);
          scale_state(pp, bb, cut, hop.gamma);
          cursor *= hop.gamma;
          if (solve_state(inst, pp, bb, delta).feasible) {
            gamma = cursor;
            kind = hop.kind;
            landed = true;
          }
        }
        if (!landed)
          throw Error(ErrorCode::MalformedMarketState,
                      "price step collapsed to zero at the spending band");
      }
    }
    if (gamma < 1.0) stats.monotone_ok = false;
    scale_state(p, b, cut, gamma);
    ++stats.iterations;
    switch (kind) {
      case EventKind::InferiorActivates: ++stats.events_inferior; break;
      case EventKind::SuperiorActivates: ++stats.events_superior; break;
      case EventKind::CapacityIncrease: ++stats.events_capacity; break;
      case EventKind::BudgetExhausted: ++stats.events_budget; break;
      case EventKind::BandBoundary: ++stats.events_boundary; break;
      case EventKind::None: break;
    }
    st = solve_state(inst, p, b, delta);
    if (!st.feasible)
      throw Error(ErrorCode::MalformedMarketState,
                  "committed price step lost the spending band");
    double violation = band_violation(inst, p, delta, st);
    stats.max_band_violation = std::max(stats.max_band_violation, violation);
    if (violation > kEpsBand) stats.band_ok = false;
    if (trace)
      trace->push_back({phase, stats.iterations, delta, kind, gamma,
                        st.surplus, p, b});
  }
  PriceIncreaseResult res;
  res.p = std::move(p);
  res.b = std::move(b);
  res.stats = stats;
  extract_allocation(inst, res.p, res.b, delta, st, res.x, res.spending);
  return res;
}

InitState initialize(const Instance& inst, double delta) {
  require_valid(inst);
  // Each unit collects at most one budget's worth of money (base capped at
  // min(1,p), premium only from its single whole buyer), so with fewer units
  // than agents the budgets can never clear.
  if (inst.n > inst.total_items())
    throw Error(ErrorCode::UnsupportedInstance,
                "more agents than items; budgets cannot all be spent");
  for (int a = 0; a < inst.n; ++a)
    if (!inst.values_anything(a))
      throw Error(ErrorCode::UnsupportedInstance,
                  "agent " + std::to_string(a) +
                      " values nothing; its budget can never be spent");
  std::vector<bool> marketed(inst.m, false);
  for (int i = 0; i < inst.m; ++i)
    for (int a = 0; a < inst.n && !marketed[i]; ++a)
      marketed[i] = inst.u[a][i][inst.k[i] - 1] > 0.0;
  for (int i = 0; i < inst.m; ++i) {
    if (marketed[i]) continue;
    // Price stays zero, so every positively valued copy is a forced whole
    // purchase; demand beyond the supply can never clear.
    int demand = 0;
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j)
        if (inst.u[a][i][j] > 0.0) ++demand;
    if (demand > inst.k[i])
      throw Error(ErrorCode::UnsupportedInstance,
                  "type " + std::to_string(i) +
                      " is not priced by anyone yet is over-demanded");
  }
  int anchor = -1;
  for (int a = 0; a < inst.n && anchor == -1; ++a) {
    bool covers = true;
    for (int i = 0; i < inst.m && covers; ++i)
      if (marketed[i]) covers = inst.u[a][i][inst.k[i] - 1] > 0.0;
    if (covers) anchor = a;
  }
  if (anchor == -1)
    throw Error(ErrorCode::UnsupportedInstance,
                "no agent values every marketed type through its last copy");

  auto total_value = [&](int a) {
    double t = 0.0;
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) t += inst.u[a][i][j];
    return t;
  };

  InitState init;
  init.p.assign(inst.m, 0.0);
  init.b.assign(inst.n, 0.0);
  init.b[anchor] = 2.0 * total_value(anchor);
  double p_min = 1.0;
  for (int i = 0; i < inst.m; ++i)
    if (marketed[i]) {
      init.p[i] = inst.u[anchor][i][inst.k[i] - 1] / init.b[anchor];
      p_min = std::min(p_min, init.p[i]);
    }
  // Everyone but the anchor starts priced out of the market: their rate is
  // high enough that no marketed copy reaches it, and forced purchases on
  // zero-priced types stay within half a budget.
  for (int a = 0; a < inst.n; ++a)
    if (a != anchor) init.b[a] = 2.0 * total_value(a) / p_min;

  if (!solve_state(inst, init.p, init.b, delta).feasible)
    throw Error(ErrorCode::MalformedMarketState,
                "ground state admits no spending plan on this grid");
  return init;
}

int default_phase_count(const Instance& inst) {
  int items = inst.total_items();
  double v = std::max(2.0, inst.max_value_ratio());
  return items + (int)std::ceil(std::log2(v)) + 12;
}

EquilibriumResult scaling_algorithm(const Instance& inst,
                                    std::optional<int> phases,
                                    TraceSink* trace) {
  require_valid(inst);
  int items = inst.total_items();
  double delta0 = std::exp2(std::floor(std::log2(1.0 / (2.0 * items))));
  int rounds = phases.value_or(default_phase_count(inst));
  if (rounds <= 0 || rounds > 900)
    throw Error(ErrorCode::UsageError, "phase count out of range");

  InitState init = initialize(inst, delta0);
  PriceVector p = init.p;
  BangPerBuck b = init.b;
  EquilibriumResult res;
  IterationStats agg;
  double prev_delta = delta0;
  double delta = delta0;
  for (int r = 0; r < rounds; ++r) {
    delta = std::ldexp(delta0, -r);
    if (r > 0) {
      SolvedState st = solve_state(inst, p, b, delta);
      if (!st.feasible)
        throw Error(ErrorCode::MalformedMarketState,
                    "halving the grid broke the spending band");
      if (st.surplus > items * prev_delta + kEpsBand)
        agg.surplus_bound_ok = false;
    }
    PriceIncreaseResult pr = price_increase(inst, p, b, delta, trace, r);
    p = pr.p;
    b = pr.b;
    agg.iterations += pr.stats.iterations;
    agg.events_inferior += pr.stats.events_inferior;
    agg.events_superior += pr.stats.events_superior;
    agg.events_capacity += pr.stats.events_capacity;
    agg.events_budget += pr.stats.events_budget;
    agg.events_boundary += pr.stats.events_boundary;
    agg.band_ok = agg.band_ok && pr.stats.band_ok;
    agg.max_band_violation =
        std::max(agg.max_band_violation, pr.stats.max_band_violation);
    agg.monotone_ok = agg.monotone_ok && pr.stats.monotone_ok;
    if (r + 1 == rounds) {
      res.x = std::move(pr.x);
      res.spending = std::move(pr.spending);
    }
    prev_delta = delta;
  }
  res.p = std::move(p);
  res.b = std::move(b);
  res.delta_final = delta;
  res.eps_eq = items * delta;
  res.phases = rounds;
  res.stats = agg;
  return res;
}

std::vector<Violation> verify_equilibrium(const Instance& inst,
                                          const PriceVector& p,
                                          const Allocation& x,
                                          const BangPerBuck& b,
                                          const SpendingRecord& spending,
                                          double eps) {
  std::vector<Violation> out;
  if ((int)p.size() != inst.m || (int)b.size() != inst.n ||
      (int)x.x.size() != inst.n || (int)spending.base.size() != inst.n ||
      (int)spending.extra.size() != inst.n) {
    out.push_back({"equilibrium state has mismatched shapes"});
    return out;
  }
  auto slot = [](int a, int i, int j) {
    std::ostringstream os;
    os << "agent " << a << ", type " << i << ", copy " << j;
    return os.str();
  };
  Classification cls = classify(inst, p, b);
  double tol = eps + kEpsBand;
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) {
        double xv = x.x[a][i][j];
        double base = spending.base[a][i][j];
        double extra = spending.extra[a][i][j];
        double pb = std::min(1.0, p[i]);
        switch (cls.cls[a][i][j]) {
          case ItemClass::Superior: {
            if (std::abs(xv - 1.0) > tol)
              out.push_back({"superior copy not wholly bought at " +
                             slot(a, i, j)});
            double want = inst.u[a][i][j] / b[a] - pb;
            if (std::abs(extra - want * xv) > tol)
              out.push_back({"premium off its forced level at " +
                             slot(a, i, j)});
            break;
          }
          case ItemClass::Active:
            if (xv < -tol || xv > 1.0 + tol)
              out.push_back({"active fraction outside [0,1] at " +
                             slot(a, i, j)});
            if (extra > tol)
              out.push_back({"premium paid on a market-rate copy at " +
                             slot(a, i, j)});
            break;
          case ItemClass::Inferior:
            if (xv > tol)
              out.push_back({"inferior copy bought at " + slot(a, i, j)});
            if (extra > tol)
              out.push_back({"premium paid on an inferior copy at " +
                             slot(a, i, j)});
            break;
        }
        if (std::abs(base - xv * pb) > tol)
          out.push_back({"base spending off the unit price at " +
                         slot(a, i, j)});
      }
  for (int a = 0; a < inst.n; ++a) {
    double total = spending.agent_total(a);
    if (std::abs(total - 1.0) > tol) {
      std::ostringstream os;
      os << "agent " << a << " spends " << total << " instead of 1";
      out.push_back({os.str()});
    }
  }
  for (int i = 0; i < inst.m; ++i) {
    double units = 0.0;
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j) units += x.x[a][i][j];
    double want = units * std::min(1.0, p[i]);
    double got = spending.type_base_total(i);
    if (std::abs(got - want) > tol * std::max(1, inst.k[i])) {
      std::ostringstream os;
      os << "type " << i << " collects base " << got << " for " << units
         << " units at " << std::min(1.0, p[i]);
      out.push_back({os.str()});
    }
  }
  return out;
}

}  // namespace nsw::market
