#include "nsw/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "nsw/errors.hpp"

namespace nsw {

FlowGraph::FlowGraph(int vertex_count) : adj_(vertex_count) {}

int FlowGraph::add_edge(int from, int to, double cap, double lower) {
  int h = (int)edges_.size();
  edges_.push_back({to, cap, 0.0, lower});
  edges_.push_back({from, 0.0, 0.0, 0.0});
  adj_[from].push_back(h);
  adj_[to].push_back(h + 1);
  return h;
}

double FlowGraph::flow(int edge_handle) const { return edges_[edge_handle].flow; }
double FlowGraph::capacity(int edge_handle) const { return edges_[edge_handle].cap; }
double FlowGraph::lower(int edge_handle) const { return edges_[edge_handle].lower; }
double FlowGraph::residual(int edge_handle) const {
  return edges_[edge_handle].cap - edges_[edge_handle].flow;
}

void FlowGraph::clear_flow() {
  for (Edge& e : edges_) e.flow = 0.0;
}

bool FlowGraph::bfs_levels(int s, int t) {
  level_.assign(adj_.size(), -1);
  std::queue<int> queue;
  level_[s] = 0;
  queue.push(s);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop();
    for (int h : adj_[v]) {
      const Edge& e = edges_[h];
      if (e.cap - e.flow > kEps && level_[e.to] < 0) {
        level_[e.to] = level_[v] + 1;
        queue.push(e.to);
      }
    }
  }
  return level_[t] >= 0;
}

double FlowGraph::dfs_push(int v, int t, double limit) {
  if (v == t) return limit;
  for (int& idx = iter_[v]; idx < (int)adj_[v].size(); ++idx) {
    int h = adj_[v][idx];
    Edge& e = edges_[h];
    double room = e.cap - e.flow;
    if (room > kEps && level_[e.to] == level_[v] + 1) {
      double pushed = dfs_push(e.to, t, std::min(limit, room));
      if (pushed > kEps) {
        e.flow += pushed;
        edges_[h ^ 1].flow -= pushed;
        return pushed;
      }
    }
  }
  return 0.0;
}

namespace {
constexpr double kUnbounded = std::numeric_limits<double>::infinity();
}

double FlowGraph::max_flow(int s, int t) {
  clear_flow();
  double total = 0.0;
  while (bfs_levels(s, t)) {
    iter_.assign(adj_.size(), 0);
    while (true) {
      double pushed = dfs_push(s, t, kUnbounded);
      if (pushed <= kEps) break;
      total += pushed;
    }
  }
  return total;
}

FlowGraph::LbResult FlowGraph::max_flow_with_lower_bounds(int s, int t) {
  clear_flow();
  int n0 = vertex_count();
  std::size_t e0 = edges_.size();

  for (std::size_t h = 0; h < e0; h += 2)
    if (edges_[h].lower > edges_[h].cap + kEps) return {0.0, false};

  // Standard reduction: shift each lower bound out of its edge, balance the
  // resulting vertex excesses through a super source/sink, and close the
  // circulation with a t->s edge.
  std::vector<double> excess(n0, 0.0);
  for (std::size_t h = 0; h < e0; h += 2) {
    double lo = edges_[h].lower;
    if (lo <= 0.0) continue;
    edges_[h].cap -= lo;
    excess[edges_[h ^ 1].to] -= lo;  // tail
    excess[edges_[h].to] += lo;      // head
  }

  int ss = n0;
  int tt = n0 + 1;
  adj_.resize(n0 + 2);
  add_edge(t, s, kUnbounded);
  int ts_handle = (int)e0;
  double need = 0.0;
  for (int v = 0; v < n0; ++v) {
    if (excess[v] > kEps) {
      add_edge(ss, v, excess[v]);
      need += excess[v];
    } else if (excess[v] < -kEps) {
      add_edge(v, tt, -excess[v]);
    }
  }

  double routed = 0.0;
  while (bfs_levels(ss, tt)) {
    iter_.assign(adj_.size(), 0);
    while (true) {
      double pushed = dfs_push(ss, tt, kUnbounded);
      if (pushed <= kEps) break;
      routed += pushed;
    }
  }
  bool feasible = need - routed <= 1e-9 * std::max(1.0, need);
  double base_value = edges_[ts_handle].flow;

  // Drop the auxiliary edges again; handles of the original edges are
  // unaffected because the auxiliary ones were appended last.
  for (int v = 0; v < (int)adj_.size(); ++v) {
    auto& list = adj_[v];
    while (!list.empty() && list.back() >= (int)e0) list.pop_back();
  }
  edges_.resize(e0);
  adj_.resize(n0);

  if (!feasible) {
    for (std::size_t h = 0; h < e0; h += 2) edges_[h].cap += edges_[h].lower;
    return {0.0, false};
  }

  // Augment s->t inside the reduced network, then shift the lower bounds
  // back in. Back edges in the reduced network cannot drive any edge below
  // its bound.
  double extra = 0.0;
  while (bfs_levels(s, t)) {
    iter_.assign(adj_.size(), 0);
    while (true) {
      double pushed = dfs_push(s, t, kUnbounded);
      if (pushed <= kEps) break;
      extra += pushed;
    }
  }

  for (std::size_t h = 0; h < e0; h += 2) {
    double lo = edges_[h].lower;
    edges_[h].cap += lo;
    edges_[h].flow += lo;
    edges_[h ^ 1].flow -= lo;
  }
  return {base_value + extra, true};
}

std::vector<bool> FlowGraph::reaches_sink(int t) const {
  std::vector<bool> seen(adj_.size(), false);
  std::queue<int> queue;
  seen[t] = true;
  queue.push(t);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop();
    for (int h : adj_[v]) {
      // h^1 runs from adj neighbor into v; positive residual there means the
      // neighbor can step toward t through v.
      int from = edges_[h].to;
      const Edge& rev = edges_[h ^ 1];
      if (!seen[from] && rev.cap - rev.flow > kEps) {
        seen[from] = true;
        queue.push(from);
      }
    }
  }
  return seen;
}

}  // namespace nsw
