#pragma once

#include <vector>

namespace nsw {

// Dense-small max-flow on doubles. Networks here have n + m + 2 vertices and
// capacities are snapped to a fixed grid by the caller, so a plain Dinic with
// an absolute zero threshold is exact enough.
class FlowGraph {
 public:
  explicit FlowGraph(int vertex_count);

  // Returns an edge handle; `lower` is a minimum flow requirement honored by
  // max_flow_with_lower_bounds.
  int add_edge(int from, int to, double cap, double lower = 0.0);

  int vertex_count() const { return static_cast<int>(adj_.size()); }

  double flow(int edge_handle) const;
  double capacity(int edge_handle) const;
  double lower(int edge_handle) const;
  double residual(int edge_handle) const;

  // Plain max flow, ignores lower bounds. Resets previous flow.
  double max_flow(int s, int t);

  // Max s-t flow among flows meeting every edge lower bound. Returns
  // {value, feasible}; when infeasible the flow state is unspecified.
  struct LbResult {
    double value = 0.0;
    bool feasible = false;
  };
  LbResult max_flow_with_lower_bounds(int s, int t);

  // Vertices with a residual path to t (computed on the current flow).
  // The complement is the source side of the minimum cut farthest from s.
  std::vector<bool> reaches_sink(int t) const;

  void clear_flow();

  static constexpr double kEps = 1e-12;

 private:
  struct Edge {
    int to;
    double cap;
    double flow;
    double lower;
  };

  bool bfs_levels(int s, int t);
  double dfs_push(int v, int t, double limit);

  std::vector<Edge> edges_;                // paired: e ^ 1 is the reverse
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace nsw
