#include <vector>

#include <doctest.h>

#include "nsw/maxflow.hpp"

TEST_CASE("single edge max flow") {
  nsw::FlowGraph g(2);
  const int e = g.add_edge(0, 1, 0.5);
  CHECK(g.max_flow(0, 1) == doctest::Approx(0.5));
  CHECK(g.flow(e) == doctest::Approx(0.5));
  CHECK(g.residual(e) == doctest::Approx(0.0));
}

TEST_CASE("diamond network bottleneck") {
  // s=0, a=1, b=2, t=3. Two disjoint paths with caps 1.5 and 0.75.
  nsw::FlowGraph g(4);
  g.add_edge(0, 1, 1.5);
  g.add_edge(1, 3, 2.0);
  g.add_edge(0, 2, 0.75);
  g.add_edge(2, 3, 0.75);
  CHECK(g.max_flow(0, 3) == doctest::Approx(2.25));
}

TEST_CASE("rerouting through a middle edge") {
  // Classic case where flow must cross between the two paths.
  nsw::FlowGraph g(4);
  g.add_edge(0, 1, 1.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(1, 2, 1.0);
  g.add_edge(1, 3, 1.0);
  g.add_edge(2, 3, 1.0);
  CHECK(g.max_flow(0, 3) == doctest::Approx(2.0));
}

TEST_CASE("max flow resets previous state") {
  nsw::FlowGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 1.0);
  CHECK(g.max_flow(0, 2) == doctest::Approx(1.0));
  CHECK(g.max_flow(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("lower bounds: feasible network keeps max flow value") {
  // Two parallel s->t channels via intermediate vertices; one carries a
  // lower bound that a plain max flow would satisfy anyway.
  nsw::FlowGraph g(4);
  const int e1 = g.add_edge(0, 1, 1.0);
  const int e2 = g.add_edge(1, 3, 1.0, 0.5);
  g.add_edge(0, 2, 0.5);
  g.add_edge(2, 3, 0.5);
  const auto res = g.max_flow_with_lower_bounds(0, 3);
  CHECK(res.feasible);
  CHECK(res.value == doctest::Approx(1.5));
  CHECK(g.flow(e2) >= 0.5 - nsw::FlowGraph::kEps);
  CHECK(g.flow(e1) == doctest::Approx(g.flow(e2)));
}

TEST_CASE("lower bounds: binding floor forces flow onto a worse path") {
  // The bounded edge only receives 0.25 from its feeder, so the lower bound
  // decides feasibility.
  nsw::FlowGraph g(4);
  g.add_edge(0, 1, 0.25);
  g.add_edge(1, 3, 1.0, 0.5);
  const auto res = g.max_flow_with_lower_bounds(0, 3);
  CHECK(!res.feasible);
}

TEST_CASE("lower bounds: infeasible when the floor exceeds capacity upstream") {
  nsw::FlowGraph g(3);
  g.add_edge(0, 1, 0.2);
  g.add_edge(1, 2, 1.0, 0.6);
  const auto res = g.max_flow_with_lower_bounds(0, 2);
  CHECK(!res.feasible);
}

TEST_CASE("lower bounds: value matches the unconstrained maximum when slack") {
  // Grid-like market shape: s -> two agents -> two types -> t.
  nsw::FlowGraph g(6);
  g.add_edge(0, 1, 1.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(1, 3, 0.7);
  g.add_edge(1, 4, 0.7);
  g.add_edge(2, 3, 0.7);
  g.add_edge(2, 4, 0.7);
  const int t1 = g.add_edge(3, 5, 1.0, 0.4);
  const int t2 = g.add_edge(4, 5, 1.0, 0.4);
  const auto res = g.max_flow_with_lower_bounds(0, 5);
  CHECK(res.feasible);
  CHECK(res.value == doctest::Approx(2.0));
  CHECK(g.flow(t1) >= 0.4 - nsw::FlowGraph::kEps);
  CHECK(g.flow(t2) >= 0.4 - nsw::FlowGraph::kEps);

  nsw::FlowGraph plain(6);
  plain.add_edge(0, 1, 1.0);
  plain.add_edge(0, 2, 1.0);
  plain.add_edge(1, 3, 0.7);
  plain.add_edge(1, 4, 0.7);
  plain.add_edge(2, 3, 0.7);
  plain.add_edge(2, 4, 0.7);
  plain.add_edge(3, 5, 1.0);
  plain.add_edge(4, 5, 1.0);
  CHECK(plain.max_flow(0, 5) == doctest::Approx(res.value));
}

TEST_CASE("reaches_sink marks the residual sink side") {
  // After saturating the single path, only t itself reaches t.
  nsw::FlowGraph g(3);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 0.5);
  g.max_flow(0, 2);
  const auto reach = g.reaches_sink(2);
  CHECK(reach[2]);
  CHECK(reach[0] == false);  // s never sees t once the cut saturates
  CHECK(reach[1] == false);

  // With slack everywhere, every vertex on a path reaches t.
  nsw::FlowGraph h(3);
  h.add_edge(0, 1, 1.0);
  h.add_edge(1, 2, 5.0);
  h.max_flow(0, 2);
  const auto reach2 = h.reaches_sink(2);
  CHECK(reach2[1]);
  CHECK(reach2[2]);
}
