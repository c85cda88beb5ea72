#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "nsw/errors.hpp"
#include "nsw/generate.hpp"
#include "nsw/market.hpp"
#include "nsw/rng.hpp"
#include "nsw/rounding.hpp"
#include "nsw/welfare.hpp"

namespace {

nsw::Instance make_instance(int n, std::vector<int> k,
                            std::vector<std::vector<std::vector<double>>> u) {
  nsw::Instance inst;
  inst.n = n;
  inst.m = static_cast<int>(k.size());
  inst.k = std::move(k);
  inst.u = std::move(u);
  return inst;
}

nsw::market::SpendingRecord zero_spending(const nsw::Instance& inst) {
  nsw::market::SpendingRecord s;
  s.base.resize(inst.n);
  s.extra.resize(inst.n);
  for (int a = 0; a < inst.n; ++a) {
    s.base[a].resize(inst.m);
    s.extra[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) {
      s.base[a][i].assign(inst.k[i], 0.0);
      s.extra[a][i].assign(inst.k[i], 0.0);
    }
  }
  return s;
}

nsw::Allocation zero_allocation(const nsw::Instance& inst) {
  auto x = nsw::Allocation::zeros(inst);
  x.integral = false;  // callers fill fractional shares
  return x;
}

double agent_edge_total(const nsw::rounding::SpendingGraph& g, int a) {
  double t = 0.0;
  for (const auto& [unit, money] : g.edges[a]) {
    (void)unit;
    t += money;
  }
  return t;
}

bool is_forest(const nsw::rounding::SpendingGraph& g) {
  const int n = static_cast<int>(g.edges.size());
  const int total = n + static_cast<int>(g.units.size());
  std::vector<int> parent(total);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (int a = 0; a < n; ++a) {
    for (const auto& [unit, money] : g.edges[a]) {
      (void)money;
      int ra = find(a), ru = find(n + unit);
      if (ra == ru) return false;
      parent[ra] = ru;
    }
  }
  return true;
}

nsw::Instance suite_instance(int n, int m, std::uint64_t seed) {
  nsw::GenerateParams gp;
  gp.seed = seed;
  gp.n = n;
  gp.m = m;
  nsw::Instance inst = nsw::generate(gp);
  for (int tries = 0; inst.total_items() < n && tries < 64; ++tries) {
    gp.seed = nsw::Rng::derive(seed, 1000 + tries);
    inst = nsw::generate(gp);
  }
  REQUIRE(inst.total_items() >= n);
  return inst;
}

}  // namespace

TEST_CASE("normalize divides marginals by bang-per-buck") {
  const auto inst =
      make_instance(2, {2, 1}, {{{4, 2}, {6}}, {{1, 1}, {2}}});
  const auto norm = nsw::rounding::normalize(inst, {2.0, 4.0});
  CHECK(norm.u[0][0][0] == doctest::Approx(2.0));
  CHECK(norm.u[0][0][1] == doctest::Approx(1.0));
  CHECK(norm.u[0][1][0] == doctest::Approx(3.0));
  CHECK(norm.u[1][0][0] == doctest::Approx(0.25));
  CHECK(norm.u[1][1][0] == doctest::Approx(0.5));

  try {
    nsw::rounding::normalize(inst, {2.0});
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::UsageError);
  }
  try {
    nsw::rounding::normalize(inst, {2.0, 0.0});
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::UsageError);
  }
}

TEST_CASE("high prices and the welfare upper bound") {
  const nsw::market::PriceVector p{2.0, 0.5, 1.5};
  const std::vector<int> k{1, 2, 3};
  CHECK(nsw::rounding::high_price_set(p) == std::vector<int>{0, 2});
  CHECK(nsw::rounding::log_upper_bound(p, k) ==
        doctest::Approx(std::log(2.0) + 3 * std::log(1.5)));
  CHECK(nsw::rounding::high_price_set({1.0, 0.2}).empty());
  CHECK(nsw::rounding::log_upper_bound({1.0, 0.2}, {3, 3}) == 0.0);
}

TEST_CASE("active pool packs beta-dollar units in agent order") {
  const auto inst = make_instance(2, {2}, {{{9, 9}}, {{9, 9}}});
  auto spending = zero_spending(inst);
  auto x = zero_allocation(inst);
  spending.base[0][0][0] = 0.5;
  spending.base[1][0][0] = 0.8;
  spending.base[1][0][1] = 0.3;
  x.x[0][0][0] = 0.5 / 0.8;
  x.x[1][0][0] = 1.0;
  x.x[1][0][1] = 0.3 / 0.8;

  const auto g = nsw::rounding::build_spending_graph(inst, {0.8}, x, spending);
  REQUIRE(g.units.size() == 2);
  CHECK(g.unit_price[0] == doctest::Approx(0.8));
  CHECK(g.unit_price[1] == doctest::Approx(0.8));
  CHECK(!g.units[0].superior);

  REQUIRE(g.units[0].shares.size() == 2);
  CHECK(g.units[0].shares[0].agent == 0);
  CHECK(g.units[0].shares[0].money == doctest::Approx(0.5));
  CHECK(g.units[0].shares[0].fraction == doctest::Approx(0.625));
  CHECK(g.units[0].shares[1].agent == 1);
  CHECK(g.units[0].shares[1].money == doctest::Approx(0.3));
  CHECK(g.units[0].shares[1].fraction == doctest::Approx(0.375));

  // Agent 1 spans the slice boundary; its two pieces in the second unit
  // merge into a single full share.
  REQUIRE(g.units[1].shares.size() == 1);
  CHECK(g.units[1].shares[0].agent == 1);
  CHECK(g.units[1].shares[0].money == doctest::Approx(0.8));
  CHECK(g.units[1].shares[0].fraction == doctest::Approx(1.0));

  REQUIRE(g.edges[0].size() == 1);
  CHECK(g.edges[0][0].first == 0);
  CHECK(g.edges[0][0].second == doctest::Approx(0.5));
  REQUIRE(g.edges[1].size() == 2);
  CHECK(g.edges[1][0].second == doctest::Approx(0.3));
  CHECK(g.edges[1][1].second == doctest::Approx(0.8));
}

TEST_CASE("superior copies become owned units") {
  const auto inst = make_instance(1, {1}, {{{5}}});
  auto spending = zero_spending(inst);
  auto x = zero_allocation(inst);
  spending.base[0][0][0] = 0.6;
  spending.extra[0][0][0] = 0.4;
  x.x[0][0][0] = 1.0;

  const auto g = nsw::rounding::build_spending_graph(inst, {0.6}, x, spending);
  REQUIRE(g.units.size() == 1);
  CHECK(g.units[0].superior);
  CHECK(g.units[0].owner == 0);
  CHECK(g.units[0].extra == doctest::Approx(0.4));
  CHECK(g.units[0].price == doctest::Approx(0.6));
  CHECK(g.units[0].money() == doctest::Approx(0.6));
  REQUIRE(g.units[0].shares.size() == 1);
  CHECK(g.units[0].shares[0].fraction == doctest::Approx(1.0));
}

TEST_CASE("break_cycles empties an edge and keeps all totals") {
  const auto inst = make_instance(2, {1, 1}, {{{9}, {9}}, {{9}, {9}}});
  auto spending = zero_spending(inst);
  auto x = zero_allocation(inst);
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) {
      spending.base[a][i][0] = 0.4;
      x.x[a][i][0] = 0.5;
    }

  auto g = nsw::rounding::build_spending_graph(inst, {0.8, 0.8}, x, spending);
  REQUIRE(g.units.size() == 2);
  REQUIRE(!is_forest(g));  // a0-u0-a1-u1-a0 is a four-cycle

  const double a0_before = agent_edge_total(g, 0);
  const double a1_before = agent_edge_total(g, 1);
  const double u0_before = g.units[0].money();
  const double u1_before = g.units[1].money();

  nsw::rounding::break_cycles(g);

  CHECK(is_forest(g));
  CHECK(agent_edge_total(g, 0) == doctest::Approx(a0_before).epsilon(1e-9));
  CHECK(agent_edge_total(g, 1) == doctest::Approx(a1_before).epsilon(1e-9));
  CHECK(g.units[0].money() == doctest::Approx(u0_before).epsilon(1e-9));
  CHECK(g.units[1].money() == doctest::Approx(u1_before).epsilon(1e-9));
  size_t edge_count = g.edges[0].size() + g.edges[1].size();
  CHECK(edge_count <= 3);
}

TEST_CASE("leaf units go to their adjacent agent") {
  const auto inst = make_instance(2, {1, 1}, {{{2}, {3}}, {{4}, {5}}});
  auto spending = zero_spending(inst);
  auto x = zero_allocation(inst);
  spending.base[1][0][0] = 0.8;
  x.x[1][0][0] = 1.0;
  spending.base[0][1][0] = 0.8;
  x.x[0][1][0] = 1.0;

  auto g = nsw::rounding::build_spending_graph(inst, {0.8, 0.8}, x, spending);
  const auto r = nsw::rounding::round_allocation(inst, {0.8, 0.8}, g);
  CHECK(r.x.x[1][0][0] == doctest::Approx(1.0));
  CHECK(r.x.x[0][1][0] == doctest::Approx(1.0));
  CHECK(r.utility[0] == doctest::Approx(3.0));
  CHECK(r.utility[1] == doctest::Approx(4.0));
  CHECK(r.log_product == doctest::Approx(std::log(12.0)));
  CHECK(!r.flagged);
}

TEST_CASE("expensive shared units rescue the agent that needs them") {
  const auto inst = make_instance(2, {1, 1}, {{{10}, {1}}, {{1}, {7}}});
  auto spending = zero_spending(inst);
  auto x = zero_allocation(inst);
  // Type 0 is split between both agents; type 1 is held by agent 0 alone.
  spending.base[0][0][0] = 0.4;
  spending.base[1][0][0] = 0.4;
  x.x[0][0][0] = 0.5;
  x.x[1][0][0] = 0.5;
  spending.base[0][1][0] = 0.4;
  x.x[0][1][0] = 1.0;

  auto g = nsw::rounding::build_spending_graph(inst, {0.8, 0.4}, x, spending);
  const auto r = nsw::rounding::round_allocation(inst, {0.8, 0.4}, g);
  // The cheap type-1 unit goes to agent 0; the contested type-0 unit must go
  // to agent 1, the only assignment leaving nobody at zero.
  CHECK(r.x.x[0][1][0] == doctest::Approx(1.0));
  CHECK(r.x.x[1][0][0] == doctest::Approx(1.0));
  CHECK(r.utility[0] == doctest::Approx(1.0));
  CHECK(r.utility[1] == doctest::Approx(1.0));
  CHECK(r.log_product == doctest::Approx(0.0));
  CHECK(!r.flagged);
}

TEST_CASE("linear reduction keeps values and the upper bound") {
  SUBCASE("expensive active type") {
    const auto inst = make_instance(2, {2}, {{{2, 2}}, {{2, 2}}});
    auto spending = zero_spending(inst);
    auto x = zero_allocation(inst);
    spending.base[0][0][0] = 1.0;
    spending.base[1][0][0] = 1.0;
    x.x[0][0][0] = 1.0 / 1.5;
    x.x[1][0][0] = 1.0 / 1.5;

    auto g = nsw::rounding::build_spending_graph(inst, {1.5}, x, spending);
    REQUIRE(g.units.size() == 2);
    const auto red = nsw::rounding::to_linear_instance(inst, {1.5}, g);
    CHECK(red.instance.n == 2);
    CHECK(red.instance.m == 2);
    CHECK(red.instance.k == std::vector<int>{1, 1});
    CHECK(red.unit_price[0] == 1.5);
    CHECK(red.unit_price[1] == 1.5);
    CHECK(red.source_type == std::vector<int>{0, 0});
    CHECK(red.instance.u[0][0][0] == doctest::Approx(1.5));
    CHECK(red.instance.u[1][1][0] == doctest::Approx(1.5));
    CHECK(red.instance.u[1][0][0] == 0.0);
    CHECK(red.x.x[0][0][0] == doctest::Approx(1.0));
    CHECK(nsw::rounding::log_upper_bound(red.unit_price, red.instance.k) ==
          doctest::Approx(nsw::rounding::log_upper_bound({1.5}, inst.k)));
    CHECK(nsw::validate(red.instance).empty());
  }
  SUBCASE("superior unit keeps base plus premium") {
    const auto inst = make_instance(1, {1}, {{{5}}});
    auto spending = zero_spending(inst);
    auto x = zero_allocation(inst);
    spending.base[0][0][0] = 0.6;
    spending.extra[0][0][0] = 0.4;
    x.x[0][0][0] = 1.0;
    auto g = nsw::rounding::build_spending_graph(inst, {0.6}, x, spending);
    const auto red = nsw::rounding::to_linear_instance(inst, {0.6}, g);
    REQUIRE(red.instance.m == 1);
    CHECK(red.instance.u[0][0][0] == doctest::Approx(1.0));
    CHECK(red.unit_price[0] == doctest::Approx(0.6));
    CHECK(red.x.x[0][0][0] == doctest::Approx(1.0));
  }
}

TEST_CASE("market to rounding chain on generated instances") {
  int idx = 0;
  for (int n = 1; n <= 3; ++n) {
    for (int m = 1; m <= 3; ++m) {
      for (int rep = 0; rep < 2; ++rep) {
        const auto inst = suite_instance(n, m, 9000 + 13 * idx);
        ++idx;
        CAPTURE(n);
        CAPTURE(m);
        CAPTURE(rep);

        const auto eq = nsw::market::scaling_algorithm(inst);
        REQUIRE(nsw::market::verify_equilibrium(inst, eq.p, eq.x, eq.b,
                                                eq.spending, eq.eps_eq)
                    .empty());
        const auto norm = nsw::rounding::normalize(inst, eq.b);
        auto g = nsw::rounding::build_spending_graph(norm, eq.p, eq.x,
                                                     eq.spending);

        double base_total = 0.0;
        for (int a = 0; a < inst.n; ++a)
          for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.k[i]; ++j)
              base_total += eq.spending.base[a][i][j];
        double unit_total = 0.0;
        for (const auto& u : g.units) unit_total += u.money();
        CHECK(unit_total == doctest::Approx(base_total).epsilon(1e-6));

        for (int a = 0; a < inst.n; ++a) {
          double agent_base = 0.0;
          for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.k[i]; ++j)
              agent_base += eq.spending.base[a][i][j];
          CHECK(agent_edge_total(g, a) ==
                doctest::Approx(agent_base).epsilon(1e-6));
        }

        nsw::rounding::break_cycles(g);
        CHECK(is_forest(g));
        double after_total = 0.0;
        for (const auto& u : g.units) after_total += u.money();
        CHECK(after_total == doctest::Approx(unit_total).epsilon(1e-9));

        const auto r = nsw::rounding::round_allocation(norm, eq.p, g);
        CHECK(nsw::validate_allocation(norm, r.x).empty());
        for (int a = 0; a < inst.n; ++a) {
          for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.k[i]; ++j) {
              const double v = r.x.x[a][i][j];
              CHECK((v == 0.0 || v == 1.0));
            }
          CHECK(r.utility[a] ==
                doctest::Approx(nsw::agent_utility(norm, r.x, a))
                    .epsilon(1e-9));
        }

        const auto red = nsw::rounding::to_linear_instance(norm, eq.p, g);
        CHECK(nsw::validate(red.instance).empty());
        const double ub = nsw::rounding::log_upper_bound(eq.p, inst.k);
        const double ub_red = nsw::rounding::log_upper_bound(
            red.unit_price, red.instance.k);
        CHECK(std::abs(ub - ub_red) <= 1e-9 * std::max(1.0, std::abs(ub)));
      }
    }
  }
}
