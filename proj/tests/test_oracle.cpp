#include <cmath>
#include <vector>

#include <doctest.h>

#include "nsw/errors.hpp"
#include "nsw/oracle.hpp"
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

}  // namespace

TEST_CASE("search space counts per-type count vectors") {
  // {c in N^n : sum c <= k} has C(k+n, n) elements.
  const auto one = make_instance(2, {2}, {{{3, 1}}, {{2, 2}}});
  CHECK(nsw::oracle::search_space_size(one) == 6);

  const auto two = make_instance(2, {2, 1}, {{{3, 1}, {1}}, {{2, 2}, {4}}});
  CHECK(nsw::oracle::search_space_size(two) == 18);
}

TEST_CASE("exhaustive solver finds hand-checked optima") {
  SUBCASE("single agent takes everything useful") {
    const auto inst = make_instance(1, {2}, {{{3, 1}}});
    const auto res = nsw::oracle::solve_exact(inst);
    CHECK(res.value.product == doctest::Approx(4.0));
    CHECK(res.visited == nsw::oracle::search_space_size(inst));
  }
  SUBCASE("two agents split two copies") {
    const auto inst = make_instance(2, {2}, {{{3, 1}}, {{2, 2}}});
    const auto res = nsw::oracle::solve_exact(inst);
    CHECK(res.value.product == doctest::Approx(6.0));  // 3 * 2 beats 4 * 0
    CHECK(res.best.x[0][0][0] == 1.0);
    CHECK(res.best.x[1][0][0] == 1.0);
  }
  SUBCASE("one copy for two agents leaves the product at zero") {
    const auto inst = make_instance(2, {1}, {{{5}}, {{3}}});
    const auto res = nsw::oracle::solve_exact(inst);
    CHECK(res.value.any_zero);
    CHECK(res.value.product == 0.0);
  }
  SUBCASE("optimum respects diminishing marginals") {
    // Agent 0: 4, then 1. Agent 1: 3 flat. Split beats hoarding: 4*3 > 5*...
    const auto inst = make_instance(2, {2}, {{{4, 1}}, {{3, 3}}});
    const auto res = nsw::oracle::solve_exact(inst);
    CHECK(res.value.product == doctest::Approx(12.0));
  }
}

TEST_CASE("search space cap throws a typed error") {
  const auto inst = make_instance(
      3, {3, 3, 3},
      {{{3, 2, 1}, {3, 2, 1}, {3, 2, 1}},
       {{4, 2, 1}, {4, 2, 1}, {4, 2, 1}},
       {{5, 2, 1}, {5, 2, 1}, {5, 2, 1}}});
  CHECK(nsw::oracle::search_space_size(inst) == 8000);
  try {
    nsw::oracle::solve_exact(inst, 100);
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::SearchSpaceExceeded);
  }
  CHECK_NOTHROW(nsw::oracle::solve_exact(inst, 8000));
}

TEST_CASE("outcome enumeration matches hand counts and sums to one") {
  const auto inst = make_instance(1, {2}, {{{1, 1}}});
  nsw::Allocation x = nsw::Allocation::zeros(inst);
  x.x[0][0][0] = 1.0;  // half the per-draw mass, the rest is a no-op

  CHECK(nsw::oracle::outcome_space_size(inst, x) == 4);

  double total = 0.0;
  int outcomes = 0;
  nsw::oracle::enumerate_outcomes(
      inst, x, 1000, [&](double prob, const std::vector<std::vector<int>>& draws) {
        total += prob;
        ++outcomes;
        REQUIRE(draws.size() == 1);
        REQUIRE(draws[0].size() == 2);
      });
  CHECK(outcomes == 4);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("exact expected welfare on hand cases") {
  SUBCASE("half a copy gives half the welfare") {
    const auto inst = make_instance(1, {1}, {{{1}}});
    nsw::Allocation x = nsw::Allocation::zeros(inst);
    x.x[0][0][0] = 0.5;
    CHECK(nsw::oracle::exact_expected_welfare(inst, x) == doctest::Approx(0.5));
  }
  SUBCASE("two draws on one slot") {
    // Each of 2 draws hits the slot with probability 1/2; utility is the
    // number of hits (flat marginals), so the mean is 1.
    const auto inst = make_instance(1, {2}, {{{1, 1}}});
    nsw::Allocation x = nsw::Allocation::zeros(inst);
    x.x[0][0][0] = 1.0;
    CHECK(nsw::oracle::exact_expected_welfare(inst, x) == doctest::Approx(1.0));
  }
}

TEST_CASE("exact sample probability on hand cases") {
  SUBCASE("single certain draw") {
    const auto inst = make_instance(1, {1}, {{{1}}});
    nsw::Allocation x = nsw::Allocation::zeros(inst);
    x.x[0][0][0] = 1.0;
    CHECK(nsw::oracle::exact_sample_probability(inst, x, {{0, 0, 0}}) ==
          doctest::Approx(1.0));
  }
  SUBCASE("both agents drawn once in two draws") {
    const auto inst = make_instance(2, {2}, {{{1, 1}}, {{1, 1}}});
    nsw::Allocation x = nsw::Allocation::zeros(inst);
    x.x[0][0][0] = 1.0;
    x.x[1][0][0] = 1.0;
    const double p =
        nsw::oracle::exact_sample_probability(inst, x, {{0, 0, 0}, {1, 0, 0}});
    CHECK(p == doctest::Approx(0.5));
  }
}

TEST_CASE("enumeration respects the outcome limit") {
  const auto inst = make_instance(2, {3}, {{{1, 1, 1}}, {{1, 1, 1}}});
  nsw::Allocation x = nsw::Allocation::zeros(inst);
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < 3; ++j) x.x[a][0][j] = 0.4;
  try {
    nsw::oracle::enumerate_outcomes(inst, x, 2, [](double, const auto&) {});
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::SearchSpaceExceeded);
  }
}
