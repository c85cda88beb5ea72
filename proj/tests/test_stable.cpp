#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "nsw/errors.hpp"
#include "nsw/generate.hpp"
#include "nsw/oracle.hpp"
#include "nsw/rng.hpp"
#include "nsw/stable.hpp"
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

nsw::Allocation full_allocation(const nsw::Instance& inst) {
  auto x = nsw::Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) x.x[a][i][j] = 1.0;
  return x;
}

// Reference evaluation of q by full expansion over exponent vectors.
double brute_log_q(const nsw::Instance& inst, const std::vector<double>& w) {
  double total = 0.0;
  std::vector<int> kappa(inst.m, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == inst.m) {
      if (left != 0) return;
      double term = nsw::stable::coeff_q(inst.k, kappa);
      for (int t = 0; t < inst.m; ++t)
        term *= std::pow(w[t], kappa[t]);
      total += term;
      return;
    }
    for (int c = 0; c <= std::min(inst.k[i], left); ++c) {
      kappa[i] = c;
      rec(i + 1, left - c);
    }
    kappa[i] = 0;
  };
  rec(0, inst.n);
  return std::log(total);
}

}  // namespace

TEST_CASE("companion polynomial hand values") {
  const auto inst = make_instance(1, {2}, {{{3, 1}}});
  const auto q = nsw::stable::eval_q(inst, {3.0});
  CHECK(q.log_value == doctest::Approx(std::log(3.0)));
  REQUIRE(q.grad.size() == 1);
  CHECK(q.grad[0] == doctest::Approx(1.0));

  CHECK(nsw::stable::coeff_q({2}, {2}) == doctest::Approx(0.25));
  CHECK(nsw::stable::coeff_q({2, 1}, {1, 1}) == doctest::Approx(1.0));
  CHECK(nsw::stable::coeff_q({2}, {3}) == 0.0);
}

TEST_CASE("eval_q matches the expanded sum and is homogeneous") {
  nsw::Rng rng(777);
  for (int m = 1; m <= 3; ++m) {
    for (int pick = 0; pick < 4; ++pick) {
      std::vector<int> k(m);
      int total = 0;
      for (int i = 0; i < m; ++i) {
        k[i] = rng.uniform_int(1, 3);
        total += k[i];
      }
      const int n = rng.uniform_int(1, total);
      std::vector<std::vector<std::vector<double>>> u(
          n, std::vector<std::vector<double>>(m));
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) u[a][i].assign(k[i], 1.0);
      const auto inst = make_instance(n, k, u);

      std::vector<double> w(m);
      for (double& v : w) v = rng.uniform(0.5, 2.0);

      const auto q = nsw::stable::eval_q(inst, w);
      const double ref = brute_log_q(inst, w);
      CHECK(q.log_value == doctest::Approx(ref).epsilon(1e-9));

      const double c = rng.uniform(0.5, 3.0);
      auto cw = w;
      for (double& v : cw) v *= c;
      const auto qc = nsw::stable::eval_q(inst, cw);
      CHECK(qc.log_value ==
            doctest::Approx(q.log_value + n * std::log(c)).epsilon(1e-9));
    }
  }
}

TEST_CASE("linear-form product hand values") {
  const auto inst = make_instance(2, {1, 1}, {{{1}, {1}}, {{0}, {4}}});
  const auto x = full_allocation(inst);
  const auto p = nsw::stable::eval_p(inst, x, {2.0, 5.0});
  // Agent 0 sums 2 + 5 = 7, agent 1 holds 5 * 4 = 20.
  CHECK(p.log_value == doctest::Approx(std::log(140.0)));
  CHECK(p.grad[0] == doctest::Approx(2.0 / 7.0));
  CHECK(p.grad[1] == doctest::Approx(5.0 / 7.0 + 1.0));

  try {
    nsw::stable::eval_p(inst, nsw::Allocation::zeros(inst), {1.0, 1.0});
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::DegenerateInput);
  }
}

TEST_CASE("log-coordinate gradients match central differences") {
  nsw::Rng rng(4242);
  nsw::GenerateParams gp;
  gp.seed = 31;
  gp.n = 3;
  gp.m = 3;
  const auto inst = nsw::generate(gp);

  auto x = nsw::Allocation::zeros(inst);
  x.integral = false;
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j)
        x.x[a][i][j] = rng.uniform(0.05, 1.0 / inst.n);

  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(inst.m), w(inst.m);
    for (int i = 0; i < inst.m; ++i) {
      y[i] = rng.uniform(0.3, 3.0);
      w[i] = rng.uniform(0.3, 3.0);
    }

    const auto p = nsw::stable::eval_p(inst, x, y);
    const auto q = nsw::stable::eval_q(inst, w);
    for (int i = 0; i < inst.m; ++i) {
      auto yp = y, ym = y;
      yp[i] *= std::exp(h);
      ym[i] *= std::exp(-h);
      const double dp = (nsw::stable::eval_p(inst, x, yp).log_value -
                         nsw::stable::eval_p(inst, x, ym).log_value) /
                        (2 * h);
      CHECK(std::abs(p.grad[i] - dp) <= 1e-5 * std::max(1.0, std::abs(dp)));

      auto wp = w, wm = w;
      wp[i] *= std::exp(h);
      wm[i] *= std::exp(-h);
      const double dq = (nsw::stable::eval_q(inst, wp).log_value -
                         nsw::stable::eval_q(inst, wm).log_value) /
                        (2 * h);
      CHECK(std::abs(q.grad[i] - dq) <= 1e-5 * std::max(1.0, std::abs(dq)));
    }
  }
}

TEST_CASE("objective is invariant along the gauge direction") {
  nsw::Rng rng(99);
  nsw::GenerateParams gp;
  gp.seed = 17;
  gp.n = 2;
  gp.m = 2;
  const auto inst = nsw::generate(gp);

  auto x = nsw::Allocation::zeros(inst);
  x.integral = false;
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j)
        x.x[a][i][j] = rng.uniform(0.1, 0.5);

  // alpha on the simplex scaled to n = 2.
  std::vector<double> alpha{0.8, 1.2};
  std::vector<double> y{0.3, -0.7}, z{1.1, 0.2};
  const double f0 = nsw::stable::objective(inst, x, alpha, y, z);
  for (double c : {0.5, -1.25, 3.0}) {
    auto yc = y;
    auto zc = z;
    for (double& v : yc) v += c;
    for (double& v : zc) v -= 0.5 * c;
    const double fc = nsw::stable::objective(inst, x, alpha, yc, zc);
    CHECK(fc == doctest::Approx(f0).epsilon(1e-9));
  }
}

TEST_CASE("relaxation value on closed-form instances") {
  SUBCASE("single agent, single unit") {
    const auto inst = make_instance(1, {1}, {{{1}}});
    const auto sol = nsw::stable::solve_relaxation(inst);
    CHECK(std::abs(sol.value) <= 1e-3);
    CHECK(sol.converged);
  }
  SUBCASE("more agents than items yields log zero") {
    const auto inst = make_instance(2, {1}, {{{4}}, {{5}}});
    const auto sol = nsw::stable::solve_relaxation(inst);
    CHECK(std::isinf(sol.value));
    CHECK(sol.value < 0);
    CHECK(sol.converged);
  }
  SUBCASE("value dominates the exact optimum") {
    const auto inst =
        make_instance(2, {1, 1}, {{{4}, {0}}, {{0}, {9}}});
    const auto sol = nsw::stable::solve_relaxation(inst);
    const auto exact = nsw::oracle::solve_exact(inst);
    CHECK(exact.value.product == doctest::Approx(36.0));
    CHECK(sol.value >= std::log(36.0) - 1e-3);
    CHECK(sol.value <= std::log(36.0) + 2.0 * inst.n + 1.0);
  }
  SUBCASE("an agent valuing nothing is degenerate") {
    const auto inst = make_instance(2, {1}, {{{4}}, {{0}}});
    try {
      nsw::stable::solve_relaxation(inst);
      FAIL("expected a throw");
    } catch (const nsw::Error& e) {
      CHECK(e.code() == nsw::ErrorCode::DegenerateInput);
    }
  }
}

TEST_CASE("randomized rounding is deterministic per seed and feasible") {
  const auto inst = make_instance(2, {1, 2}, {{{6}, {3, 2}}, {{5}, {4, 1}}});
  auto x = nsw::Allocation::zeros(inst);
  x.integral = false;
  x.x[0][0][0] = 0.5;
  x.x[1][0][0] = 0.5;
  x.x[0][1][0] = 0.75;
  x.x[0][1][1] = 0.25;
  x.x[1][1][0] = 0.5;
  x.x[1][1][1] = 0.5;

  const auto a = nsw::stable::randomized_round(inst, x, 12345);
  const auto b = nsw::stable::randomized_round(inst, x, 12345);
  CHECK(a.draws == b.draws);
  CHECK(a.x.x == b.x.x);
  CHECK(a.value.product == b.value.product);

  bool any_diff = false;
  for (std::uint64_t s = 1; s <= 8 && !any_diff; ++s)
    any_diff = nsw::stable::randomized_round(inst, x, s).draws != a.draws;
  CHECK(any_diff);

  const nsw::TripletIndex index(inst);
  for (std::uint64_t s = 1; s <= 32; ++s) {
    const auto out = nsw::stable::randomized_round(inst, x, s);
    REQUIRE(out.draws.size() == 2);
    for (int i = 0; i < inst.m; ++i) {
      CHECK(static_cast<int>(out.draws[i].size()) == inst.k[i]);
      for (int id : out.draws[i]) {
        if (id < 0) continue;
        CHECK(index.at(id).i == i);
      }
    }
    CHECK(nsw::validate_allocation(inst, out.x).empty());
    double total0 = 0.0;
    for (int a2 = 0; a2 < inst.n; ++a2)
      for (int j = 0; j < inst.k[0]; ++j) total0 += out.x.x[a2][0][j];
    CHECK(total0 <= inst.k[0] + 1e-12);
  }
}

TEST_CASE("sampled welfare agrees with the exact expectation") {
  const auto inst = make_instance(2, {1, 1}, {{{3}, {1}}, {{2}, {4}}});
  auto x = nsw::Allocation::zeros(inst);
  x.integral = false;
  x.x[0][0][0] = 0.6;
  x.x[1][0][0] = 0.4;
  x.x[0][1][0] = 0.25;
  x.x[1][1][0] = 0.75;

  const double exact = nsw::oracle::exact_expected_welfare(inst, x);
  const auto est = nsw::stable::estimate_expected_welfare(inst, x, 20000, 7);
  CHECK(std::abs(est.mean - exact) <= 6 * est.stderr_ + 1e-12);
  CHECK(est.best_product >= est.mean - 1e-12);
  CHECK(nsw::validate_allocation(inst, est.best).empty());

  try {
    nsw::stable::estimate_expected_welfare(inst, x, 0, 7);
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::UsageError);
  }
}

TEST_CASE("sampling lower bound stays below the exact probability") {
  const auto inst = make_instance(2, {2}, {{{3, 1}}, {{2, 1}}});
  auto x = nsw::Allocation::zeros(inst);
  x.x[0][0][0] = 1.0;
  x.x[1][0][0] = 1.0;

  const std::vector<nsw::Triplet> s{{0, 0, 0}, {1, 0, 0}};
  const double lb = nsw::stable::sampling_lower_bound(inst, x, s);
  const double exact = nsw::oracle::exact_sample_probability(inst, x, s);
  // Both copies drawn over two slots, each slot picking one of the two
  // agents' first copies with probability 1/2: P[both named] = 1/2. The
  // closed-form bound evaluates to e^{-2} * 2!/0! / 2^... = e^{-2}/2 * 4 ...
  CHECK(exact == doctest::Approx(0.5));
  CHECK(lb <= exact + 1e-12);
  CHECK(lb == doctest::Approx(std::exp(-2.0) * 0.5));

  try {
    nsw::stable::sampling_lower_bound(inst, x, {{0, 0, 0}});
    FAIL("expected a throw");
  } catch (const nsw::Error& e) {
    CHECK(e.code() == nsw::ErrorCode::UsageError);
  }
}
