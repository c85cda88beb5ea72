#include "nsw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsw/errors.hpp"

namespace nsw::oracle {

namespace {

constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSat / b) return kSat;
  return a * b;
}

// C(k + n, n): count of nonnegative integer vectors of length n summing
// to at most k.
std::uint64_t count_vectors(int k, int n) {
  unsigned __int128 r = 1;
  for (int i = 1; i <= n; ++i) {
    r *= (unsigned __int128)(k + i);
    r /= (unsigned __int128)i;  // exact: C(k+i, i) is integral
    if (r > (unsigned __int128)kSat) return kSat;
  }
  return (std::uint64_t)r;
}

std::vector<std::vector<std::vector<double>>> prefix_sums(
    const Instance& inst) {
  std::vector<std::vector<std::vector<double>>> pre(inst.n);
  for (int a = 0; a < inst.n; ++a) {
    pre[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) {
      pre[a][i].assign(inst.k[i] + 1, 0.0);
      for (int j = 0; j < inst.k[i]; ++j)
        pre[a][i][j + 1] = pre[a][i][j] + inst.u[a][i][j];
    }
  }
  return pre;
}

struct ExactSearch {
  const Instance& inst;
  std::vector<std::vector<std::vector<double>>> pre;
  std::vector<std::vector<int>> counts;
  std::vector<double> util;
  std::vector<std::vector<int>> best_counts;
  double best_log = -std::numeric_limits<double>::infinity();
  bool best_zero = true;
  bool have_best = false;
  std::uint64_t visited = 0;

  explicit ExactSearch(const Instance& in) : inst(in), pre(prefix_sums(in)) {
    counts.assign(in.n, std::vector<int>(in.m, 0));
    util.assign(in.n, 0.0);
  }

  void leaf() {
    ++visited;
    bool zero = false;
    double log_sum = 0.0;
    for (double u : util) {
      if (u <= 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(u);
    }
    bool better;
    if (!have_best) {
      better = true;
    } else if (best_zero) {
      better = !zero;  // any positive product beats a zero one
    } else {
      better = !zero && log_sum > best_log;
    }
    if (better) {
      best_counts = counts;
      best_log = zero ? -std::numeric_limits<double>::infinity() : log_sum;
      best_zero = zero;
      have_best = true;
    }
  }

  void over_agents(int i, int a, int remaining) {
    if (a == inst.n) {
      over_types(i + 1);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[a][i] = c;
      util[a] += pre[a][i][c];
      over_agents(i, a + 1, remaining - c);
      util[a] -= pre[a][i][c];
    }
    counts[a][i] = 0;
  }

  void over_types(int i) {
    if (i == inst.m) {
      leaf();
      return;
    }
    over_agents(i, 0, inst.k[i]);
  }
};

}  // namespace

std::uint64_t search_space_size(const Instance& inst) {
  std::uint64_t total = 1;
  for (int i = 0; i < inst.m; ++i)
    total = sat_mul(total, count_vectors(inst.k[i], inst.n));
  return total;
}

ExactResult solve_exact(const Instance& inst, std::uint64_t limit) {
  require_valid(inst);
  std::uint64_t size = search_space_size(inst);
  if (size > limit)
    throw Error(ErrorCode::SearchSpaceExceeded,
                "exhaustive search would visit " + std::to_string(size) +
                    " allocations (limit " + std::to_string(limit) + ")");
  ExactSearch search(inst);
  search.over_types(0);
  ExactResult result;
  result.best = allocation_from_counts(inst, search.best_counts);
  result.value = nsw_value(inst, result.best);
  result.visited = search.visited;
  return result;
}

namespace {

struct TypeSupport {
  std::vector<int> ids;       // TripletIndex ids with positive mass
  std::vector<double> prob;   // x_aij / k_i per id
  double noop = 0.0;          // leftover mass
  bool has_noop = false;
};

std::vector<TypeSupport> build_support(const Instance& inst,
                                       const Allocation& x,
                                       const TripletIndex& index) {
  std::vector<TypeSupport> sup(inst.m);
  for (int i = 0; i < inst.m; ++i) {
    double mass = 0.0;
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j) {
        double v = x.x[a][i][j];
        if (v > 0.0) {
          sup[i].ids.push_back(index.id_of(a, i, j));
          sup[i].prob.push_back(v / inst.k[i]);
          mass += v / inst.k[i];
        }
      }
    sup[i].noop = 1.0 - mass;
    sup[i].has_noop = sup[i].noop > 1e-12;
    if (!sup[i].has_noop) sup[i].noop = 0.0;
  }
  return sup;
}

struct OutcomeWalk {
  const Instance& inst;
  const std::vector<TypeSupport>& sup;
  const OutcomeFn& fn;
  std::vector<std::vector<int>> draws;

  void over_draws(int i, int d, double prob) {
    if (i == inst.m) {
      fn(prob, draws);
      return;
    }
    if (d == inst.k[i]) {
      over_draws(i + 1, 0, prob);
      return;
    }
    const TypeSupport& s = sup[i];
    for (std::size_t t = 0; t < s.ids.size(); ++t) {
      draws[i][d] = s.ids[t];
      over_draws(i, d + 1, prob * s.prob[t]);
    }
    if (s.has_noop) {
      draws[i][d] = -1;
      over_draws(i, d + 1, prob * s.noop);
    }
    draws[i][d] = -1;
  }
};

}  // namespace

std::uint64_t outcome_space_size(const Instance& inst, const Allocation& x) {
  TripletIndex index(inst);
  auto sup = build_support(inst, x, index);
  std::uint64_t total = 1;
  for (int i = 0; i < inst.m; ++i) {
    std::uint64_t branch = sup[i].ids.size() + (sup[i].has_noop ? 1 : 0);
    for (int d = 0; d < inst.k[i]; ++d) total = sat_mul(total, branch);
  }
  return total;
}

void enumerate_outcomes(const Instance& inst, const Allocation& x,
                        std::uint64_t limit, const OutcomeFn& fn) {
  std::uint64_t size = outcome_space_size(inst, x);
  if (size > limit)
    throw Error(ErrorCode::SearchSpaceExceeded,
                "outcome enumeration would visit " + std::to_string(size) +
                    " states (limit " + std::to_string(limit) + ")");
  TripletIndex index(inst);
  auto sup = build_support(inst, x, index);
  OutcomeWalk walk{inst, sup, fn, {}};
  walk.draws.resize(inst.m);
  for (int i = 0; i < inst.m; ++i) walk.draws[i].assign(inst.k[i], -1);
  walk.over_draws(0, 0, 1.0);
}

double exact_expected_welfare(const Instance& inst, const Allocation& x,
                              std::uint64_t limit) {
  TripletIndex index(inst);
  auto pre = prefix_sums(inst);
  std::vector<std::vector<int>> held(inst.n, std::vector<int>(inst.m, 0));
  double expected = 0.0;
  enumerate_outcomes(
      inst, x, limit,
      [&](double prob, const std::vector<std::vector<int>>& draws) {
        for (auto& row : held) std::fill(row.begin(), row.end(), 0);
        for (int i = 0; i < inst.m; ++i)
          for (int id : draws[i]) {
            if (id < 0) continue;
            const Triplet& t = index.at(id);
            if (held[t.a][t.i] < inst.k[t.i]) ++held[t.a][t.i];
          }
        double product = 1.0;
        for (int a = 0; a < inst.n; ++a) {
          double u = 0.0;
          for (int i = 0; i < inst.m; ++i) u += pre[a][i][held[a][i]];
          product *= u;
        }
        expected += prob * product;
      });
  return expected;
}

double exact_sample_probability(const Instance& inst, const Allocation& x,
                                const std::vector<Triplet>& s,
                                std::uint64_t limit) {
  TripletIndex index(inst);
  std::vector<int> wanted;
  wanted.reserve(s.size());
  for (const Triplet& t : s) wanted.push_back(index.id_of(t.a, t.i, t.j));
  double total = 0.0;
  enumerate_outcomes(
      inst, x, limit,
      [&](double prob, const std::vector<std::vector<int>>& draws) {
        for (int id : wanted) {
          const Triplet& t = index.at(id);
          const auto& row = draws[t.i];
          if (std::find(row.begin(), row.end(), id) == row.end()) return;
        }
        total += prob;
      });
  return total;
}

}  // namespace nsw::oracle
