#include "nsw/stable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsw/errors.hpp"
#include "nsw/rng.hpp"

namespace nsw::stable {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kAlphaFloor = 1e-12;
constexpr double kLogClamp = 40.0;

double log_add(double la, double lb) {
  if (la == kNegInf) return lb;
  if (lb == kNegInf) return la;
  const double hi = std::max(la, lb);
  const double lo = std::min(la, lb);
  return hi + std::log1p(std::exp(lo - hi));
}

double lchoose(int nn, int rr) {
  return std::lgamma(nn + 1.0) - std::lgamma(rr + 1.0) - std::lgamma(nn - rr + 1.0);
}

// log-magnitude coefficient array of (t + c)^k, degree ascending, c >= 0.
std::vector<double> factor_coeffs(int k, double c) {
  std::vector<double> out(k + 1, kNegInf);
  const double lc = (c > 0.0) ? std::log(c) : kNegInf;
  for (int d = 0; d <= k; ++d) {
    const int pow = k - d;
    if (pow == 0) {
      out[d] = lchoose(k, d);
    } else if (c > 0.0) {
      out[d] = lchoose(k, d) + pow * lc;
    }
  }
  return out;
}

// Derivative factor k * (t + c)^(k-1).
std::vector<double> dfactor_coeffs(int k, double c) {
  std::vector<double> out(k, kNegInf);
  const double lk = std::log(static_cast<double>(k));
  const double lc = (c > 0.0) ? std::log(c) : kNegInf;
  for (int d = 0; d <= k - 1; ++d) {
    const int pow = k - 1 - d;
    if (pow == 0) {
      out[d] = lk + lchoose(k - 1, d);
    } else if (c > 0.0) {
      out[d] = lk + lchoose(k - 1, d) + pow * lc;
    }
  }
  return out;
}

std::vector<double> convolve_log(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, kNegInf);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == kNegInf) continue;
    for (size_t j = 0; j < b.size(); ++j) {
      if (b[j] == kNegInf) continue;
      out[i + j] = log_add(out[i + j], a[i] + b[j]);
    }
  }
  return out;
}

std::vector<std::vector<double>> agent_weights(const Instance& inst,
                                               const Allocation& x) {
  std::vector<std::vector<double>> w(inst.n, std::vector<double>(inst.m, 0.0));
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j)
        w[a][i] += x.x[a][i][j] * inst.u[a][i][j];
  return w;
}

}  // namespace

PolyEval eval_p(const Instance& inst, const Allocation& x,
                const std::vector<double>& y) {
  require_valid(inst);
  if (static_cast<int>(y.size()) != inst.m)
    throw Error(ErrorCode::UsageError, "weight vector size mismatch");
  const auto w = agent_weights(inst, x);
  PolyEval out;
  out.grad.assign(inst.m, 0.0);
  for (int a = 0; a < inst.n; ++a) {
    double s = 0.0;
    for (int i = 0; i < inst.m; ++i) s += y[i] * w[a][i];
    if (!(s > 0.0))
      throw Error(ErrorCode::DegenerateInput,
                  "agent " + std::to_string(a) + " has zero weight in p_x");
    out.log_value += std::log(s);
    for (int i = 0; i < inst.m; ++i) out.grad[i] += y[i] * w[a][i] / s;
  }
  return out;
}

PolyEval eval_q(const Instance& inst, const std::vector<double>& w) {
  require_valid(inst);
  if (static_cast<int>(w.size()) != inst.m)
    throw Error(ErrorCode::UsageError, "weight vector size mismatch");
  for (double v : w)
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorCode::UsageError, "weights must be nonnegative and finite");
  const int m = inst.m;
  const int total = inst.total_items();
  if (inst.n > total)
    throw Error(ErrorCode::RelaxationUndefined,
                "more agents than items: t^(K-n) does not exist");
  const int target = total - inst.n;

  // All coefficients stay nonnegative (w >= 0), so plain log magnitudes
  // suffice; no sign bookkeeping is needed.
  std::vector<std::vector<double>> factors(m);
  for (int i = 0; i < m; ++i) factors[i] = factor_coeffs(inst.k[i], w[i] / inst.k[i]);

  std::vector<std::vector<double>> prefix(m + 1), suffix(m + 1);
  prefix[0] = {0.0};
  for (int i = 0; i < m; ++i) prefix[i + 1] = convolve_log(prefix[i], factors[i]);
  suffix[m] = {0.0};
  for (int i = m - 1; i >= 0; --i) suffix[i] = convolve_log(factors[i], suffix[i + 1]);

  PolyEval out;
  out.grad.assign(m, 0.0);
  out.log_value = prefix[m][target];
  if (out.log_value == kNegInf) return out;  // q = 0; gradient left at zero

  for (int i = 0; i < m; ++i) {
    const double c = w[i] / inst.k[i];
    if (c <= 0.0) continue;
    const auto df = dfactor_coeffs(inst.k[i], c);
    const auto rest = convolve_log(prefix[i], suffix[i + 1]);
    // coefficient of t^target in df * rest, in log form
    double lr = kNegInf;
    for (size_t d = 0; d < df.size() && d <= static_cast<size_t>(target); ++d) {
      if (df[d] == kNegInf) continue;
      const size_t need = static_cast<size_t>(target) - d;
      if (need >= rest.size() || rest[need] == kNegInf) continue;
      lr = log_add(lr, df[d] + rest[need]);
    }
    if (lr == kNegInf) continue;
    // d log q / d log w_i = c * (dq/dc) / q
    out.grad[i] = std::exp(std::log(c) + lr - out.log_value);
  }
  return out;
}

double coeff_q(const std::vector<int>& k, const std::vector<int>& kappa) {
  if (k.size() != kappa.size())
    throw Error(ErrorCode::UsageError, "exponent vector size mismatch");
  double lsum = 0.0;
  for (size_t i = 0; i < k.size(); ++i) {
    if (kappa[i] < 0 || kappa[i] > k[i]) return 0.0;
    lsum += lchoose(k[i], kappa[i]) - kappa[i] * std::log(static_cast<double>(k[i]));
  }
  return std::exp(lsum);
}

double objective(const Instance& inst, const Allocation& x,
                 const std::vector<double>& alpha, const std::vector<double>& y,
                 const std::vector<double>& z) {
  const int m = inst.m;
  if (static_cast<int>(alpha.size()) != m || static_cast<int>(y.size()) != m ||
      static_cast<int>(z.size()) != m)
    throw Error(ErrorCode::UsageError, "dual vector size mismatch");
  std::vector<double> ey(m), w(m);
  for (int i = 0; i < m; ++i) {
    ey[i] = std::exp(y[i]);
    w[i] = alpha[i] * std::exp(z[i]);
  }
  const PolyEval p = eval_p(inst, x, ey);
  const PolyEval q = eval_q(inst, w);
  double f = p.log_value + q.log_value;
  for (int i = 0; i < m; ++i) f -= alpha[i] * (y[i] + z[i]);
  return f;
}

namespace {

// Euclidean projection onto { lo <= v <= hi, sum v = total } by bisection on
// the shift tau in clamp(v - tau).
void project_box_simplex(std::vector<double>& v, const std::vector<double>& lo,
                         const std::vector<double>& hi, double total) {
  const size_t mm = v.size();
  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < mm; ++i) {
    t_lo = std::min(t_lo, v[i] - hi[i]);
    t_hi = std::max(t_hi, v[i] - lo[i]);
  }
  t_lo -= 1.0;
  t_hi += 1.0;
  auto mass = [&](double tau) {
    double s = 0.0;
    for (size_t i = 0; i < mm; ++i) s += std::clamp(v[i] - tau, lo[i], hi[i]);
    return s;
  };
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (mass(mid) > total) {
      t_lo = mid;
    } else {
      t_hi = mid;
    }
  }
  const double tau = 0.5 * (t_lo + t_hi);
  for (size_t i = 0; i < mm; ++i) v[i] = std::clamp(v[i] - tau, lo[i], hi[i]);
}

void project_allocation(const Instance& inst, Allocation& x) {
  for (int i = 0; i < inst.m; ++i) {
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(inst.n) * inst.k[i]);
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j) flat.push_back(x.x[a][i][j]);
    std::vector<double> lo(flat.size(), 0.0), hi(flat.size(), 1.0);
    project_box_simplex(flat, lo, hi, static_cast<double>(inst.k[i]));
    size_t pos = 0;
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j) x.x[a][i][j] = flat[pos++];
  }
}

Allocation uniform_allocation(const Instance& inst) {
  Allocation x = Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) x.x[a][i][j] = 1.0 / inst.n;
  x.integral = false;
  return x;
}

// Integral warm start: hand copies out one at a time, zero-utility agents
// first (largest marginal), then largest proportional gain.
Allocation greedy_allocation(const Instance& inst) {
  std::vector<std::vector<int>> counts(inst.n, std::vector<int>(inst.m, 0));
  std::vector<double> util(inst.n, 0.0);
  for (int i = 0; i < inst.m; ++i) {
    for (int copy = 0; copy < inst.k[i]; ++copy) {
      int best = 0;
      double best_a = -1.0, best_b = -1.0;  // (rescue, gain) lexicographic
      for (int a = 0; a < inst.n; ++a) {
        const int c = counts[a][i];
        const double marg = (c < inst.k[i]) ? inst.u[a][i][c] : 0.0;
        const double rescue = (util[a] <= 0.0) ? marg : 0.0;
        const double gain =
            (util[a] > 0.0) ? std::log1p(marg / util[a]) : 0.0;
        if (rescue > best_a || (rescue == best_a && gain > best_b)) {
          best = a;
          best_a = rescue;
          best_b = gain;
        }
      }
      const int c = counts[best][i];
      if (c < inst.k[i]) {
        util[best] += inst.u[best][i][c];
        ++counts[best][i];
      }
    }
  }
  Allocation x = Allocation::zeros(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < counts[a][i]; ++j) x.x[a][i][j] = 1.0;
  x.integral = true;
  return x;
}

// Keeps every agent's linear weight strictly positive by mixing a pinch of
// the uniform point back in when a projected step starved someone.
void guard_weights(const Instance& inst, Allocation& x) {
  const auto w = agent_weights(inst, x);
  bool starved = false;
  for (int a = 0; a < inst.n && !starved; ++a) {
    double s = 0.0;
    for (int i = 0; i < inst.m; ++i) s += w[a][i];
    if (s <= 1e-300) starved = true;
  }
  if (!starved) return;
  const Allocation uni = uniform_allocation(inst);
  constexpr double kMix = 1e-6;
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j)
        x.x[a][i][j] = (1.0 - kMix) * x.x[a][i][j] + kMix * uni.x[a][i][j];
}

struct InnerResult {
  double value = 0.0;
  double residual = 0.0;
  PolyEval p;
  PolyEval q;
};

InnerResult solve_inner(const Instance& inst, const Allocation& x,
                        const std::vector<double>& alpha, std::vector<double>& y,
                        std::vector<double>& z, const RelaxOptions& opts) {
  const int m = inst.m;
  auto center = [m](std::vector<double>& v) {
    double mean = 0.0;
    for (double t : v) mean += t;
    mean /= m;
    for (double& t : v) t -= mean;
  };
  auto clamp_vec = [](std::vector<double>& v) {
    for (double& t : v) t = std::clamp(t, -kLogClamp, kLogClamp);
  };
  auto evaluate = [&](const std::vector<double>& yy, const std::vector<double>& zz,
                      PolyEval& p, PolyEval& q) {
    std::vector<double> ey(m), w(m);
    for (int i = 0; i < m; ++i) {
      ey[i] = std::exp(yy[i]);
      w[i] = alpha[i] * std::exp(zz[i]);
    }
    p = eval_p(inst, x, ey);
    q = eval_q(inst, w);
    double f = p.log_value + q.log_value;
    for (int i = 0; i < m; ++i) f -= alpha[i] * (yy[i] + zz[i]);
    return f;
  };

  InnerResult res;
  double f = evaluate(y, z, res.p, res.q);
  for (int it = 0; it < opts.inner_max_iter; ++it) {
    std::vector<double> gy(m), gz(m);
    for (int i = 0; i < m; ++i) {
      gy[i] = res.p.grad[i] - alpha[i];
      gz[i] = res.q.grad[i] - alpha[i];
    }
    center(gy);
    center(gz);
    double norm2 = 0.0;
    for (int i = 0; i < m; ++i) norm2 += gy[i] * gy[i] + gz[i] * gz[i];
    res.residual = std::sqrt(norm2);
    if (res.residual <= opts.inner_tol) break;

    double step = 1.0;
    bool moved = false;
    std::vector<double> ny(m), nz(m);
    PolyEval np, nq;
    while (step > 1e-12) {
      for (int i = 0; i < m; ++i) {
        ny[i] = y[i] - step * gy[i];
        nz[i] = z[i] - step * gz[i];
      }
      clamp_vec(ny);
      clamp_vec(nz);
      const double nf = evaluate(ny, nz, np, nq);
      if (nf <= f - 0.25 * step * norm2) {
        y = ny;
        z = nz;
        f = nf;
        res.p = std::move(np);
        res.q = std::move(nq);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // at the numeric floor of the line search
  }
  res.value = f;
  return res;
}

struct AscentRun {
  Allocation x;
  std::vector<double> alpha, y, z;
  double value = kNegInf;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

AscentRun run_ascent(const Instance& inst, Allocation x, const RelaxOptions& opts) {
  const int m = inst.m;
  const int total = inst.total_items();
  std::vector<double> alpha(m);
  for (int i = 0; i < m; ++i)
    alpha[i] = static_cast<double>(inst.n) * inst.k[i] / total;
  std::vector<double> alpha_lo(m, kAlphaFloor), alpha_hi(m);
  for (int i = 0; i < m; ++i) alpha_hi[i] = static_cast<double>(inst.k[i]);

  guard_weights(inst, x);
  std::vector<double> y(m, 0.0), z(m, 0.0);

  AscentRun best;
  best.x = x;
  best.alpha = alpha;
  best.y = y;
  best.z = z;
  int plateau = 0;

  for (int t = 0; t < opts.outer_max_iter; ++t) {
    const InnerResult inner = solve_inner(inst, x, alpha, y, z, opts);
    if (inner.value > best.value + opts.outer_min_gain) {
      plateau = 0;
    } else {
      ++plateau;
    }
    if (inner.value > best.value) {
      best.x = x;
      best.alpha = alpha;
      best.y = y;
      best.z = z;
      best.value = inner.value;
      best.residual = inner.residual;
    }
    best.iterations = t + 1;
    if (plateau >= opts.outer_patience) {
      best.converged = true;
      break;
    }

    // Envelope supergradients at the inner minimizer.
    const auto w = agent_weights(inst, x);
    std::vector<double> ey(m);
    for (int i = 0; i < m; ++i) ey[i] = std::exp(y[i]);
    std::vector<double> s(inst.n, 0.0);
    for (int a = 0; a < inst.n; ++a)
      for (int i = 0; i < m; ++i) s[a] += ey[i] * w[a][i];

    const double step = 0.5 / std::sqrt(t + 1.0);
    for (int a = 0; a < inst.n; ++a)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < inst.k[i]; ++j)
          x.x[a][i][j] += step * ey[i] * inst.u[a][i][j] / s[a];
    project_allocation(inst, x);
    guard_weights(inst, x);

    for (int i = 0; i < m; ++i)
      alpha[i] += step * (inner.q.grad[i] / alpha[i] - y[i] - z[i]);
    project_box_simplex(alpha, alpha_lo, alpha_hi, static_cast<double>(inst.n));
  }
  return best;
}

}  // namespace

RelaxationSolution solve_relaxation(const Instance& inst, const RelaxOptions& opts) {
  require_valid(inst);
  for (int a = 0; a < inst.n; ++a)
    if (!inst.values_anything(a))
      throw Error(ErrorCode::DegenerateInput,
                  "agent " + std::to_string(a) +
                      " values no item; every Nash product is zero");

  RelaxationSolution sol;
  const int total = inst.total_items();
  if (inst.n > total) {
    // Fewer items than agents: every integral allocation starves someone,
    // so the bound is trivially -inf and there is nothing to optimize.
    sol.x = uniform_allocation(inst);
    sol.alpha.assign(inst.k.begin(), inst.k.end());
    sol.y.assign(inst.m, 0.0);
    sol.z.assign(inst.m, 0.0);
    sol.value = kNegInf;
    sol.converged = true;
    return sol;
  }

  const Allocation uni = uniform_allocation(inst);
  Allocation mixed = greedy_allocation(inst);
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j)
        mixed.x[a][i][j] = 0.99 * mixed.x[a][i][j] + 0.01 * uni.x[a][i][j];
  mixed.integral = false;

  AscentRun best;
  for (const Allocation& start : {uni, mixed}) {
    AscentRun run = run_ascent(inst, start, opts);
    if (run.value > best.value || best.iterations == 0) best = std::move(run);
  }

  sol.x = best.x;
  sol.alpha = best.alpha;
  sol.y = best.y;
  sol.z = best.z;
  sol.value = best.value;
  sol.outer_iterations = best.iterations;
  sol.inner_residual = best.residual;
  sol.converged = best.converged;
  return sol;
}

SampleOutcome randomized_round(const Instance& inst, const Allocation& x,
                               std::uint64_t seed) {
  require_valid(inst);
  TripletIndex idx(inst);
  Rng rng(seed);
  SampleOutcome out;
  out.draws.resize(inst.m);
  std::vector<std::vector<int>> counts(inst.n, std::vector<int>(inst.m, 0));
  for (int i = 0; i < inst.m; ++i) {
    out.draws[i].assign(inst.k[i], -1);
    for (int d = 0; d < inst.k[i]; ++d) {
      const double r = rng.uniform();
      double cum = 0.0;
      for (int a = 0; a < inst.n && out.draws[i][d] < 0; ++a) {
        for (int j = 0; j < inst.k[i]; ++j) {
          const double v = x.x[a][i][j];
          if (v <= 0.0) continue;
          cum += v / inst.k[i];
          if (r < cum) {
            out.draws[i][d] = idx.id_of(a, i, j);
            ++counts[a][i];
            break;
          }
        }
      }
    }
  }
  out.x = allocation_from_counts(inst, counts);
  out.value = nsw_value(inst, out.x);
  return out;
}

WelfareEstimate estimate_expected_welfare(const Instance& inst,
                                          const Allocation& x,
                                          std::uint64_t trials,
                                          std::uint64_t seed) {
  if (trials == 0)
    throw Error(ErrorCode::UsageError, "trial count must be positive");
  WelfareEstimate est;
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const SampleOutcome outcome = randomized_round(inst, x, Rng::derive(seed, t));
    const double prod = outcome.value.any_zero ? 0.0 : outcome.value.product;
    const double d1 = prod - mean;
    mean += d1 / static_cast<double>(t + 1);
    m2 += d1 * (prod - mean);
    if (t == 0 || prod > est.best_product) {
      est.best_product = prod;
      est.best = outcome.x;
    }
  }
  est.mean = mean;
  if (trials > 1)
    est.stderr_ = std::sqrt(m2 / (static_cast<double>(trials - 1) *
                                  static_cast<double>(trials)));
  return est;
}

double sampling_lower_bound(const Instance& inst, const Allocation& x,
                            const std::vector<Triplet>& s) {
  require_valid(inst);
  if (static_cast<int>(s.size()) != inst.n)
    throw Error(ErrorCode::UsageError, "set size must equal the agent count");
  std::vector<int> hits(inst.m, 0);
  double bound = 1.0;
  for (const Triplet& t : s) {
    if (t.a < 0 || t.a >= inst.n || t.i < 0 || t.i >= inst.m || t.j < 0 ||
        t.j >= inst.k[t.i])
      throw Error(ErrorCode::UsageError, "triplet out of range");
    ++hits[t.i];
    bound *= x.x[t.a][t.i][t.j] / inst.k[t.i];
  }
  for (int i = 0; i < inst.m; ++i) {
    if (hits[i] > inst.k[i])
      throw Error(ErrorCode::UsageError,
                  "set uses more copies of a type than its supply");
    if (hits[i] == 0) continue;
    double ff = 1.0;
    for (int r = 0; r < hits[i]; ++r) ff *= inst.k[i] - r;
    bound *= std::exp(-static_cast<double>(hits[i])) * ff;
  }
  return bound;
}

}  // namespace nsw::stable
