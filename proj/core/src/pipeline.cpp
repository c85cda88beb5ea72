#include "nsw/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsw/errors.hpp"
#include "nsw/generate.hpp"
#include "nsw/io.hpp"
#include "nsw/market.hpp"
#include "nsw/oracle.hpp"
#include "nsw/rng.hpp"
#include "nsw/rounding.hpp"
#include "nsw/stable.hpp"
#include "nsw/welfare.hpp"

namespace nsw::cli {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// CSV cells stay comma-free; free-text fields get commas swapped out.
std::string csv_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::Exact:
      return "exact";
    case Pipeline::Market:
      return "market";
    case Pipeline::Stable:
      return "stable";
  }
  return "unknown";
}

Report run_pipeline(const Instance& inst, const std::string& instance_id,
                    Pipeline pipeline, const PipelineOptions& opts) {
  Report r;
  r.instance_id = instance_id;
  r.pipeline = pipeline;
  r.n = inst.n;
  r.m = inst.m;
  r.seed = opts.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    require_valid(inst);
    r.total_items = inst.total_items();
    std::ostringstream params;
    switch (pipeline) {
      case Pipeline::Exact: {
        const oracle::ExactResult res = oracle::solve_exact(inst, opts.oracle_limit);
        r.log_product = res.value.log_product;
        r.geometric_mean = res.value.geometric_mean;
        r.log_bound = res.value.log_product;
        if (opts.with_ratio) r.ratio = 1.0;
        params << "limit=" << opts.oracle_limit << " visited=" << res.visited;
        break;
      }
      case Pipeline::Market: {
        const market::EquilibriumResult eq =
            market::scaling_algorithm(inst, opts.market_phases);
        const auto bad =
            market::verify_equilibrium(inst, eq.p, eq.x, eq.b, eq.spending, eq.eps_eq);
        if (!bad.empty())
          throw Error(ErrorCode::MalformedMarketState,
                      "equilibrium check failed: " + bad.front().what);
        const Instance norm = rounding::normalize(inst, eq.b);
        rounding::SpendingGraph graph =
            rounding::build_spending_graph(norm, eq.p, eq.x, eq.spending);
        rounding::break_cycles(graph);
        const rounding::RoundResult rounded =
            rounding::round_allocation(norm, eq.p, graph);
        const NswValue val = nsw_value(inst, rounded.x);
        r.log_product = val.log_product;
        r.geometric_mean = val.geometric_mean;
        // Upper bound back on the raw utility scale: the normalized bound
        // plus each agent's log bang-per-buck.
        double bound = rounding::log_upper_bound(eq.p, inst.k);
        for (double bb : eq.b) bound += std::log(bb);
        r.log_bound = bound;
        params << "phases=" << eq.phases << " eps=" << format_double(eq.eps_eq);
        break;
      }
      case Pipeline::Stable: {
        stable::RelaxOptions ro;
        ro.inner_tol = opts.relax_tol;
        ro.outer_max_iter = opts.relax_max_iter;
        const stable::RelaxationSolution sol = stable::solve_relaxation(inst, ro);
        const stable::WelfareEstimate est =
            stable::estimate_expected_welfare(inst, sol.x, opts.trials, opts.seed);
        r.log_product = est.best_product > 0 ? std::log(est.best_product) : kNegInf;
        r.geometric_mean =
            inst.n > 0 ? std::exp(r.log_product / inst.n) : 0.0;
        r.log_bound = sol.value;
        params << "trials=" << opts.trials << " outer=" << sol.outer_iterations
               << (sol.converged ? " converged" : " capped");
        break;
      }
    }
    r.params = params.str();
    if (opts.with_ratio && pipeline != Pipeline::Exact) {
      try {
        const oracle::ExactResult ex = oracle::solve_exact(inst, opts.oracle_limit);
        if (ex.value.log_product == kNegInf) {
          if (r.log_product == kNegInf) r.ratio = 1.0;
        } else {
          r.ratio = std::exp((r.log_product - ex.value.log_product) / inst.n);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SearchSpaceExceeded) throw;
        // Oracle out of reach: bound columns stay filled, ratio stays empty.
      }
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r;
}

std::string report_json(const Report& r) {
  nlohmann::json doc;
  doc["instance"] = r.instance_id;
  doc["pipeline"] = pipeline_name(r.pipeline);
  doc["n"] = r.n;
  doc["m"] = r.m;
  doc["items"] = r.total_items;
  doc["ok"] = r.ok;
  doc["error"] = r.error;
  doc["log_product"] = json_number(r.log_product);
  doc["geometric_mean"] = json_number(r.geometric_mean);
  doc["log_bound"] = json_number(r.log_bound);
  if (r.ratio.has_value()) {
    doc["ratio"] = json_number(*r.ratio);
  } else {
    doc["ratio"] = nullptr;
  }
  doc["wall_ms"] = r.wall_ms;
  doc["seed"] = r.seed;
  doc["params"] = r.params;
  return doc.dump(2) + "\n";
}

std::string report_csv_header() {
  return "instance,pipeline,n,m,items,ok,error,log_product,geometric_mean,"
         "log_bound,ratio,wall_ms,seed,params\n";
}

std::string report_csv_row(const Report& r) {
  std::ostringstream out;
  out << csv_safe(r.instance_id) << ',' << pipeline_name(r.pipeline) << ','
      << r.n << ',' << r.m << ',' << r.total_items << ','
      << (r.ok ? "true" : "false") << ',' << csv_safe(r.error) << ','
      << format_double(r.log_product) << ',' << format_double(r.geometric_mean)
      << ',' << format_double(r.log_bound) << ',';
  if (r.ratio.has_value()) out << format_double(*r.ratio);
  out << ',' << format_double(r.wall_ms) << ',' << r.seed << ','
      << csv_safe(r.params) << '\n';
  return out.str();
}

namespace {

std::string bench_row(int index, const Report& r) {
  std::ostringstream out;
  out << index << ',' << csv_safe(r.instance_id) << ','
      << pipeline_name(r.pipeline) << ',' << r.n << ',' << r.m << ','
      << r.total_items << ',' << r.seed << ',';
  if (r.ok) {
    out << "ok," << format_double(r.log_product) << ','
        << format_double(r.geometric_mean) << ',' << format_double(r.log_bound)
        << ',';
    if (r.ratio.has_value()) out << format_double(*r.ratio);
  } else {
    // Status carries the error code; value columns stay empty so the output
    // never depends on how far a failed run got.
    std::string code = r.error.substr(0, r.error.find(':'));
    out << "error:" << csv_safe(code) << ",,,,";
  }
  out << '\n';
  return out.str();
}

int bench_thread_count(const BenchParams& params, int jobs) {
  int threads = params.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("NSW_SPLC_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, 64);
  return std::min(threads, std::max(jobs, 1));
}

}  // namespace

std::string bench_csv(const BenchParams& params) {
  if (params.count < 0)
    throw Error(ErrorCode::UsageError, "instance count must be nonnegative");
  if (params.k_lo < 1 || params.k_hi < params.k_lo)
    throw Error(ErrorCode::UsageError, "supply bounds must satisfy 1 <= k_lo <= k_hi");
  std::vector<BenchCell> grid = params.grid;
  if (grid.empty())
    for (int n = 1; n <= 3; ++n)
      for (int m = 1; m <= 3; ++m) grid.push_back({n, m});
  for (const BenchCell& cell : grid)
    if (cell.n < 1 || cell.m < 1)
      throw Error(ErrorCode::UsageError, "grid cells need n >= 1 and m >= 1");

  const int jobs = static_cast<int>(grid.size()) * params.count;
  std::vector<std::array<std::string, 3>> rows(std::max(jobs, 0));

  std::atomic<int> cursor{0};
  auto worker = [&]() {
    while (true) {
      const int idx = cursor.fetch_add(1);
      if (idx >= jobs) break;
      const BenchCell cell = grid[idx / params.count];
      const std::uint64_t iseed = Rng::derive(params.seed, idx);
      GenerateParams gp;
      gp.seed = iseed;
      gp.n = cell.n;
      gp.m = cell.m;
      gp.k_lo = params.k_lo;
      gp.k_hi = params.k_hi;
      Instance inst = generate(gp);
      // Redraw until the supply can feed every agent; both approximation
      // pipelines need K >= n to say anything.
      for (int tries = 0; inst.total_items() < cell.n && tries < 64; ++tries) {
        gp.seed = Rng::derive(iseed, 1000 + tries);
        inst = generate(gp);
      }
      std::ostringstream name;
      name << "g" << cell.n << "x" << cell.m << "-" << idx;
      const std::array<Pipeline, 3> pipes = {Pipeline::Exact, Pipeline::Market,
                                             Pipeline::Stable};
      for (size_t pi = 0; pi < pipes.size(); ++pi) {
        PipelineOptions po;
        po.oracle_limit = params.oracle_limit;
        po.trials = params.trials;
        po.seed = iseed;
        po.with_ratio = true;
        const Report rep = run_pipeline(inst, name.str(), pipes[pi], po);
        rows[idx][pi] = bench_row(idx, rep);
      }
    }
  };

  if (jobs > 0) {
    const int threads = bench_thread_count(params, jobs);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::string out = "# nswkit bench csv v1\n";
  out +=
      "index,instance,pipeline,n,m,items,seed,status,log_product,"
      "geometric_mean,log_bound,ratio\n";
  for (const auto& row : rows)
    for (const std::string& line : row) out += line;
  return out;
}

}  // namespace nsw::cli
