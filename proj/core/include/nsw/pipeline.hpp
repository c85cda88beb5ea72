#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsw/instance.hpp"

namespace nsw::cli {

enum class Pipeline { Exact, Market, Stable };

const char* pipeline_name(Pipeline p);

struct PipelineOptions {
  std::uint64_t oracle_limit = 10'000'000;
  std::optional<int> market_phases;
  double relax_tol = 1e-5;
  int relax_max_iter = 600;
  std::uint64_t trials = 10'000;
  std::uint64_t seed = 1;
  bool with_ratio = true;  // also run the oracle and report geometric ratio
};

struct Report {
  std::string instance_id;
  Pipeline pipeline = Pipeline::Exact;
  int n = 0;
  int m = 0;
  int total_items = 0;
  bool ok = true;
  std::string error;         // when !ok
  double log_product = 0.0;  // welfare of the pipeline's allocation
  double geometric_mean = 0.0;
  // Exact: bound = optimum itself. Market: log upper bound at the
  // equilibrium prices. Stable: log of the relaxation value.
  double log_bound = 0.0;
  // geometric-mean ratio vs the exhaustive optimum (same normalized
  // instance on both sides); empty when the oracle was skipped.
  std::optional<double> ratio;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::string params;
};

Report run_pipeline(const Instance& inst, const std::string& instance_id,
                    Pipeline pipeline, const PipelineOptions& opts);

std::string report_json(const Report& r);
std::string report_csv_header();
std::string report_csv_row(const Report& r);

struct BenchCell {
  int n = 0;
  int m = 0;
};

struct BenchParams {
  std::uint64_t seed = 1;
  int count = 4;  // instances per grid cell
  std::vector<BenchCell> grid;
  int k_lo = 1;
  int k_hi = 3;
  std::uint64_t oracle_limit = 10'000'000;
  std::uint64_t trials = 2'000;
  int threads = 0;  // 0: respect NSW_SPLC_THREADS, else hardware
};

// Runs exact/market/stable over the grid; one CSV row per (instance,
// pipeline). Deterministic for a fixed seed: per-instance seeds are derived
// from (seed, index), rows are emitted in index order, and no timing column
// exists. A failing pipeline yields a row with status=error, not a failed
// run.
std::string bench_csv(const BenchParams& params);

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitUsage = 2;

}  // namespace nsw::cli
