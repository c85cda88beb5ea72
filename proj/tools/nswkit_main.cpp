// Command line front end: generation, validation, the exhaustive solver, the
// market and relaxation pipelines, equilibrium verification and the bench
// harness. Exit codes: 0 success, 1 pipeline/data error, 2 usage error.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsw/errors.hpp"
#include "nsw/generate.hpp"
#include "nsw/io.hpp"
#include "nsw/market.hpp"
#include "nsw/oracle.hpp"
#include "nsw/pipeline.hpp"
#include "nsw/rounding.hpp"
#include "nsw/stable.hpp"
#include "nsw/welfare.hpp"

namespace {

using nlohmann::json;
using nsw::Allocation;
using nsw::Error;
using nsw::ErrorCode;
using nsw::Instance;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

std::string base_name(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

json triple_json(const std::vector<std::vector<std::vector<double>>>& v) {
  return json(v);
}

std::vector<std::vector<std::vector<double>>> triple_from_json(const json& j) {
  return j.get<std::vector<std::vector<std::vector<double>>>>();
}

json equilibrium_json(const Instance& inst, const nsw::market::EquilibriumResult& eq) {
  json doc;
  doc["n"] = inst.n;
  doc["m"] = inst.m;
  doc["p"] = eq.p;
  doc["b"] = eq.b;
  doc["eps_eq"] = eq.eps_eq;
  doc["delta_final"] = eq.delta_final;
  doc["phases"] = eq.phases;
  doc["x"] = triple_json(eq.x.x);
  doc["base"] = triple_json(eq.spending.base);
  doc["extra"] = triple_json(eq.spending.extra);
  doc["stats"] = {
      {"iterations", eq.stats.iterations},
      {"events_inferior", eq.stats.events_inferior},
      {"events_superior", eq.stats.events_superior},
      {"events_capacity", eq.stats.events_capacity},
      {"events_budget", eq.stats.events_budget},
      {"events_boundary", eq.stats.events_boundary},
      {"band_ok", eq.stats.band_ok},
      {"max_band_violation", eq.stats.max_band_violation},
      {"monotone_ok", eq.stats.monotone_ok},
      {"surplus_bound_ok", eq.stats.surplus_bound_ok},
  };
  return doc;
}

std::string trace_lines(const nsw::market::TraceSink& trace) {
  std::string out;
  for (const auto& e : trace) {
    json line = {
        {"phase", e.phase},         {"iteration", e.iteration},
        {"delta", e.delta},         {"event", nsw::market::event_kind_name(e.kind)},
        {"gamma", e.gamma},         {"surplus", e.surplus},
        {"p", e.p},                 {"b", e.b},
    };
    out += line.dump() + "\n";
  }
  return out;
}

void emit_report(const nsw::cli::Report& report, bool csv, const std::string& out) {
  if (csv) {
    write_text(out, nsw::cli::report_csv_header() + nsw::cli::report_csv_row(report));
  } else {
    write_text(out, nsw::cli::report_json(report));
  }
}

int finish_report(const nsw::cli::Report& report, bool csv, const std::string& out) {
  emit_report(report, csv, out);
  if (!report.ok) {
    std::cerr << report.error << "\n";
    return nsw::cli::kExitPipelineError;
  }
  return nsw::cli::kExitOk;
}

std::vector<nsw::cli::BenchCell> parse_grid(const std::string& spec) {
  std::vector<nsw::cli::BenchCell> cells;
  if (spec.empty()) return cells;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const size_t x = tok.find('x');
    if (x == std::string::npos)
      throw Error(ErrorCode::UsageError, "grid cell '" + tok + "' is not NxM");
    try {
      nsw::cli::BenchCell cell;
      cell.n = std::stoi(tok.substr(0, x));
      cell.m = std::stoi(tok.substr(x + 1));
      cells.push_back(cell);
    } catch (const std::exception&) {
      throw Error(ErrorCode::UsageError, "grid cell '" + tok + "' is not NxM");
    }
  }
  return cells;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash social welfare toolkit for indivisible items"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ---- gen ---------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("gen", "Generate a random instance");
    auto params = std::make_shared<nsw::GenerateParams>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--seed", params->seed, "RNG seed");
    cmd->add_option("--n", params->n, "agents");
    cmd->add_option("--m", params->m, "item types");
    cmd->add_option("--k-lo", params->k_lo, "min copies per type");
    cmd->add_option("--k-hi", params->k_hi, "max copies per type");
    cmd->add_option("--u1-lo", params->u1_lo, "min first marginal");
    cmd->add_option("--u1-hi", params->u1_hi, "max first marginal");
    cmd->add_option("--out", *out, "output file (default stdout)");
    cmd->callback([&action, params, out]() {
      action = [params, out]() {
        const Instance inst = nsw::generate(*params);
        std::ostringstream buf;
        nsw::save_instance(inst, buf);
        write_text(*out, buf.str());
        return nsw::cli::kExitOk;
      };
    });
  }

  // ---- validate ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("validate", "Check an instance file");
    auto path = std::make_shared<std::string>();
    cmd->add_option("instance", *path, "instance JSON file")->required();
    cmd->callback([&action, path]() {
      action = [path]() {
        const Instance inst = nsw::load_instance_file(*path);
        json doc;
        doc["ok"] = true;
        doc["n"] = inst.n;
        doc["m"] = inst.m;
        doc["items"] = inst.total_items();
        doc["search_space"] = nsw::oracle::search_space_size(inst);
        doc["value_ratio"] = inst.max_value_ratio();
        std::cout << doc.dump(2) << "\n";
        return nsw::cli::kExitOk;
      };
    });
  }

  // ---- solve-exact ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("solve-exact", "Exhaustive optimum");
    struct Opts {
      std::string path, out, alloc_out;
      std::uint64_t limit = nsw::oracle::kDefaultLimit;
      bool csv = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--limit", o->limit, "search space cap");
    cmd->add_flag("--csv", o->csv, "report as CSV instead of JSON");
    cmd->add_option("--out", o->out, "report file (default stdout)");
    cmd->add_option("--alloc-out", o->alloc_out, "write the optimal allocation");
    cmd->callback([&action, o]() {
      action = [o]() {
        const Instance inst = nsw::load_instance_file(o->path);
        nsw::cli::PipelineOptions po;
        po.oracle_limit = o->limit;
        const auto report = nsw::cli::run_pipeline(inst, base_name(o->path),
                                                   nsw::cli::Pipeline::Exact, po);
        if (report.ok && !o->alloc_out.empty()) {
          const auto res = nsw::oracle::solve_exact(inst, o->limit);
          nsw::save_allocation_file(res.best, o->alloc_out);
        }
        return finish_report(report, o->csv, o->out);
      };
    });
  }

  // ---- market-eq -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("market-eq",
                                   "Spending-restricted equilibrium prices");
    struct Opts {
      std::string path, out, trace;
      std::optional<int> phases;
      int phases_raw = -1;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--phases", o->phases_raw, "scaling phase count override");
    cmd->add_option("--trace", o->trace, "write one JSON line per event");
    cmd->add_option("--out", o->out, "equilibrium file (default stdout)");
    cmd->callback([&action, o]() {
      if (o->phases_raw > 0) o->phases = o->phases_raw;
      action = [o]() {
        const Instance inst = nsw::load_instance_file(o->path);
        nsw::market::TraceSink trace;
        nsw::market::TraceSink* sink = o->trace.empty() ? nullptr : &trace;
        const auto eq = nsw::market::scaling_algorithm(inst, o->phases, sink);
        if (sink) write_text(o->trace, trace_lines(trace));
        const auto bad = nsw::market::verify_equilibrium(inst, eq.p, eq.x, eq.b,
                                                         eq.spending, eq.eps_eq);
        json doc = equilibrium_json(inst, eq);
        doc["violations"] = json::array();
        for (const auto& v : bad) doc["violations"].push_back(v.what);
        write_text(o->out, doc.dump(2) + "\n");
        if (!bad.empty()) {
          std::cerr << "equilibrium check failed: " << bad.front().what << "\n";
          return nsw::cli::kExitPipelineError;
        }
        return nsw::cli::kExitOk;
      };
    });
  }

  // ---- market-round ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "market-round", "Equilibrium pipeline with tree rounding (factor 2)");
    struct Opts {
      std::string path, out, alloc_out;
      std::optional<int> phases;
      int phases_raw = -1;
      bool csv = false;
      bool no_ratio = false;
      std::uint64_t limit = nsw::oracle::kDefaultLimit;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--phases", o->phases_raw, "scaling phase count override");
    cmd->add_option("--limit", o->limit, "oracle cap for the ratio column");
    cmd->add_flag("--csv", o->csv, "report as CSV instead of JSON");
    cmd->add_flag("--no-ratio", o->no_ratio, "skip the exhaustive comparison");
    cmd->add_option("--out", o->out, "report file (default stdout)");
    cmd->add_option("--alloc-out", o->alloc_out, "write the rounded allocation");
    cmd->callback([&action, o]() {
      if (o->phases_raw > 0) o->phases = o->phases_raw;
      action = [o]() {
        const Instance inst = nsw::load_instance_file(o->path);
        nsw::cli::PipelineOptions po;
        po.market_phases = o->phases;
        po.oracle_limit = o->limit;
        po.with_ratio = !o->no_ratio;
        const auto report = nsw::cli::run_pipeline(inst, base_name(o->path),
                                                   nsw::cli::Pipeline::Market, po);
        if (report.ok && !o->alloc_out.empty()) {
          const auto eq = nsw::market::scaling_algorithm(inst, o->phases);
          const Instance norm = nsw::rounding::normalize(inst, eq.b);
          auto graph = nsw::rounding::build_spending_graph(norm, eq.p, eq.x, eq.spending);
          nsw::rounding::break_cycles(graph);
          const auto rounded = nsw::rounding::round_allocation(norm, eq.p, graph);
          nsw::save_allocation_file(rounded.x, o->alloc_out);
        }
        return finish_report(report, o->csv, o->out);
      };
    });
  }

  // ---- stable-relax ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "stable-relax", "Convex relaxation via the companion polynomial");
    struct Opts {
      std::string path, out, x_out;
      nsw::stable::RelaxOptions ro;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--tol", o->ro.inner_tol, "inner gradient tolerance");
    cmd->add_option("--max-iter", o->ro.outer_max_iter, "outer iteration cap");
    cmd->add_option("--out", o->out, "report file (default stdout)");
    cmd->add_option("--x-out", o->x_out, "write the fractional allocation");
    cmd->callback([&action, o]() {
      action = [o]() {
        const Instance inst = nsw::load_instance_file(o->path);
        const auto sol = nsw::stable::solve_relaxation(inst, o->ro);
        if (!o->x_out.empty()) nsw::save_allocation_file(sol.x, o->x_out);
        json doc;
        doc["value"] = std::isfinite(sol.value) ? json(sol.value) : json("-inf");
        doc["outer_iterations"] = sol.outer_iterations;
        doc["inner_residual"] = sol.inner_residual;
        doc["converged"] = sol.converged;
        doc["alpha"] = sol.alpha;
        doc["y"] = sol.y;
        doc["z"] = sol.z;
        write_text(o->out, doc.dump(2) + "\n");
        return nsw::cli::kExitOk;
      };
    });
  }

  // ---- stable-round ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "stable-round", "Randomized rounding of a fractional allocation");
    struct Opts {
      std::string path, out, x_path;
      std::uint64_t trials = 10'000;
      std::uint64_t seed = 1;
      bool csv = false;
      bool no_ratio = false;
      std::uint64_t limit = nsw::oracle::kDefaultLimit;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--x", o->x_path,
                    "fractional allocation to round (default: solve the relaxation)");
    cmd->add_option("--trials", o->trials, "Monte Carlo trials");
    cmd->add_option("--seed", o->seed, "RNG seed");
    cmd->add_option("--limit", o->limit, "oracle cap for the ratio column");
    cmd->add_flag("--csv", o->csv, "report as CSV instead of JSON");
    cmd->add_flag("--no-ratio", o->no_ratio, "skip the exhaustive comparison");
    cmd->add_option("--out", o->out, "report file (default stdout)");
    cmd->callback([&action, o]() {
      action = [o]() {
        const Instance inst = nsw::load_instance_file(o->path);
        if (!o->x_path.empty()) {
          const Allocation x = nsw::load_allocation_file(o->x_path, inst);
          const auto est =
              nsw::stable::estimate_expected_welfare(inst, x, o->trials, o->seed);
          json doc;
          doc["trials"] = o->trials;
          doc["seed"] = o->seed;
          doc["mean"] = est.mean;
          doc["stderr"] = est.stderr_;
          doc["best_product"] = est.best_product;
          write_text(o->out, doc.dump(2) + "\n");
          return nsw::cli::kExitOk;
        }
        nsw::cli::PipelineOptions po;
        po.trials = o->trials;
        po.seed = o->seed;
        po.oracle_limit = o->limit;
        po.with_ratio = !o->no_ratio;
        const auto report = nsw::cli::run_pipeline(inst, base_name(o->path),
                                                   nsw::cli::Pipeline::Stable, po);
        return finish_report(report, o->csv, o->out);
      };
    });
  }

  // ---- verify ---------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "verify", "Check an allocation or a saved equilibrium");
    struct Opts {
      std::string path, alloc, eq;
      double eps = -1.0;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("instance", o->path, "instance JSON file")->required();
    cmd->add_option("--alloc", o->alloc, "allocation file to check");
    cmd->add_option("--eq", o->eq, "equilibrium file from market-eq");
    cmd->add_option("--eps", o->eps, "equilibrium tolerance override");
    cmd->callback([&action, o]() {
      action = [o]() {
        if (o->alloc.empty() && o->eq.empty())
          throw Error(ErrorCode::UsageError, "nothing to verify: pass --alloc or --eq");
        const Instance inst = nsw::load_instance_file(o->path);
        json doc;
        bool ok = true;
        if (!o->alloc.empty()) {
          const Allocation x = nsw::load_allocation_file(o->alloc, inst);
          const auto value = nsw::nsw_value(inst, x);
          doc["allocation"] = {
              {"ok", true},
              {"log_product", std::isfinite(value.log_product)
                                  ? json(value.log_product)
                                  : json("-inf")},
              {"geometric_mean", value.geometric_mean},
          };
        }
        if (!o->eq.empty()) {
          std::ifstream in(o->eq, std::ios::binary);
          if (!in) throw Error(ErrorCode::IoError, "cannot open " + o->eq);
          json eqdoc = json::parse(in, nullptr, true);
          Allocation x;
          x.x = triple_from_json(eqdoc.at("x"));
          x.integral = false;
          nsw::market::SpendingRecord spending;
          spending.base = triple_from_json(eqdoc.at("base"));
          spending.extra = triple_from_json(eqdoc.at("extra"));
          const auto p = eqdoc.at("p").get<std::vector<double>>();
          const auto b = eqdoc.at("b").get<std::vector<double>>();
          const double eps =
              o->eps >= 0 ? o->eps : eqdoc.at("eps_eq").get<double>();
          const auto bad =
              nsw::market::verify_equilibrium(inst, p, x, b, spending, eps);
          json list = json::array();
          for (const auto& v : bad) list.push_back(v.what);
          doc["equilibrium"] = {{"ok", bad.empty()}, {"eps", eps},
                                {"violations", list}};
          ok = ok && bad.empty();
        }
        std::cout << doc.dump(2) << "\n";
        return ok ? nsw::cli::kExitOk : nsw::cli::kExitPipelineError;
      };
    });
  }

  // ---- bench ------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("bench", "Grid benchmark, CSV on stdout");
    struct Opts {
      nsw::cli::BenchParams bp;
      std::string grid, out;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--seed", o->bp.seed, "base seed");
    cmd->add_option("--count", o->bp.count, "instances per grid cell");
    cmd->add_option("--grid", o->grid, "cells as NxM[,NxM...] (default 1x1..3x3)");
    cmd->add_option("--k-lo", o->bp.k_lo, "min copies per type");
    cmd->add_option("--k-hi", o->bp.k_hi, "max copies per type");
    cmd->add_option("--limit", o->bp.oracle_limit, "oracle search space cap");
    cmd->add_option("--trials", o->bp.trials, "rounding trials per instance");
    cmd->add_option("--threads", o->bp.threads,
                    "worker threads (0: NSW_SPLC_THREADS or hardware)");
    cmd->add_option("--out", o->out, "output file (default stdout)");
    cmd->callback([&action, o]() {
      action = [o]() {
        o->bp.grid = parse_grid(o->grid);
        write_text(o->out, nsw::cli::bench_csv(o->bp));
        return nsw::cli::kExitOk;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nsw::cli::kExitUsage;
  }

  try {
    return action ? action() : nsw::cli::kExitUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::UsageError ? nsw::cli::kExitUsage
                                             : nsw::cli::kExitPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nsw::cli::kExitPipelineError;
  }
}
