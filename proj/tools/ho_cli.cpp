// Command-line front end; drives the shared library through the C API only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ho.h"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw CLI::ValidationError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

int fail(ho_status status, const char* what) {
  std::cerr << what << ": " << ho_status_string(status) << " (" << ho_last_error() << ")\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonizing optimization: SAA blended with moment-based DRO"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out;
  long test_samples = 100000;
  double solver_tol = 1e-8;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output file or directory");
  app.add_option("--test-samples", test_samples, "Test samples for benchmarks");
  app.add_option("--solver-tol", solver_tol, "Solver absolute/relative tolerance");

  // solve: one HO instance from JSON.
  auto* solve_cmd = app.add_subcommand("solve", "Solve one HO instance from a JSON file");
  std::string instance_path;
  solve_cmd->add_option("instance", instance_path, "Instance JSON file")->required();

  // estimate: methods (i)-(iv).
  auto* est_cmd = app.add_subcommand("estimate", "Estimate the weight constant C (or lambda)");
  std::string request_path;
  est_cmd->add_option("request", request_path, "Estimation request JSON file")->required();

  // reduce: random | local-search | ho.
  auto* red_cmd = app.add_subcommand("reduce", "Scenario reduction");
  std::string reduce_path;
  red_cmd->add_option("request", reduce_path, "Reduction request JSON file")->required();

  // bench portfolio / bench lotsizing.
  auto* bench_cmd = app.add_subcommand("bench", "Reproduce the benchmark experiments");
  bench_cmd->require_subcommand(1);
  auto* bench_portfolio = bench_cmd->add_subcommand("portfolio", "Mean-CVaR portfolio sweep");
  auto* bench_lotsizing = bench_cmd->add_subcommand("lotsizing", "Lot-sizing scenario reduction");
  std::vector<long> n_values{25, 50, 100, 200};
  std::vector<long> m_values{10};
  std::vector<std::string> methods;
  int replications = 25;
  long assets = 10, stores = 10;
  for (auto* sub : {bench_portfolio, bench_lotsizing}) {
    sub->add_option("--n", n_values, "Training sample sizes");
    sub->add_option("--reps", replications, "Replications per cell");
    sub->add_option("--methods", methods, "Methods to run");
  }
  bench_portfolio->add_option("--assets", assets, "Number of assets");
  bench_lotsizing->add_option("--m", m_values, "Retained scenario counts");
  bench_lotsizing->add_option("--stores", stores, "Number of stores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    if (*solve_cmd) {
      ho_instance* inst = nullptr;
      ho_status st = ho_instance_read_json(instance_path.c_str(), &inst);
      if (st != HO_OK) return fail(st, "solve");
      json options;
      options["abs_tol"] = solver_tol;
      options["rel_tol"] = solver_tol;
      ho_result* result = nullptr;
      st = ho_instance_solve(inst, options.dump().c_str(), &result);
      ho_instance_free(inst);
      if (st != HO_OK) return fail(st, "solve");
      char* text = nullptr;
      ho_result_to_json(result, &text);
      const std::string status = ho_result_status(result);
      std::cout << "status: " << status << "\n";
      if (status == "optimal") {
        std::printf("objective: %.12g\n", ho_result_objective(result));
      }
      if (!out.empty()) write_file(out, text);
      ho_string_free(text);
      const bool ok = status == "optimal" || status == "infeasible" || status == "unbounded";
      ho_result_free(result);
      return ok ? 0 : 2;
    }

    if (*est_cmd) {
      json request = json::parse(read_file(request_path));
      if (!request.contains("seed")) request["seed"] = seed;
      char* report = nullptr;
      ho_status st = ho_estimate(request.dump().c_str(), &report);
      if (st != HO_OK) return fail(st, "estimate");
      std::cout << report << "\n";
      if (!out.empty()) write_file(out, report);
      ho_string_free(report);
      return 0;
    }

    if (*red_cmd) {
      json request = json::parse(read_file(reduce_path));
      if (!request.contains("seed")) request["seed"] = seed;
      char* result = nullptr;
      ho_status st = ho_reduce(request.dump().c_str(), &result);
      if (st != HO_OK) return fail(st, "reduce");
      std::cout << result << "\n";
      if (!out.empty()) write_file(out, result);
      ho_string_free(result);
      return 0;
    }

    if (*bench_cmd) {
      json cfg;
      cfg["master_seed"] = seed;
      cfg["replications"] = replications;
      cfg["test_samples"] = test_samples;
      cfg["solver_tol"] = solver_tol;
      cfg["n_values"] = n_values;
      if (!methods.empty()) cfg["methods"] = methods;
      if (*bench_portfolio) {
        cfg["problem"] = "portfolio";
        cfg["portfolio"] = {{"assets", assets}};
      } else {
        cfg["problem"] = "lotsizing";
        cfg["m_values"] = m_values;
        cfg["lotsizing_stores"] = stores;
      }
      const std::string dir = out.empty() ? std::string("bench_out") : out;
      int failed = 0;
      ho_status st = ho_bench(cfg.dump().c_str(), dir.c_str(), &failed);
      if (st != HO_OK) return fail(st, "bench");
      std::cout << "results written to " << dir << " (failed cells: " << failed << ")\n";
      return failed > 0 ? 2 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
