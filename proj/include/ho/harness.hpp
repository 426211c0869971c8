#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ho/problems.hpp"
#include "ho/samples.hpp"

namespace ho {

// Mean CVaR-augmented portfolio objective on a test set. tau is re-optimized
// exactly (the objective is piecewise affine in tau with breakpoints at the
// per-sample losses) unless a frozen value is supplied.
double portfolio_out_of_sample(double rho, double a, const VectorXd& weights,
                               const SampleSet& test,
                               std::optional<double> frozen_tau = std::nullopt);

// a' x + mean second-stage cost over the test scenarios.
double lotsizing_out_of_sample(const LotSizingInstance& inst, const VectorXd& x,
                               const SampleSet& test);

// |opt_M - opt*| / |opt*| * 100.
double approximation_error(double opt_m, double opt_star);

struct ExperimentConfig {
  std::string problem = "portfolio";  // portfolio | lotsizing
  std::vector<Index> n_values = {25, 50, 100, 200};
  std::vector<Index> m_values = {10};  // kept scenarios (lotsizing reduction)
  std::vector<std::string> methods;    // defaults depend on the problem
  int replications = 25;
  Index test_samples = 100000;
  std::uint64_t master_seed = 0;
  std::string out_dir;
  double solver_tol = 1e-8;

  // Portfolio specifics.
  PortfolioInstance portfolio;
  double wasserstein_radius_lo = 1e-3;
  double wasserstein_radius_hi = 1.0;
  int wasserstein_radius_grid = 10;
  int cv_folds = 5;
  double gamma1 = 0.1;  // mean-ellipsoid size of the moment set
  double gamma2 = 1.5;  // covariance factor of the moment set
  bool freeze_tau = false;

  // Lot-sizing specifics.
  Index lotsizing_stores = 10;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

struct ResultRecord {
  std::string method;
  Index n = 0;       // training samples
  Index m_kept = 0;  // retained scenarios (0 when not a reduction)
  int replication = 0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double out_of_sample = 0.0;
  double error_percent = std::numeric_limits<double>::quiet_NaN();
  double prep_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct CellAggregate {
  std::string method;
  Index n = 0;
  Index m_kept = 0;
  double mean_oos = 0.0;
  double mean_error_percent = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  int successes = 0;
  double mean_prep_seconds = 0.0;
  double mean_solve_seconds = 0.0;
};

struct ExperimentTable {
  ExperimentConfig config;
  std::vector<ResultRecord> records;
  std::vector<CellAggregate> cells;
  int estimation_calls = 0;  // C estimations performed (estimate-once audit)

  // results.csv carries no wall-clock columns; timings.csv does.
  std::string results_csv() const;
  std::string timings_csv() const;
  std::string results_json() const;
  void write(const std::string& dir) const;
  int failed_cells() const;
};

ExperimentTable run_experiment(const ExperimentConfig& config);

}  // namespace ho
