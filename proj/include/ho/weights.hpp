#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ho/ambiguity.hpp"
#include "ho/loss.hpp"
#include "ho/samples.hpp"

namespace ho {

enum class WeightRule { COverSqrtN, ReductionRate, Fixed };

// lambda policy: C / sqrt(N) clamped to [0,1]; Fixed holds lambda itself;
// ReductionRate is the scenario-reduction rule 1 - sqrt(M/N).
struct WeightPolicy {
  double constant = 0.0;
  WeightRule rule = WeightRule::COverSqrtN;
  std::string provenance;

  double lambda_for(Index n_samples) const;
};

double estimate_c_fixed(Index m0);
double lambda_for_reduction(Index m_kept, Index n_total);

struct FiniteSampleConfig {
  double c1 = 1.0;
  double c2 = 1.0;
  double beta = 0.05;
  double tail_exponent = 3.0;  // a > 2
  Index dimension = 1;         // m

  FiniteSampleConfig() = default;
  FiniteSampleConfig(double c1_, double c2_, double beta_, double a_, Index m_);
};

// Radius implied by the finite-sample confidence requirement.
double epsilon_from_beta(const FiniteSampleConfig& cfg, Index n_samples);

// Approximate boundary distance g(lambda): minimum Gelbrich distance between
// the empirical moments and the moments of lambda-mixtures with extremal
// information components (per-coordinate worst-case three-point laws under
// independent coupling, at deviation scales k/family_size, k = 1..family_size).
double g_of_lambda(const SampleSet& samples, const MadAmbiguity& set, double lambda,
                   int family_size = 64);

struct BisectionResult {
  double lambda_star = 1.0;
  bool threshold_unreachable = false;  // g(1) < epsilon
  bool monotonicity_warning = false;
  int evaluations = 0;
};

BisectionResult bisection_lambda_star(const std::function<double(double)>& g, double epsilon,
                                      double delta = 1e-6);

struct EstimationReport {
  std::string method;
  double constant = 0.0;
  std::vector<double> fold_constants;
  double wall_seconds = 0.0;

  std::string to_json() const;
};

// Problem adapter for cross-validation: solve the HO model on a training set
// at a given lambda and score a decision on a validation set (lower better).
struct CrossValProblem {
  std::function<VectorXd(const SampleSet& train, double lambda)> solve_ho;
  std::function<double(const VectorXd& x, const SampleSet& validation)> evaluate;
};

// K-fold estimation of C. The default split trains on one fold and validates
// on the remaining K-1 (the reverse of common practice);
// train_on_single_fold=false flips to the standard split.
EstimationReport estimate_c_crossval(const CrossValProblem& problem, const SampleSet& samples,
                                     std::vector<double> candidate_grid, int folds,
                                     std::uint64_t seed, bool train_on_single_fold = true);

// Adapter for the confidence-interval-tightening method: SAA and pure-DRO
// solves on the training fold plus per-sample validation losses for a
// candidate decision.
struct GapProblem {
  std::function<VectorXd(const SampleSet& train)> solve_saa;
  std::function<VectorXd(const SampleSet& train)> solve_dro;
  std::function<VectorXd(const VectorXd& x, const SampleSet& validation)> losses;
  const DecisionSpace* space = nullptr;  // optional feasibility screen
};

EstimationReport estimate_c_gap(const GapProblem& problem, const SampleSet& samples, int folds,
                                double alpha, double c_lo, double c_hi, double tol,
                                std::uint64_t seed, bool train_on_single_fold = true);

// Deterministic fold split helper (shared by both estimators and tests).
std::vector<std::vector<int>> fold_indices(Index n, int folds, std::uint64_t seed);

}  // namespace ho
