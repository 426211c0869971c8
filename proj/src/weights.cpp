#include "ho/weights.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ho/rng.hpp"
#include "ho/stats.hpp"

namespace ho {

using nlohmann::json;

double WeightPolicy::lambda_for(Index n_samples) const {
  require(n_samples >= 1, "WeightPolicy: N must be >= 1");
  switch (rule) {
    case WeightRule::COverSqrtN:
      require(constant >= 0.0, "WeightPolicy: C must be >= 0");
      return std::min(1.0, constant / std::sqrt(static_cast<double>(n_samples)));
    case WeightRule::Fixed:
      return std::clamp(constant, 0.0, 1.0);
    case WeightRule::ReductionRate:
      throw ArgumentError("WeightPolicy: reduction rule needs lambda_for_reduction(M, N)");
  }
  return 0.0;
}

double estimate_c_fixed(Index m0) {
  require(m0 >= 1, "estimate_c_fixed: M0 must be >= 1");
  return std::sqrt(static_cast<double>(m0));
}

double lambda_for_reduction(Index m_kept, Index n_total) {
  require(m_kept >= 1 && m_kept <= n_total, "lambda_for_reduction: needs 1 <= M <= N");
  return 1.0 - std::sqrt(static_cast<double>(m_kept) / static_cast<double>(n_total));
}

FiniteSampleConfig::FiniteSampleConfig(double c1_, double c2_, double beta_, double a_, Index m_)
    : c1(c1_), c2(c2_), beta(beta_), tail_exponent(a_), dimension(m_) {
  require(c1 > 0.0 && c2 > 0.0, "FiniteSampleConfig: c1, c2 must be positive");
  require(beta > 0.0 && beta < 1.0, "FiniteSampleConfig: beta must lie in (0,1)");
  require(tail_exponent > 2.0, "FiniteSampleConfig: tail exponent must exceed 2");
  require(dimension >= 1, "FiniteSampleConfig: dimension must be >= 1");
}

double epsilon_from_beta(const FiniteSampleConfig& cfg, Index n_samples) {
  require(n_samples >= 1, "epsilon_from_beta: N must be >= 1");
  const double lg = std::log(cfg.c1 / cfg.beta);
  require(lg > 0.0, "epsilon_from_beta: beta must be below c1");
  const double ratio = lg / (cfg.c2 * static_cast<double>(n_samples));
  if (static_cast<double>(n_samples) >= lg / cfg.c2) {
    const double expo = std::max(static_cast<double>(cfg.dimension) / 2.0, 2.0);
    return std::pow(ratio, 1.0 / expo);
  }
  return std::pow(ratio, 2.0 / cfg.tail_exponent);
}

double g_of_lambda(const SampleSet& samples, const MadAmbiguity& set, double lambda,
                   int family_size) {
  require(lambda >= 0.0 && lambda <= 1.0, "g_of_lambda: lambda must lie in [0,1]");
  require(family_size >= 1, "g_of_lambda: empty candidate family");
  require(samples.dim() == set.dim(), "g_of_lambda: dimension mismatch");
  require(set.bounded(), "g_of_lambda: needs a finite support box");
  const auto mom = samples.moments();
  const MeanCovPair empirical(mom.mean, mom.covariance);
  const Index m = set.dim();
  double best = std::numeric_limits<double>::infinity();
  for (int kf = 1; kf <= family_size; ++kf) {
    const double scale = static_cast<double>(kf) / family_size;
    VectorXd var(m);
    for (Index i = 0; i < m; ++i) {
      auto law = mad_worst_case_marginal(set.support_lower(i), set.mean(i),
                                         set.support_upper(i), scale * set.deviation(i));
      var(i) = law.variance();
    }
    // Independent coupling of the per-coordinate laws: mean mu, diagonal cov.
    MeanCovPair info(set.mean, MatrixXd(var.asDiagonal()));
    const MeanCovPair mixed = mixture_moments(empirical, info, lambda);
    best = std::min(best, gelbrich_distance(empirical, mixed));
  }
  return best;
}

BisectionResult bisection_lambda_star(const std::function<double(double)>& g, double epsilon,
                                      double delta) {
  require(delta > 0.0, "bisection_lambda_star: delta must be positive");
  BisectionResult res;
  const double g0 = g(0.0);
  const double g1 = g(1.0);
  res.evaluations = 2;
  if (g0 > g1 + 1e-9) res.monotonicity_warning = true;
  if (g1 < epsilon) {
    res.threshold_unreachable = true;
    res.lambda_star = 1.0;
    return res;
  }
  double lo = 0.0, hi = 1.0, mid = 0.5;
  do {
    mid = 0.5 * (lo + hi);
    ++res.evaluations;
    if (g(mid) >= epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  } while (hi - lo >= delta);
  res.lambda_star = mid;
  return res;
}

std::string EstimationReport::to_json() const {
  json j;
  j["method"] = method;
  j["C"] = constant;
  j["fold_constants"] = fold_constants;
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

std::vector<std::vector<int>> fold_indices(Index n, int folds, std::uint64_t seed) {
  require(folds >= 2, "fold split: needs K >= 2");
  require(n >= folds, "fold split: needs N >= K");
  Rng rng(seed);
  std::vector<int> order =
      rng.sample_without_replacement(static_cast<int>(n), static_cast<int>(n));
  std::vector<std::vector<int>> out(static_cast<size_t>(folds));
  for (Index i = 0; i < n; ++i)
    out[static_cast<size_t>(i % folds)].push_back(order[static_cast<size_t>(i)]);
  return out;
}

namespace {

std::pair<SampleSet, SampleSet> split_fold(const SampleSet& samples,
                                           const std::vector<std::vector<int>>& folds, int k,
                                           bool train_on_single_fold) {
  std::vector<int> in_fold = folds[static_cast<size_t>(k)];
  std::vector<int> rest;
  for (size_t i = 0; i < folds.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    rest.insert(rest.end(), folds[i].begin(), folds[i].end());
  }
  // Inverted split: fold k is the training set, the rest validate.
  if (train_on_single_fold) return {samples.select(in_fold), samples.select(rest)};
  return {samples.select(rest), samples.select(in_fold)};
}

double sigma_hat(const VectorXd& losses) {
  const Index n = losses.size();
  if (n < 2) return 0.0;
  const double mean = losses.mean();
  return std::sqrt((losses.array() - mean).square().sum() / static_cast<double>(n - 1));
}

}  // namespace

EstimationReport estimate_c_crossval(const CrossValProblem& problem, const SampleSet& samples,
                                     std::vector<double> candidate_grid, int folds,
                                     std::uint64_t seed, bool train_on_single_fold) {
  const auto t0 = std::chrono::steady_clock::now();
  require(!candidate_grid.empty(), "estimate_c_crossval: empty candidate grid");
  std::sort(candidate_grid.begin(), candidate_grid.end());
  const auto split = fold_indices(samples.size(), folds, seed);
  EstimationReport rep;
  rep.method = "cross_validation";
  for (int k = 0; k < folds; ++k) {
    auto [train, validation] = split_fold(samples, split, k, train_on_single_fold);
    double best_value = std::numeric_limits<double>::infinity();
    double best_c = std::numeric_limits<double>::quiet_NaN();
    for (double c : candidate_grid) {
      const double lambda = std::min(1.0, c / std::sqrt(static_cast<double>(train.size())));
      VectorXd x;
      try {
        x = problem.solve_ho(train, lambda);
      } catch (const std::exception&) {
        continue;  // candidate eliminated (infeasible or failed solve)
      }
      const double value = problem.evaluate(x, validation);
      if (value < best_value) {
        best_value = value;
        best_c = c;
      }
    }
    if (std::isfinite(best_value)) rep.fold_constants.push_back(best_c);
  }
  require(!rep.fold_constants.empty(), "estimate_c_crossval: all candidate solves failed");
  double acc = 0.0;
  for (double c : rep.fold_constants) acc += c;
  rep.constant = acc / static_cast<double>(rep.fold_constants.size());
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

EstimationReport estimate_c_gap(const GapProblem& problem, const SampleSet& samples, int folds,
                                double alpha, double c_lo, double c_hi, double tol,
                                std::uint64_t seed, bool train_on_single_fold) {
  const auto t0 = std::chrono::steady_clock::now();
  require(c_lo >= 0.0 && c_hi > c_lo, "estimate_c_gap: invalid search range");
  require(tol > 0.0, "estimate_c_gap: tolerance must be positive");
  const double z = z_quantile(alpha);
  const auto split = fold_indices(samples.size(), folds, seed);
  EstimationReport rep;
  rep.method = "gap_tightening";
  for (int k = 0; k < folds; ++k) {
    auto [train, validation] = split_fold(samples, split, k, train_on_single_fold);
    const VectorXd x_saa = problem.solve_saa(train);
    const VectorXd x_dro = problem.solve_dro(train);
    const double sqrt_n = std::sqrt(static_cast<double>(train.size()));
    const double inf = std::numeric_limits<double>::infinity();
    bool any_feasible = false;
    auto objective = [&](double c) {
      const double lambda = c / sqrt_n;
      const VectorXd x = (1.0 - lambda) * x_saa + lambda * x_dro;
      if (problem.space != nullptr && !problem.space->contains(x, 1e-9)) return inf;
      any_feasible = true;
      const VectorXd v = problem.losses(x, validation);
      return z * sigma_hat(v) / std::sqrt(static_cast<double>(validation.size()));
    };
    // Golden-section search; flat objectives resolve to the range midpoint.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = c_lo, hi = c_hi;
    double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
    double f1 = objective(m1), f2 = objective(m2);
    double fmin = std::min(f1, f2), fmax = std::max(f1, f2);
    while (hi - lo > tol) {
      if (f1 <= f2) {
        hi = m2;
        m2 = m1;
        f2 = f1;
        m1 = hi - gr * (hi - lo);
        f1 = objective(m1);
      } else {
        lo = m1;
        m1 = m2;
        f1 = f2;
        m2 = lo + gr * (hi - lo);
        f2 = objective(m2);
      }
      fmin = std::min(fmin, std::min(f1, f2));
      fmax = std::max(fmax, std::max(f1, f2));
    }
    require(any_feasible, "estimate_c_gap: x(C) infeasible across the entire range");
    const bool flat =
        std::isfinite(fmax) && fmax - fmin <= 1e-14 * std::max(1.0, std::abs(fmax));
    rep.fold_constants.push_back(flat ? 0.5 * (c_lo + c_hi) : 0.5 * (lo + hi));
  }
  double acc = 0.0;
  for (double c : rep.fold_constants) acc += c;
  rep.constant = acc / static_cast<double>(rep.fold_constants.size());
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace ho
