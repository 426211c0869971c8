#pragma once

#include <optional>
#include <string>

#include "ho/ambiguity.hpp"
#include "ho/conic.hpp"
#include "ho/loss.hpp"
#include "ho/samples.hpp"

namespace ho {

enum class NormalParam { Variance, StdDev };

// Mean-CVaR portfolio over m assets with a common systematic factor.
struct PortfolioInstance {
  Index assets = 10;
  double cvar_level = 0.2;     // a
  double risk_aversion = 10.0; // rho
  double factor_scale = 0.02;      // phi ~ N(0, .)
  double idio_mean_step = 0.03;    // eps_i ~ N(i * step, i * scale)
  double idio_scale_step = 0.025;
  NormalParam normal_param = NormalParam::Variance;

  std::string to_json() const;
  static PortfolioInstance from_json(const std::string& text);
};

// K=2 pieces over the joint decision (x, tau): piece 1 has xi-slope -x and
// intercept rho*tau; piece 2 has slope -(1+rho/a)x and intercept rho(1-1/a)tau.
PiecewiseAffineLoss portfolio_pieces(double rho, double a, Index assets);

// x >= 0, 1'x = 1, tau free.
DecisionSpace portfolio_space(Index assets);

SampleSet generate_portfolio_samples(const PortfolioInstance& inst, Index n_samples,
                                     std::uint64_t seed);

// Two-stage lot sizing on a network of stores.
struct LotSizingInstance {
  Index stores = 0;
  VectorXd storage_cost;    // a
  MatrixXd transport_cost;  // b, zero diagonal
  VectorXd penalty;         // c
  MatrixXd transport_cap;   // Y
  VectorXd alloc_cap;       // K
  VectorXd demand_lower;    // d_lo
  VectorXd demand_upper;    // d_hi
  VectorXd demand_mean;     // mu
  VectorXd deviation;       // delta

  void validate() const;
  std::string to_json() const;
  static LotSizingInstance from_json(const std::string& text);
};

LotSizingInstance generate_lotsizing_instance(Index stores, std::uint64_t seed);
SampleSet generate_lotsizing_demands(const LotSizingInstance& inst, Index n_samples,
                                     std::uint64_t seed);

// Second-stage recourse: cheapest transshipment + shortage penalty.
double second_stage_cost(const LotSizingInstance& inst, const VectorXd& x, const VectorXd& xi);

// 2m+1 atoms walking each coordinate lo -> mu -> hi, coupled comonotonically.
struct ComonotonePath {
  MatrixXd atoms;  // (2m+1) x m
  VectorXd probs;  // 2m+1

  void validate() const;
  // Probability mass the path places on value `stage` (0: lo, 1: mu, 2: hi)
  // of a coordinate; used by the marginal-projection checks.
  double marginal_mass(Index coordinate, int stage, const VectorXd& lo, const VectorXd& mu,
                       const VectorXd& hi) const;
};

ComonotonePath comonotone_path(const VectorXd& lo, const VectorXd& mu, const VectorXd& hi,
                               const VectorXd& delta);
ComonotonePath comonotone_path(const MadAmbiguity& set);

// Worst-case joint distribution for the instance's own mean/deviation data.
ComonotonePath long_worst_case(const LotSizingInstance& inst);

struct LotSizingSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  VectorXd allocation;
  double objective = 0.0;
  Solution raw;
};

// Extensive-form LP blending the empirical scenarios (weight 1-lambda) with
// the comonotone worst-case atoms (weight lambda). The information side
// defaults to the MAD set estimated from the given samples.
LotSizingSolution lotsizing_ho_solve(const LotSizingInstance& inst, const SampleSet& demands,
                                     double lambda,
                                     const MadAmbiguity* information = nullptr,
                                     const SolveSettings& settings = {});

}  // namespace ho
