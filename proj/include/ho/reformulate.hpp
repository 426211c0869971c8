#pragma once

#include "ho/ambiguity.hpp"
#include "ho/conic.hpp"
#include "ho/loss.hpp"
#include "ho/samples.hpp"

namespace ho {

// One HO problem: loss + decision set + empirical samples + information side,
// blended with weight lambda on information.
struct HOInstance {
  PiecewiseAffineLoss loss;
  DecisionSpace space;
  SampleSet samples;
  AmbiguitySet ambiguity;
  double lambda = 0.0;

  HOInstance(PiecewiseAffineLoss l, DecisionSpace sp, SampleSet sa, AmbiguitySet am,
             double lam);

  std::string to_json() const;
  static HOInstance from_json(const std::string& text);
};

// A conic program whose leading variables are the decision vector x.
struct BuiltProgram {
  ConicProgram program;
  Index decision_dim = 0;

  VectorXd decision(const Solution& sol) const { return sol.x.head(decision_dim); }
};

// SAA epigraph LP (the lambda = 0 endpoint).
BuiltProgram build_saa(const HOInstance& instance);

// HO with the MAD set: LP over (x, w, s, q, pi). The support box is not part
// of the LP (the dual is taken over all of R^m).
BuiltProgram build_ho_mad_lp(const HOInstance& instance);

// HO with the mean-covariance set: SDP over (x, w, s, q, t, Q) with one PSD
// block of order m+1 per loss piece and a second-order epigraph for ||q||_2.
BuiltProgram build_ho_moment_sdp(const HOInstance& instance);

// HO with the generic conic-moment set: the dual program over
// (x, w, pi, tau, kappa, theta_{i,k}).
BuiltProgram build_generic_h1(const HOInstance& instance);

// Dispatch on the ambiguity kind.
BuiltProgram build_ho(const HOInstance& instance);

// Pure information-side programs (no empirical epigraph block).
BuiltProgram build_mad_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                           const MadAmbiguity& set);
BuiltProgram build_moment_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                              const MomentAmbiguity& set);
BuiltProgram build_pure_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                            const AmbiguitySet& set);

enum class GroundNorm { L1, L2, Linf };

// Closed-form type-1 Wasserstein worst case over unbounded support:
// E_P0[f(x, .)] + r * max_k dual-norm(alpha_k(x)).
double wasserstein_penalty_value(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                 const SampleSet& samples, double radius, GroundNorm norm);

// Program minimizing the same penalty over x (epigraph form).
BuiltProgram build_wasserstein_penalty(const PiecewiseAffineLoss& loss,
                                       const DecisionSpace& space, const SampleSet& samples,
                                       double radius, GroundNorm norm);

struct OracleResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double value = 0.0;
};

// Brute-force inner maximization over discrete laws on a support grid;
// independent of the dual reformulations it validates. MAD sets must carry a
// finite box; mean-covariance sets get a box wide enough to contain the
// relevant mass. mu is always injected as a grid point.
OracleResult inner_worst_case_oracle(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                     const AmbiguitySet& ambiguity, int grid_per_axis);

// Objective of a built HO program with the decision pinned at x (epigraph
// variables re-optimized); used by decomposition checks.
double objective_at_fixed_decision(const BuiltProgram& built, const VectorXd& x,
                                   const SolveSettings& settings = {});

// Appends the decision-space rows (inequalities, equalities, bounds) for the
// leading block of x variables.
void add_decision_space_rows(ConicProgram& prog, const DecisionSpace& space);

// Solver-backed nonemptiness pre-check (min 0 over the space's rows).
bool decision_space_feasible(const DecisionSpace& space);

}  // namespace ho
