#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ho/common.hpp"
#include "ho/loss.hpp"
#include "ho/samples.hpp"

namespace ho {

// Support box + pinned mean + bounded per-coordinate mean absolute deviation.
// Support bounds may be +-inf (the LP reformulation treats the support as all
// of R^m; worst-case marginal constructions require a finite box).
struct MadAmbiguity {
  VectorXd support_lower;  // d_lo
  VectorXd support_upper;  // d_hi
  VectorXd mean;           // mu
  VectorXd deviation;      // delta >= 0

  MadAmbiguity(VectorXd lo, VectorXd hi, VectorXd mu, VectorXd delta);
  Index dim() const { return mean.size(); }
  bool bounded() const;

  // From sample moments: mean/MAD of the set, box = componentwise min/max.
  static MadAmbiguity from_samples(const SampleSet& samples);
};

// Mean in an ellipsoid of size gamma1 around mu (shape Sigma), second central
// moment dominated by gamma2 * Sigma. Sigma must be positive definite.
class MomentAmbiguity {
 public:
  MomentAmbiguity(VectorXd mu, MatrixXd sigma, double gamma1, double gamma2);

  Index dim() const { return mean_.size(); }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& covariance() const { return covariance_; }
  double gamma1() const { return gamma1_; }
  double gamma2() const { return gamma2_; }
  // Cached eigendecomposition factors: covariance = U diag(lambda) U'.
  const MatrixXd& eigvecs() const { return eigvecs_; }
  const VectorXd& eigvals() const { return eigvals_; }
  // U * Lambda^{1/2}; covariance = V V'.
  MatrixXd sqrt_factor() const;

 private:
  VectorXd mean_;
  MatrixXd covariance_;
  double gamma1_;
  double gamma2_;
  MatrixXd eigvecs_;
  VectorXd eigvals_;
};

enum class ConfidenceCone { NonnegativeOrthant, SecondOrder };

// One conic-representable confidence set {(xi,u) : c - (C xi + D u) in K}.
struct ConfidenceSet {
  MatrixXd C;  // L x m
  MatrixXd D;  // L x h
  VectorXd c;  // L
  ConfidenceCone cone = ConfidenceCone::NonnegativeOrthant;
  double prob_lower = 1.0;
  double prob_upper = 1.0;
};

// Moment rows E[A xi + B u] = b plus confidence sets with probability bounds.
// Callers are responsible for the strict-feasibility side condition: whenever
// some set has prob_lower < prob_upper, a distribution must exist whose
// probability lies strictly between them. That condition is not checkable
// algorithmically in general and is assumed by the dual reformulation.
struct GenericConicAmbiguity {
  MatrixXd A;  // s x m
  MatrixXd B;  // s x h
  VectorXd b;  // s
  std::vector<ConfidenceSet> sets;
  // ancestors[i] = sorted indices j with C_i a subset of C_j (including i).
  // Empty means "derive": single-set problems get {{0}}; multi-set orthant
  // problems are checked pairwise via LPs; otherwise construction fails.
  std::vector<std::vector<int>> ancestors;

  Index xi_dim() const { return A.cols(); }
  Index aux_dim() const { return B.cols(); }
  void validate() const;
};

using AmbiguitySet = std::variant<MadAmbiguity, MomentAmbiguity, GenericConicAmbiguity>;

// D_H(lambda): mixture (1-lambda) P_0 + lambda P with P in the information set.
struct MixtureAmbiguity {
  SampleSet empirical;
  AmbiguitySet information;
  double lambda = 0.0;

  MixtureAmbiguity(SampleSet emp, AmbiguitySet info, double lam);
};

// Gelbrich distance between mean-covariance pairs. Matrix square roots use
// symmetric eigendecomposition with negative eigenvalues clipped at zero.
double gelbrich_distance(const MeanCovPair& p1, const MeanCovPair& p2);

// Moments of the lambda-mixture of the empirical measure and an information
// distribution with the given moments.
MeanCovPair mixture_moments(const MixtureAmbiguity& mix, const MeanCovPair& info_pair);
MeanCovPair mixture_moments(const MeanCovPair& empirical, const MeanCovPair& info, double lambda);

// Worst-case three-point marginal on {lo, mu, hi} with MAD delta clipped at
// 2(hi-mu)(mu-lo)/(hi-lo). Degenerate endpoints merge into the mean atom.
struct ThreePointLaw {
  std::vector<double> atoms;
  std::vector<double> probs;
  double clipped_deviation = 0.0;  // delta_hat

  double mean() const;
  double mad() const;
  double variance() const;
};

ThreePointLaw mad_worst_case_marginal(double lo, double mu, double hi, double delta);

// Probability of each of {lo, mu, hi} under the worst-case law, without
// merging (zero entries allowed); used by the comonotone sweep.
Eigen::Vector3d mad_worst_case_probs(double lo, double mu, double hi, double delta);

struct MembershipReport {
  bool member = true;
  std::vector<std::string> violations;
};

MembershipReport membership_check(const SampleSet& samples, const MadAmbiguity& set,
                                  double tol = tolerances().membership);
MembershipReport membership_check(const SampleSet& samples, const MomentAmbiguity& set,
                                  double tol = tolerances().membership);

// PSD square root via symmetric eigendecomposition, eigenvalues clipped at 0.
MatrixXd psd_sqrt(const MatrixXd& m);

std::string ambiguity_to_json(const AmbiguitySet& set);
AmbiguitySet ambiguity_from_json(const std::string& text);

}  // namespace ho
