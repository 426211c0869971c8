#pragma once

#include <string>
#include <vector>

#include "ho/common.hpp"
#include "ho/samples.hpp"

namespace ho {

// One affine piece of f(x, xi) = max_k alpha_k(x)' xi + beta_k(x) with
// alpha_k(x) = A_k x + a_k and beta_k(x) = b_k' x + c_k.
struct LossPiece {
  MatrixXd slope_matrix;   // A_k, m x n
  VectorXd slope_offset;   // a_k, m
  VectorXd intercept_vec;  // b_k, n
  double intercept_scalar = 0.0;  // c_k
};

class PiecewiseAffineLoss {
 public:
  explicit PiecewiseAffineLoss(std::vector<LossPiece> pieces);

  Index num_pieces() const { return static_cast<Index>(pieces_.size()); }
  Index uncertainty_dim() const { return pieces_[0].slope_matrix.rows(); }  // m
  Index decision_dim() const { return pieces_[0].slope_matrix.cols(); }     // n
  const std::vector<LossPiece>& pieces() const { return pieces_; }

  VectorXd alpha(Index k, const VectorXd& x) const;
  double beta(Index k, const VectorXd& x) const;

  std::string to_json() const;
  static PiecewiseAffineLoss from_json(const std::string& text);

 private:
  std::vector<LossPiece> pieces_;
};

// Polyhedral decision set: G x <= h, E x = g, lower <= x <= upper.
// Unbounded sides are +-inf entries.
struct DecisionSpace {
  Index n = 0;
  MatrixXd G;  // may have zero rows
  VectorXd h;
  MatrixXd E;
  VectorXd g;
  VectorXd lower;  // -inf where absent
  VectorXd upper;  // +inf where absent

  static DecisionSpace box(const VectorXd& lo, const VectorXd& hi);
  static DecisionSpace free(Index n);
  // Probability simplex {x >= 0, 1'x = 1} plus extra free coordinates at the end.
  static DecisionSpace simplex(Index m, Index extra_free = 0);

  bool contains(const VectorXd& x, double tol) const;
  void validate() const;

  std::string to_json() const;
  static DecisionSpace from_json(const std::string& text);
};

struct MeanCovPair {
  VectorXd mean;
  MatrixXd covariance;

  MeanCovPair() = default;
  MeanCovPair(VectorXd mu, MatrixXd sigma);
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double half_width = 0.0;
};

double evaluate_loss(const PiecewiseAffineLoss& loss, const VectorXd& x, const VectorXd& xi);

double saa_objective(const PiecewiseAffineLoss& loss, const VectorXd& x, const SampleSet& samples);

// Normal-approximation interval F_N(x) -+ z_{alpha/2} sigma_hat / sqrt(N);
// sigma_hat is the unbiased (N-1) estimator over per-sample losses.
ConfidenceInterval confidence_interval(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                       const SampleSet& samples, double alpha);

}  // namespace ho
