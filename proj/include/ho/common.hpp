#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ho {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Raised on contract violations (dimension mismatches, invalid parameters).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ArgumentError(what);
}

// Numeric tolerances shared across modules.
struct Tolerances {
  double feasibility = 1e-8;
  double equality = 1e-8;
  double weight_sum = 1e-12;   // probability vectors must sum to 1 within this
  double psd = 1e-10;          // eigenvalue slack when checking PSD-ness
  double membership = 1e-6;    // default ambiguity membership tolerance
};

inline const Tolerances& tolerances() {
  static const Tolerances tol{};
  return tol;
}

inline bool all_finite(const Eigen::Ref<const MatrixXd>& m) {
  return m.allFinite();
}

}  // namespace ho
