#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ho/common.hpp"

namespace ho {

struct SampleMoments {
  VectorXd mean;
  MatrixXd covariance;  // probability-weighted population form
  VectorXd mad;         // per-coordinate weighted mean absolute deviation
};

// An N x m empirical distribution: atoms with (by default uniform) weights.
// Immutable after construction; operations on it are pure.
class SampleSet {
 public:
  SampleSet(MatrixXd atoms, VectorXd weights,
            std::optional<std::uint64_t> seed = std::nullopt);
  // Uniform weights 1/N.
  explicit SampleSet(MatrixXd atoms, std::optional<std::uint64_t> seed = std::nullopt);

  Index size() const { return atoms_.rows(); }
  Index dim() const { return atoms_.cols(); }
  const MatrixXd& atoms() const { return atoms_; }
  const VectorXd& weights() const { return weights_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  VectorXd atom(Index j) const { return atoms_.row(j).transpose(); }

  SampleMoments moments() const;

  // Subset by row indices (weights renormalized to sum to 1).
  SampleSet select(const std::vector<int>& rows) const;

  // CSV with header x1,...,xm[,weight]; doubles printed with 17 significant
  // digits so finite values round-trip bit exactly.
  std::string to_csv() const;
  static SampleSet from_csv(const std::string& text);
  void save_csv(const std::string& path) const;
  static SampleSet load_csv(const std::string& path);

  std::string to_json() const;
  static SampleSet from_json(const std::string& text);

 private:
  MatrixXd atoms_;
  VectorXd weights_;
  std::optional<std::uint64_t> seed_;
};

// Formats a double with 17 significant digits (shortest exact round-trip not
// required; 17 digits always round-trips).
std::string format_double(double v);

}  // namespace ho
