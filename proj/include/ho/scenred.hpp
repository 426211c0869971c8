#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ho/reformulate.hpp"
#include "ho/samples.hpp"

namespace ho {

// M retained atoms with recovered probabilities and provenance indices.
struct ReducedScenarioSet {
  std::vector<int> source_indices;
  MatrixXd atoms;  // M x m, rows of the source set
  VectorXd probabilities;
  std::string method;
  std::optional<double> achieved_distance;  // G'_l for distance-driven methods
  std::optional<double> lambda;             // weight used by the HO reduction

  Index size() const { return atoms.rows(); }
  void validate(const SampleSet& source) const;

  std::string to_csv() const;
  std::string to_json() const;
};

// Type-l Wasserstein distance between two discrete laws via the
// transportation LP with cost ||xi_i - zeta_j||_2^l.
double wasserstein_type_l(const SampleSet& p, const SampleSet& q, double l);

struct FixedSupportResult {
  double distance = 0.0;
  VectorXd omega;
};

// Distance from p to the closest law supported on the given atoms (indices
// into p): each atom moves wholly to its nearest support point.
FixedSupportResult closest_fixed_support_distance(const SampleSet& p,
                                                  const std::vector<int>& support, double l);

// omega_j = |I_j| / N with nearest-atom cells I_j; ties break toward the
// lowest support index.
VectorXd recover_probabilities(const SampleSet& p, const std::vector<int>& support);

enum class ReduceInit { KMeans, Random, Given };

// Best-improvement swap local search on the support set. When trace is
// non-null it receives G'_l after the init and after every accepted swap.
ReducedScenarioSet local_search_reduce(const SampleSet& p, Index m_keep, double l,
                                       ReduceInit init, std::uint64_t seed,
                                       const std::vector<int>* given_support = nullptr,
                                       std::vector<double>* trace = nullptr);

ReducedScenarioSet random_reduce(const SampleSet& p, Index m_keep, std::uint64_t seed);

using AmbiguityBuilder = std::function<AmbiguitySet(const SampleSet&)>;

struct HOReduction {
  ReducedScenarioSet reduced;
  HOInstance instance;
};

// Random selection of M atoms plus an HO instance whose information side is
// extracted from all N samples and whose weight is 1 - sqrt(M/N).
HOReduction ho_reduce(const SampleSet& p, Index m_keep, const PiecewiseAffineLoss& loss,
                      const DecisionSpace& space, std::uint64_t seed,
                      const AmbiguityBuilder& builder = nullptr);

}  // namespace ho
