#include "ho/scenred.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ho/rng.hpp"
#include "ho/weights.hpp"

namespace ho {

using Triplet = Eigen::Triplet<double>;
using nlohmann::json;

void ReducedScenarioSet::validate(const SampleSet& source) const {
  require(size() >= 1 && size() <= source.size(), "ReducedScenarioSet: needs 1 <= M <= N");
  require(probabilities.size() == size(), "ReducedScenarioSet: probability length");
  require((probabilities.array() >= 0.0).all(), "ReducedScenarioSet: negative probability");
  require(std::abs(probabilities.sum() - 1.0) <= 1e-12,
          "ReducedScenarioSet: probabilities must sum to 1");
  require(static_cast<Index>(source_indices.size()) == size(),
          "ReducedScenarioSet: index count");
  for (Index j = 0; j < size(); ++j) {
    const int src = source_indices[static_cast<size_t>(j)];
    require(src >= 0 && src < source.size(), "ReducedScenarioSet: index out of range");
    require(atoms.row(j) == source.atoms().row(src),
            "ReducedScenarioSet: atom is not a row of the source set");
  }
}

std::string ReducedScenarioSet::to_csv() const {
  std::ostringstream os;
  os << "index";
  for (Index c = 0; c < atoms.cols(); ++c) os << ",x" << (c + 1);
  os << ",omega\n";
  for (Index j = 0; j < size(); ++j) {
    os << source_indices[static_cast<size_t>(j)];
    for (Index c = 0; c < atoms.cols(); ++c) os << ',' << format_double(atoms(j, c));
    os << ',' << format_double(probabilities(j)) << '\n';
  }
  return os.str();
}

std::string ReducedScenarioSet::to_json() const {
  json j;
  j["method"] = method;
  j["indices"] = source_indices;
  j["atoms"] = json::array();
  for (Index r = 0; r < size(); ++r) {
    json row = json::array();
    for (Index c = 0; c < atoms.cols(); ++c) row.push_back(atoms(r, c));
    j["atoms"].push_back(std::move(row));
  }
  j["omega"] = std::vector<double>(probabilities.data(), probabilities.data() + size());
  if (achieved_distance) j["achieved_distance"] = *achieved_distance;
  if (lambda) j["lambda"] = *lambda;
  return j.dump();
}

double wasserstein_type_l(const SampleSet& p, const SampleSet& q, double l) {
  require(l >= 1.0, "wasserstein_type_l: l must be >= 1");
  require(p.dim() == q.dim(), "wasserstein_type_l: dimension mismatch");
  const Index n = p.size(), m = q.size();
  ConicProgram prog(n * m);
  VectorXd c(n * m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      c(i * m + j) = std::pow((p.atoms().row(i) - q.atoms().row(j)).norm(), l);
  prog.set_objective(std::move(c));
  {
    // Row marginals eta_i; column marginals omega_j with the last row dropped
    // (implied, both marginals sum to one).
    std::vector<Triplet> trips;
    VectorXd rhs(n + m - 1);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(i * m + j), 1.0);
      rhs(i) = p.weights()(i);
    }
    for (Index j = 0; j + 1 < m; ++j) {
      for (Index i = 0; i < n; ++i)
        trips.emplace_back(static_cast<int>(n + j), static_cast<int>(i * m + j), 1.0);
      rhs(n + j) = q.weights()(j);
    }
    prog.add_zero(trips, std::move(rhs));
  }
  {
    std::vector<Triplet> trips;
    for (Index v = 0; v < n * m; ++v)
      trips.emplace_back(static_cast<int>(v), static_cast<int>(v), -1.0);
    prog.add_nonneg(trips, VectorXd::Zero(n * m));
  }
  auto sol = solve(prog);
  require(sol.status == SolveStatus::Optimal,
          std::string("wasserstein_type_l: transportation LP ") + to_string(sol.status));
  return std::pow(std::max(sol.objective, 0.0), 1.0 / l);
}

namespace {

// Nearest support atom per source atom; ties toward the lowest support slot.
std::vector<int> nearest_assignment(const SampleSet& p, const std::vector<int>& support) {
  std::vector<int> owner(static_cast<size_t>(p.size()), 0);
  for (Index i = 0; i < p.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t j = 0; j < support.size(); ++j) {
      const double d = (p.atoms().row(i) - p.atoms().row(support[j])).norm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    owner[static_cast<size_t>(i)] = arg;
  }
  return owner;
}

double assignment_distance(const SampleSet& p, const std::vector<int>& support, double l) {
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int s : support) best = std::min(best, (p.atoms().row(i) - p.atoms().row(s)).norm());
    acc += p.weights()(i) * std::pow(best, l);
  }
  return std::pow(acc, 1.0 / l);
}

ReducedScenarioSet make_reduced(const SampleSet& p, std::vector<int> indices, VectorXd omega,
                                std::string method) {
  ReducedScenarioSet out;
  out.atoms.resize(static_cast<Index>(indices.size()), p.dim());
  for (size_t j = 0; j < indices.size(); ++j)
    out.atoms.row(static_cast<Index>(j)) = p.atoms().row(indices[j]);
  out.source_indices = std::move(indices);
  out.probabilities = std::move(omega);
  out.method = std::move(method);
  return out;
}

std::vector<int> kmeans_support(const SampleSet& p, Index m_keep, Rng& rng) {
  const Index n = p.size();
  std::vector<int> init =
      rng.sample_without_replacement(static_cast<int>(n), static_cast<int>(m_keep));
  MatrixXd centroids(m_keep, p.dim());
  for (Index j = 0; j < m_keep; ++j)
    centroids.row(j) = p.atoms().row(init[static_cast<size_t>(j)]);
  std::vector<int> owner(static_cast<size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Index j = 0; j < m_keep; ++j) {
        const double d = (p.atoms().row(i) - centroids.row(j)).squaredNorm();
        if (d < best) {
          best = d;
          arg = static_cast<int>(j);
        }
      }
      if (owner[static_cast<size_t>(i)] != arg) {
        owner[static_cast<size_t>(i)] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    for (Index j = 0; j < m_keep; ++j) {
      VectorXd mean = VectorXd::Zero(p.dim());
      double mass = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (owner[static_cast<size_t>(i)] == static_cast<int>(j)) {
          mean += p.atoms().row(i).transpose();
          mass += 1.0;
        }
      }
      if (mass > 0.0) centroids.row(j) = (mean / mass).transpose();
    }
  }
  // Snap each centroid to the nearest not-yet-used sample atom.
  std::vector<bool> used(static_cast<size_t>(n), false);
  std::vector<int> support;
  for (Index j = 0; j < m_keep; ++j) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (Index i = 0; i < n; ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      const double d = (p.atoms().row(i) - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(i);
      }
    }
    used[static_cast<size_t>(arg)] = true;
    support.push_back(arg);
  }
  return support;
}

}  // namespace

FixedSupportResult closest_fixed_support_distance(const SampleSet& p,
                                                  const std::vector<int>& support, double l) {
  require(!support.empty(), "closest_fixed_support_distance: empty support");
  require(l >= 1.0, "closest_fixed_support_distance: l must be >= 1");
  for (int s : support)
    require(s >= 0 && s < p.size(), "closest_fixed_support_distance: index out of range");
  FixedSupportResult res;
  const auto owner = nearest_assignment(p, support);
  res.omega = VectorXd::Zero(static_cast<Index>(support.size()));
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const int j = owner[static_cast<size_t>(i)];
    res.omega(j) += p.weights()(i);
    acc += p.weights()(i) *
           std::pow((p.atoms().row(i) - p.atoms().row(support[static_cast<size_t>(j)])).norm(),
                    l);
  }
  res.distance = std::pow(acc, 1.0 / l);
  return res;
}

VectorXd recover_probabilities(const SampleSet& p, const std::vector<int>& support) {
  require(!support.empty(), "recover_probabilities: empty support");
  for (size_t a = 0; a < support.size(); ++a)
    for (size_t b = a + 1; b < support.size(); ++b)
      require(p.atoms().row(support[a]) != p.atoms().row(support[b]),
              "recover_probabilities: support atoms must be distinct");
  const auto owner = nearest_assignment(p, support);
  VectorXd omega = VectorXd::Zero(static_cast<Index>(support.size()));
  for (Index i = 0; i < p.size(); ++i) omega(owner[static_cast<size_t>(i)]) += 1.0;
  return omega / static_cast<double>(p.size());
}

ReducedScenarioSet local_search_reduce(const SampleSet& p, Index m_keep, double l,
                                       ReduceInit init, std::uint64_t seed,
                                       const std::vector<int>* given_support,
                                       std::vector<double>* trace) {
  require(m_keep >= 1 && m_keep < p.size(), "local_search_reduce: needs 1 <= M < N");
  Rng rng(seed);
  std::vector<int> support;
  switch (init) {
    case ReduceInit::KMeans:
      support = kmeans_support(p, m_keep, rng);
      break;
    case ReduceInit::Random:
      support = rng.sample_without_replacement(static_cast<int>(p.size()),
                                               static_cast<int>(m_keep));
      break;
    case ReduceInit::Given:
      require(given_support != nullptr &&
                  static_cast<Index>(given_support->size()) == m_keep,
              "local_search_reduce: given init needs a support of size M");
      support = *given_support;
      break;
  }
  std::sort(support.begin(), support.end());
  double current = assignment_distance(p, support, l);
  if (trace != nullptr) trace->push_back(current);

  while (true) {
    double best = current;
    int best_in = -1, best_out = -1;
    std::vector<bool> in_support(static_cast<size_t>(p.size()), false);
    for (int s : support) in_support[static_cast<size_t>(s)] = true;
    for (int cand = 0; cand < p.size(); ++cand) {
      if (in_support[static_cast<size_t>(cand)]) continue;
      for (size_t pos = 0; pos < support.size(); ++pos) {
        std::vector<int> trial = support;
        trial[pos] = cand;
        const double d = assignment_distance(p, trial, l);
        if (d < best - 1e-15) {
          best = d;
          best_in = cand;
          best_out = support[pos];
        }
      }
    }
    if (best_in < 0) break;
    for (auto& s : support) {
      if (s == best_out) s = best_in;
    }
    std::sort(support.begin(), support.end());
    current = best;
    if (trace != nullptr) trace->push_back(current);
  }

  auto out = make_reduced(p, support, recover_probabilities(p, support), "local_search");
  out.achieved_distance = current;
  out.validate(p);
  return out;
}

ReducedScenarioSet random_reduce(const SampleSet& p, Index m_keep, std::uint64_t seed) {
  require(m_keep >= 1 && m_keep <= p.size(), "random_reduce: needs 1 <= M <= N");
  Rng rng(seed);
  std::vector<int> indices =
      rng.sample_without_replacement(static_cast<int>(p.size()), static_cast<int>(m_keep));
  VectorXd omega = VectorXd::Constant(m_keep, 1.0 / static_cast<double>(m_keep));
  auto out = make_reduced(p, std::move(indices), std::move(omega), "random");
  out.validate(p);
  return out;
}

HOReduction ho_reduce(const SampleSet& p, Index m_keep, const PiecewiseAffineLoss& loss,
                      const DecisionSpace& space, std::uint64_t seed,
                      const AmbiguityBuilder& builder) {
  require(m_keep >= 1 && m_keep <= p.size(), "ho_reduce: needs 1 <= M <= N");
  ReducedScenarioSet reduced = random_reduce(p, m_keep, seed);
  reduced.method = "ho";
  const double lam = lambda_for_reduction(m_keep, p.size());
  reduced.lambda = lam;
  AmbiguitySet info = builder ? builder(p) : AmbiguitySet(MadAmbiguity::from_samples(p));
  SampleSet kept(reduced.atoms, reduced.probabilities);
  HOInstance instance(loss, space, std::move(kept), std::move(info), lam);
  reduced.validate(p);
  return HOReduction{std::move(reduced), std::move(instance)};
}

}  // namespace ho
