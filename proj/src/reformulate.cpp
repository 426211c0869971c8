#include "ho/reformulate.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace ho {

using Triplet = Eigen::Triplet<double>;
using nlohmann::json;

namespace {

Index ambiguity_dim(const AmbiguitySet& a) {
  if (const auto* mad = std::get_if<MadAmbiguity>(&a)) return mad->dim();
  if (const auto* mc = std::get_if<MomentAmbiguity>(&a)) return mc->dim();
  return std::get<GenericConicAmbiguity>(a).xi_dim();
}

// svec position of entry (i, j), i >= j, for a d x d symmetric matrix.
Index svec_index(Index d, Index i, Index j) { return j * d - j * (j - 1) / 2 + (i - j); }

void add_epigraph_rows(ConicProgram& prog, const PiecewiseAffineLoss& loss,
                       const SampleSet& samples, Index w_offset) {
  const Index n = loss.decision_dim();
  const Index N = samples.size();
  const Index K = loss.num_pieces();
  std::vector<Triplet> trips;
  VectorXd rhs(N * K);
  Index row = 0;
  for (Index j = 0; j < N; ++j) {
    const VectorXd xi = samples.atom(j);
    for (Index k = 0; k < K; ++k) {
      const auto& p = loss.pieces()[static_cast<size_t>(k)];
      const Eigen::RowVectorXd xcoef =
          xi.transpose() * p.slope_matrix + p.intercept_vec.transpose();
      for (Index c = 0; c < n; ++c) {
        if (xcoef(c) != 0.0)
          trips.emplace_back(static_cast<int>(row), static_cast<int>(c), xcoef(c));
      }
      trips.emplace_back(static_cast<int>(row), static_cast<int>(w_offset + j), -1.0);
      rhs(row) = -(p.slope_offset.dot(xi) + p.intercept_scalar);
      ++row;
    }
  }
  prog.add_nonneg(trips, std::move(rhs));
}

void add_nonneg_vars(ConicProgram& prog, Index offset, Index count) {
  std::vector<Triplet> trips;
  for (Index i = 0; i < count; ++i)
    trips.emplace_back(static_cast<int>(i), static_cast<int>(offset + i), -1.0);
  prog.add_nonneg(trips, VectorXd::Zero(count));
}

}  // namespace

void add_decision_space_rows(ConicProgram& prog, const DecisionSpace& space) {
  space.validate();
  if (space.G.rows() > 0) {
    std::vector<Triplet> trips;
    for (Index r = 0; r < space.G.rows(); ++r)
      for (Index c = 0; c < space.n; ++c)
        if (space.G(r, c) != 0.0)
          trips.emplace_back(static_cast<int>(r), static_cast<int>(c), space.G(r, c));
    prog.add_nonneg(trips, space.h);
  }
  if (space.E.rows() > 0) {
    std::vector<Triplet> trips;
    for (Index r = 0; r < space.E.rows(); ++r)
      for (Index c = 0; c < space.n; ++c)
        if (space.E(r, c) != 0.0)
          trips.emplace_back(static_cast<int>(r), static_cast<int>(c), space.E(r, c));
    prog.add_zero(trips, space.g);
  }
  std::vector<Triplet> trips;
  std::vector<double> rhs;
  for (Index i = 0; i < space.n; ++i) {
    if (std::isfinite(space.upper(i))) {
      trips.emplace_back(static_cast<int>(rhs.size()), static_cast<int>(i), 1.0);
      rhs.push_back(space.upper(i));
    }
    if (std::isfinite(space.lower(i))) {
      trips.emplace_back(static_cast<int>(rhs.size()), static_cast<int>(i), -1.0);
      rhs.push_back(-space.lower(i));
    }
  }
  if (!rhs.empty()) {
    prog.add_nonneg(trips, Eigen::Map<VectorXd>(rhs.data(), static_cast<Index>(rhs.size())));
  }
}

bool decision_space_feasible(const DecisionSpace& space) {
  ConicProgram prog(space.n);
  prog.set_objective(VectorXd::Zero(space.n));
  add_decision_space_rows(prog, space);
  return solve(prog).status == SolveStatus::Optimal;
}

HOInstance::HOInstance(PiecewiseAffineLoss l, DecisionSpace sp, SampleSet sa, AmbiguitySet am,
                       double lam)
    : loss(std::move(l)),
      space(std::move(sp)),
      samples(std::move(sa)),
      ambiguity(std::move(am)),
      lambda(lam) {
  require(lambda >= 0.0 && lambda <= 1.0, "HOInstance: lambda must lie in [0,1]");
  require(loss.decision_dim() == space.n, "HOInstance: decision dimension mismatch");
  require(loss.uncertainty_dim() == samples.dim(), "HOInstance: sample dimension mismatch");
  require(ambiguity_dim(ambiguity) == samples.dim(), "HOInstance: ambiguity dimension mismatch");
}

std::string HOInstance::to_json() const {
  json j;
  j["lambda"] = lambda;
  j["loss"] = json::parse(loss.to_json());
  j["space"] = json::parse(space.to_json());
  j["samples"] = json::parse(samples.to_json());
  j["ambiguity"] = json::parse(ambiguity_to_json(ambiguity));
  return j.dump();
}

HOInstance HOInstance::from_json(const std::string& text) {
  json j = json::parse(text);
  return HOInstance(PiecewiseAffineLoss::from_json(j.at("loss").dump()),
                    DecisionSpace::from_json(j.at("space").dump()),
                    SampleSet::from_json(j.at("samples").dump()),
                    ambiguity_from_json(j.at("ambiguity").dump()), j.value("lambda", 0.0));
}

BuiltProgram build_saa(const HOInstance& instance) {
  const Index n = instance.loss.decision_dim();
  const Index N = instance.samples.size();
  ConicProgram prog(n + N);
  VectorXd c = VectorXd::Zero(n + N);
  c.segment(n, N) = instance.samples.weights();
  prog.set_objective(std::move(c));
  add_epigraph_rows(prog, instance.loss, instance.samples, n);
  add_decision_space_rows(prog, instance.space);
  return BuiltProgram{std::move(prog), n};
}

BuiltProgram build_ho_mad_lp(const HOInstance& instance) {
  const auto* mad = std::get_if<MadAmbiguity>(&instance.ambiguity);
  require(mad != nullptr, "build_ho_mad_lp: instance must carry a MAD set");
  const Index n = instance.loss.decision_dim();
  const Index m = instance.loss.uncertainty_dim();
  const Index N = instance.samples.size();
  const Index K = instance.loss.num_pieces();
  const double lam = instance.lambda;
  // Layout: x(n) | w(N) | s | q(m) | pi(m).
  const Index off_w = n, off_s = n + N, off_q = off_s + 1, off_pi = off_q + m;
  ConicProgram prog(off_pi + m);
  VectorXd c = VectorXd::Zero(prog.num_vars());
  c.segment(off_w, N) = (1.0 - lam) * instance.samples.weights();
  c(off_s) = lam;
  c.segment(off_q, m) = lam * mad->deviation;
  prog.set_objective(std::move(c));

  add_epigraph_rows(prog, instance.loss, instance.samples, off_w);

  {  // alpha_k(x)' mu + beta_k(x) <= s
    std::vector<Triplet> trips;
    VectorXd rhs(K);
    for (Index k = 0; k < K; ++k) {
      const auto& p = instance.loss.pieces()[static_cast<size_t>(k)];
      const Eigen::RowVectorXd xcoef =
          mad->mean.transpose() * p.slope_matrix + p.intercept_vec.transpose();
      for (Index cidx = 0; cidx < n; ++cidx)
        if (xcoef(cidx) != 0.0)
          trips.emplace_back(static_cast<int>(k), static_cast<int>(cidx), xcoef(cidx));
      trips.emplace_back(static_cast<int>(k), static_cast<int>(off_s), -1.0);
      rhs(k) = -(p.slope_offset.dot(mad->mean) + p.intercept_scalar);
    }
    prog.add_nonneg(trips, std::move(rhs));
  }

  {  // |alpha_k(x) + pi| <= q componentwise
    std::vector<Triplet> trips;
    VectorXd rhs(2 * K * m);
    Index row = 0;
    for (Index k = 0; k < K; ++k) {
      const auto& p = instance.loss.pieces()[static_cast<size_t>(k)];
      for (int sign : {+1, -1}) {
        for (Index i = 0; i < m; ++i) {
          for (Index cidx = 0; cidx < n; ++cidx) {
            const double v = sign * p.slope_matrix(i, cidx);
            if (v != 0.0) trips.emplace_back(static_cast<int>(row), static_cast<int>(cidx), v);
          }
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_pi + i),
                             static_cast<double>(sign));
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_q + i), -1.0);
          rhs(row) = -sign * p.slope_offset(i);
          ++row;
        }
      }
    }
    prog.add_nonneg(trips, std::move(rhs));
  }

  add_nonneg_vars(prog, off_q, m);
  add_decision_space_rows(prog, instance.space);
  return BuiltProgram{std::move(prog), n};
}

BuiltProgram build_ho_moment_sdp(const HOInstance& instance) {
  const auto* mc = std::get_if<MomentAmbiguity>(&instance.ambiguity);
  require(mc != nullptr, "build_ho_moment_sdp: instance must carry a mean-covariance set");
  const Index n = instance.loss.decision_dim();
  const Index m = instance.loss.uncertainty_dim();
  const Index N = instance.samples.size();
  const Index K = instance.loss.num_pieces();
  const double lam = instance.lambda;
  const MatrixXd V = mc->sqrt_factor();  // U Lambda^{1/2}
  // Layout: x(n) | w(N) | s | q(m) | t | Q(svec m).
  const Index off_w = n, off_s = n + N, off_q = off_s + 1, off_t = off_q + m, off_Q = off_t + 1;
  const Index qsv = svec_len(m);
  ConicProgram prog(off_Q + qsv);
  VectorXd c = VectorXd::Zero(prog.num_vars());
  c.segment(off_w, N) = (1.0 - lam) * instance.samples.weights();
  c(off_s) = lam;
  c(off_t) = lam * std::sqrt(mc->gamma1());
  for (Index i = 0; i < m; ++i) c(off_Q + svec_index(m, i, i)) = lam * mc->gamma2();
  prog.set_objective(std::move(c));

  add_epigraph_rows(prog, instance.loss, instance.samples, off_w);

  {  // ||q||_2 <= t
    std::vector<Triplet> trips;
    trips.emplace_back(0, static_cast<int>(off_t), -1.0);
    for (Index i = 0; i < m; ++i)
      trips.emplace_back(static_cast<int>(1 + i), static_cast<int>(off_q + i), -1.0);
    prog.add_soc(m + 1, trips, VectorXd::Zero(m + 1));
  }

  // One PSD block of order m+1 per piece, sharing s, q and Q.
  const Index D = m + 1;
  const double rt2 = std::sqrt(2.0);
  for (Index k = 0; k < K; ++k) {
    const auto& p = instance.loss.pieces()[static_cast<size_t>(k)];
    std::vector<Triplet> trips;
    VectorXd rhs = VectorXd::Zero(svec_len(D));
    {  // (0,0): s - beta_k(x) - alpha_k(x)' mu
      const Index r = svec_index(D, 0, 0);
      trips.emplace_back(static_cast<int>(r), static_cast<int>(off_s), -1.0);
      const Eigen::RowVectorXd xcoef =
          mc->mean().transpose() * p.slope_matrix + p.intercept_vec.transpose();
      for (Index cidx = 0; cidx < n; ++cidx)
        if (xcoef(cidx) != 0.0)
          trips.emplace_back(static_cast<int>(r), static_cast<int>(cidx), xcoef(cidx));
      rhs(r) = -(p.slope_offset.dot(mc->mean()) + p.intercept_scalar);
    }
    // (1+i, 0): (q - V' alpha_k(x)) / 2, with the svec sqrt(2) factor.
    const MatrixXd VtA = V.transpose() * p.slope_matrix;  // m x n
    const VectorXd Vta = V.transpose() * p.slope_offset;  // m
    for (Index i = 0; i < m; ++i) {
      const Index r = svec_index(D, 1 + i, 0);
      const double s2 = rt2 * 0.5;
      trips.emplace_back(static_cast<int>(r), static_cast<int>(off_q + i), -s2);
      for (Index cidx = 0; cidx < n; ++cidx)
        if (VtA(i, cidx) != 0.0)
          trips.emplace_back(static_cast<int>(r), static_cast<int>(cidx), s2 * VtA(i, cidx));
      rhs(r) = -s2 * Vta(i);
    }
    // (1+i, 1+j): Q_ij; svec coordinates align one-to-one.
    for (Index jcol = 0; jcol < m; ++jcol)
      for (Index irow = jcol; irow < m; ++irow) {
        const Index r = svec_index(D, 1 + irow, 1 + jcol);
        const Index qv = off_Q + svec_index(m, irow, jcol);
        trips.emplace_back(static_cast<int>(r), static_cast<int>(qv), -1.0);
      }
    prog.add_psd(D, trips, std::move(rhs));
  }

  add_decision_space_rows(prog, instance.space);
  return BuiltProgram{std::move(prog), n};
}

namespace {

// Pairwise polyhedral containment for orthant confidence sets, via LPs.
bool orthant_contained(const ConfidenceSet& inner, const ConfidenceSet& outer) {
  const Index dims = inner.C.cols() + inner.D.cols();
  for (Index r = 0; r < outer.C.rows(); ++r) {
    ConicProgram lp(dims);
    VectorXd c(dims);
    c.head(inner.C.cols()) = -outer.C.row(r).transpose();
    c.tail(inner.D.cols()) = -outer.D.row(r).transpose();
    lp.set_objective(std::move(c));
    std::vector<Triplet> trips;
    for (Index rr = 0; rr < inner.C.rows(); ++rr) {
      for (Index cc = 0; cc < inner.C.cols(); ++cc)
        if (inner.C(rr, cc) != 0.0)
          trips.emplace_back(static_cast<int>(rr), static_cast<int>(cc), inner.C(rr, cc));
      for (Index cc = 0; cc < inner.D.cols(); ++cc)
        if (inner.D(rr, cc) != 0.0)
          trips.emplace_back(static_cast<int>(rr), static_cast<int>(inner.C.cols() + cc),
                             inner.D(rr, cc));
    }
    lp.add_nonneg(trips, inner.c);
    auto sol = solve(lp);
    if (sol.status == SolveStatus::Infeasible) return true;  // empty inner set
    if (sol.status != SolveStatus::Optimal) return false;    // unbounded support direction
    if (-sol.objective > outer.c(r) + 1e-7) return false;
  }
  return true;
}

std::vector<std::vector<int>> resolve_ancestors(const GenericConicAmbiguity& g) {
  if (!g.ancestors.empty()) return g.ancestors;
  const int I = static_cast<int>(g.sets.size());
  if (I == 1) return {{0}};
  for (const auto& s : g.sets)
    require(s.cone == ConfidenceCone::NonnegativeOrthant,
            "build_generic_h1: nesting must be declared when non-orthant cones are present");
  std::vector<std::vector<int>> anc(static_cast<size_t>(I));
  for (int i = 0; i < I; ++i) {
    anc[static_cast<size_t>(i)].push_back(i);
    for (int j = 0; j < I; ++j) {
      if (i == j) continue;
      if (orthant_contained(g.sets[static_cast<size_t>(i)], g.sets[static_cast<size_t>(j)]))
        anc[static_cast<size_t>(i)].push_back(j);
    }
    std::sort(anc[static_cast<size_t>(i)].begin(), anc[static_cast<size_t>(i)].end());
  }
  return anc;
}

}  // namespace

BuiltProgram build_generic_h1(const HOInstance& instance) {
  const auto* gen = std::get_if<GenericConicAmbiguity>(&instance.ambiguity);
  require(gen != nullptr, "build_generic_h1: instance must carry a generic conic set");
  gen->validate();
  const auto ancestors = resolve_ancestors(*gen);
  const Index n = instance.loss.decision_dim();
  const Index m = instance.loss.uncertainty_dim();
  const Index h = gen->aux_dim();
  const Index N = instance.samples.size();
  const Index K = instance.loss.num_pieces();
  const Index s_rows = gen->A.rows();
  const Index I = static_cast<Index>(gen->sets.size());
  const double lam = instance.lambda;

  // Layout: x(n) | w(N) | pi(s_rows) | tau(I) | kappa(I) | theta_{i,k} blocks.
  const Index off_w = n, off_pi = n + N, off_tau = off_pi + s_rows, off_kap = off_tau + I;
  std::vector<Index> theta_off(static_cast<size_t>(I * K));
  Index total = off_kap + I;
  for (Index i = 0; i < I; ++i)
    for (Index k = 0; k < K; ++k) {
      theta_off[static_cast<size_t>(i * K + k)] = total;
      total += gen->sets[static_cast<size_t>(i)].C.rows();
    }
  ConicProgram prog(total);
  VectorXd c = VectorXd::Zero(total);
  c.segment(off_w, N) = (1.0 - lam) * instance.samples.weights();
  c.segment(off_pi, s_rows) = lam * gen->b;
  for (Index i = 0; i < I; ++i) {
    c(off_kap + i) = lam * gen->sets[static_cast<size_t>(i)].prob_upper;
    c(off_tau + i) = -lam * gen->sets[static_cast<size_t>(i)].prob_lower;
  }
  prog.set_objective(std::move(c));

  add_epigraph_rows(prog, instance.loss, instance.samples, off_w);

  for (Index i = 0; i < I; ++i) {
    const auto& cs = gen->sets[static_cast<size_t>(i)];
    const Index L = cs.C.rows();
    for (Index k = 0; k < K; ++k) {
      const auto& p = instance.loss.pieces()[static_cast<size_t>(k)];
      const Index toff = theta_off[static_cast<size_t>(i * K + k)];
      {  // c_i' theta + beta_k(x) <= sum_{j in A_i} (kappa_j - tau_j)
        std::vector<Triplet> trips;
        VectorXd rhs(1);
        for (Index cidx = 0; cidx < n; ++cidx)
          if (p.intercept_vec(cidx) != 0.0)
            trips.emplace_back(0, static_cast<int>(cidx), p.intercept_vec(cidx));
        for (Index l = 0; l < L; ++l)
          if (cs.c(l) != 0.0) trips.emplace_back(0, static_cast<int>(toff + l), cs.c(l));
        for (int j : ancestors[static_cast<size_t>(i)]) {
          trips.emplace_back(0, static_cast<int>(off_kap + j), -1.0);
          trips.emplace_back(0, static_cast<int>(off_tau + j), 1.0);
        }
        rhs(0) = -p.intercept_scalar;
        prog.add_nonneg(trips, std::move(rhs));
      }
      {  // C_i' theta + A' pi - A_k x = a_k   (m rows)
        std::vector<Triplet> trips;
        for (Index r = 0; r < m; ++r) {
          for (Index cidx = 0; cidx < n; ++cidx)
            if (p.slope_matrix(r, cidx) != 0.0)
              trips.emplace_back(static_cast<int>(r), static_cast<int>(cidx),
                                 -p.slope_matrix(r, cidx));
          for (Index l = 0; l < L; ++l)
            if (cs.C(l, r) != 0.0)
              trips.emplace_back(static_cast<int>(r), static_cast<int>(toff + l), cs.C(l, r));
          for (Index t = 0; t < s_rows; ++t)
            if (gen->A(t, r) != 0.0)
              trips.emplace_back(static_cast<int>(r), static_cast<int>(off_pi + t), gen->A(t, r));
        }
        prog.add_zero(trips, p.slope_offset);
      }
      if (h > 0) {  // D_i' theta + B' pi = 0   (h rows)
        std::vector<Triplet> trips;
        for (Index r = 0; r < h; ++r) {
          for (Index l = 0; l < L; ++l)
            if (cs.D(l, r) != 0.0)
              trips.emplace_back(static_cast<int>(r), static_cast<int>(toff + l), cs.D(l, r));
          for (Index t = 0; t < s_rows; ++t)
            if (gen->B(t, r) != 0.0)
              trips.emplace_back(static_cast<int>(r), static_cast<int>(off_pi + t), gen->B(t, r));
        }
        prog.add_zero(trips, VectorXd::Zero(h));
      }
      if (cs.cone == ConfidenceCone::NonnegativeOrthant) {
        add_nonneg_vars(prog, toff, L);
      } else {
        std::vector<Triplet> trips;
        for (Index l = 0; l < L; ++l)
          trips.emplace_back(static_cast<int>(l), static_cast<int>(toff + l), -1.0);
        prog.add_soc(L, trips, VectorXd::Zero(L));
      }
    }
  }
  add_nonneg_vars(prog, off_tau, 2 * I);  // tau block then kappa block
  add_decision_space_rows(prog, instance.space);
  return BuiltProgram{std::move(prog), n};
}

BuiltProgram build_ho(const HOInstance& instance) {
  if (std::holds_alternative<MadAmbiguity>(instance.ambiguity)) return build_ho_mad_lp(instance);
  if (std::holds_alternative<MomentAmbiguity>(instance.ambiguity))
    return build_ho_moment_sdp(instance);
  return build_generic_h1(instance);
}

namespace {

// lambda = 1 instance with a single zero-weight-irrelevant dummy sample; the
// epigraph block is priced at zero and cannot move the optimum.
HOInstance pure_instance(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                         const AmbiguitySet& set) {
  MatrixXd atom = MatrixXd::Zero(1, loss.uncertainty_dim());
  return HOInstance(loss, space, SampleSet(std::move(atom)), set, 1.0);
}

}  // namespace

BuiltProgram build_mad_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                           const MadAmbiguity& set) {
  const Index n = loss.decision_dim();
  const Index m = loss.uncertainty_dim();
  const Index K = loss.num_pieces();
  // Layout: x(n) | s | q(m) | pi(m); the MAD LP without the epigraph block.
  const Index off_s = n, off_q = n + 1, off_pi = off_q + m;
  ConicProgram prog(off_pi + m);
  VectorXd c = VectorXd::Zero(prog.num_vars());
  c(off_s) = 1.0;
  c.segment(off_q, m) = set.deviation;
  prog.set_objective(std::move(c));
  {
    std::vector<Triplet> trips;
    VectorXd rhs(K);
    for (Index k = 0; k < K; ++k) {
      const auto& p = loss.pieces()[static_cast<size_t>(k)];
      const Eigen::RowVectorXd xcoef =
          set.mean.transpose() * p.slope_matrix + p.intercept_vec.transpose();
      for (Index cidx = 0; cidx < n; ++cidx)
        if (xcoef(cidx) != 0.0)
          trips.emplace_back(static_cast<int>(k), static_cast<int>(cidx), xcoef(cidx));
      trips.emplace_back(static_cast<int>(k), static_cast<int>(off_s), -1.0);
      rhs(k) = -(p.slope_offset.dot(set.mean) + p.intercept_scalar);
    }
    prog.add_nonneg(trips, std::move(rhs));
  }
  {
    std::vector<Triplet> trips;
    VectorXd rhs(2 * K * m);
    Index row = 0;
    for (Index k = 0; k < K; ++k) {
      const auto& p = loss.pieces()[static_cast<size_t>(k)];
      for (int sign : {+1, -1}) {
        for (Index i = 0; i < m; ++i) {
          for (Index cidx = 0; cidx < n; ++cidx) {
            const double v = sign * p.slope_matrix(i, cidx);
            if (v != 0.0) trips.emplace_back(static_cast<int>(row), static_cast<int>(cidx), v);
          }
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_pi + i),
                             static_cast<double>(sign));
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_q + i), -1.0);
          rhs(row) = -sign * p.slope_offset(i);
          ++row;
        }
      }
    }
    prog.add_nonneg(trips, std::move(rhs));
  }
  add_nonneg_vars(prog, off_q, m);
  add_decision_space_rows(prog, space);
  return BuiltProgram{std::move(prog), n};
}

BuiltProgram build_moment_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                              const MomentAmbiguity& set) {
  return build_ho_moment_sdp(pure_instance(loss, space, set));
}

BuiltProgram build_pure_dro(const PiecewiseAffineLoss& loss, const DecisionSpace& space,
                            const AmbiguitySet& set) {
  if (const auto* mad = std::get_if<MadAmbiguity>(&set)) return build_mad_dro(loss, space, *mad);
  if (const auto* mc = std::get_if<MomentAmbiguity>(&set)) return build_moment_dro(loss, space, *mc);
  return build_generic_h1(pure_instance(loss, space, set));
}

namespace {
double dual_norm(const VectorXd& v, GroundNorm ground) {
  switch (ground) {
    case GroundNorm::L1:
      return v.lpNorm<Eigen::Infinity>();
    case GroundNorm::L2:
      return v.norm();
    case GroundNorm::Linf:
      return v.lpNorm<1>();
  }
  return 0.0;
}
}  // namespace

double wasserstein_penalty_value(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                 const SampleSet& samples, double radius, GroundNorm norm) {
  require(radius >= 0.0, "wasserstein_penalty_value: radius must be >= 0");
  double lip = 0.0;
  for (Index k = 0; k < loss.num_pieces(); ++k)
    lip = std::max(lip, dual_norm(loss.alpha(k, x), norm));
  return saa_objective(loss, x, samples) + radius * lip;
}

BuiltProgram build_wasserstein_penalty(const PiecewiseAffineLoss& loss,
                                       const DecisionSpace& space, const SampleSet& samples,
                                       double radius, GroundNorm norm) {
  require(radius >= 0.0, "build_wasserstein_penalty: radius must be >= 0");
  const Index n = loss.decision_dim();
  const Index m = loss.uncertainty_dim();
  const Index N = samples.size();
  const Index K = loss.num_pieces();
  const Index off_w = n, off_t = n + N;
  const Index off_u = off_t + 1;  // aux |alpha_i| variables, Linf ground only
  const Index total = norm == GroundNorm::Linf ? off_u + K * m : off_t + 1;
  ConicProgram prog(total);
  VectorXd c = VectorXd::Zero(total);
  c.segment(off_w, N) = samples.weights();
  c(off_t) = radius;
  prog.set_objective(std::move(c));
  add_epigraph_rows(prog, loss, samples, off_w);

  for (Index k = 0; k < K; ++k) {
    const auto& p = loss.pieces()[static_cast<size_t>(k)];
    if (norm == GroundNorm::L2) {
      std::vector<Triplet> trips;
      VectorXd rhs = VectorXd::Zero(m + 1);
      trips.emplace_back(0, static_cast<int>(off_t), -1.0);
      for (Index i = 0; i < m; ++i) {
        for (Index cidx = 0; cidx < n; ++cidx)
          if (p.slope_matrix(i, cidx) != 0.0)
            trips.emplace_back(static_cast<int>(1 + i), static_cast<int>(cidx),
                               -p.slope_matrix(i, cidx));
        rhs(1 + i) = p.slope_offset(i);
      }
      prog.add_soc(m + 1, trips, std::move(rhs));
    } else if (norm == GroundNorm::L1) {
      // Dual norm is Linf: |alpha_k(x)_i| <= t.
      std::vector<Triplet> trips;
      VectorXd rhs(2 * m);
      Index row = 0;
      for (int sign : {+1, -1}) {
        for (Index i = 0; i < m; ++i) {
          for (Index cidx = 0; cidx < n; ++cidx) {
            const double v = sign * p.slope_matrix(i, cidx);
            if (v != 0.0) trips.emplace_back(static_cast<int>(row), static_cast<int>(cidx), v);
          }
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_t), -1.0);
          rhs(row) = -sign * p.slope_offset(i);
          ++row;
        }
      }
      prog.add_nonneg(trips, std::move(rhs));
    } else {
      // Dual norm is L1: u_{k,i} >= |alpha_k(x)_i| and sum_i u_{k,i} <= t.
      std::vector<Triplet> trips;
      VectorXd rhs(2 * m + 1);
      Index row = 0;
      for (int sign : {+1, -1}) {
        for (Index i = 0; i < m; ++i) {
          for (Index cidx = 0; cidx < n; ++cidx) {
            const double v = sign * p.slope_matrix(i, cidx);
            if (v != 0.0) trips.emplace_back(static_cast<int>(row), static_cast<int>(cidx), v);
          }
          trips.emplace_back(static_cast<int>(row), static_cast<int>(off_u + k * m + i), -1.0);
          rhs(row) = -sign * p.slope_offset(i);
          ++row;
        }
      }
      for (Index i = 0; i < m; ++i)
        trips.emplace_back(static_cast<int>(row), static_cast<int>(off_u + k * m + i), 1.0);
      trips.emplace_back(static_cast<int>(row), static_cast<int>(off_t), -1.0);
      rhs(row) = 0.0;
      prog.add_nonneg(trips, std::move(rhs));
    }
  }
  add_decision_space_rows(prog, space);
  return BuiltProgram{std::move(prog), n};
}

OracleResult inner_worst_case_oracle(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                     const AmbiguitySet& ambiguity, int grid_per_axis) {
  const Index m = loss.uncertainty_dim();
  require(m <= 3, "inner_worst_case_oracle: m must be <= 3");
  require(grid_per_axis >= 2 && grid_per_axis <= 50,
          "inner_worst_case_oracle: grid resolution must lie in [2, 50]");
  require(x.size() == loss.decision_dim(), "inner_worst_case_oracle: decision dimension");
  const auto* mad = std::get_if<MadAmbiguity>(&ambiguity);
  const auto* mc = std::get_if<MomentAmbiguity>(&ambiguity);
  require(mad != nullptr || mc != nullptr,
          "inner_worst_case_oracle: supports MAD and mean-covariance sets");

  VectorXd lo(m), hi(m), mu(m);
  if (mad != nullptr) {
    require(mad->bounded(), "inner_worst_case_oracle: MAD set needs a finite support box");
    lo = mad->support_lower;
    hi = mad->support_upper;
    mu = mad->mean;
  } else {
    mu = mc->mean();
    for (Index i = 0; i < m; ++i) {
      const double sii = mc->covariance()(i, i);
      const double span = std::sqrt(mc->gamma1() * sii) + 3.0 * std::sqrt(mc->gamma2() * sii);
      lo(i) = mu(i) - span;
      hi(i) = mu(i) + span;
    }
  }

  std::vector<std::vector<double>> axes(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) {
    auto& ax = axes[static_cast<size_t>(i)];
    for (int gidx = 0; gidx < grid_per_axis; ++gidx)
      ax.push_back(lo(i) + (hi(i) - lo(i)) * gidx / (grid_per_axis - 1));
    ax.push_back(mu(i));
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
  }
  Index npts = 1;
  for (const auto& ax : axes) npts *= static_cast<Index>(ax.size());
  require(npts <= 200000, "inner_worst_case_oracle: grid too large");

  MatrixXd pts(npts, m);
  for (Index g = 0; g < npts; ++g) {
    Index rem = g;
    for (Index i = 0; i < m; ++i) {
      const auto& ax = axes[static_cast<size_t>(i)];
      pts(g, i) = ax[static_cast<size_t>(rem % static_cast<Index>(ax.size()))];
      rem /= static_cast<Index>(ax.size());
    }
  }

  ConicProgram prog(npts);
  VectorXd c(npts);
  for (Index g = 0; g < npts; ++g) c(g) = -evaluate_loss(loss, x, pts.row(g).transpose());
  prog.set_objective(std::move(c));

  {  // sum p = 1
    std::vector<Triplet> trips;
    for (Index g = 0; g < npts; ++g) trips.emplace_back(0, static_cast<int>(g), 1.0);
    VectorXd one(1);
    one << 1.0;
    prog.add_zero(trips, std::move(one));
  }
  if (mad != nullptr) {
    {  // mean pinned
      std::vector<Triplet> trips;
      for (Index i = 0; i < m; ++i)
        for (Index g = 0; g < npts; ++g)
          if (pts(g, i) != 0.0)
            trips.emplace_back(static_cast<int>(i), static_cast<int>(g), pts(g, i));
      prog.add_zero(trips, mu);
    }
    {  // MAD bounded by delta
      std::vector<Triplet> trips;
      for (Index i = 0; i < m; ++i)
        for (Index g = 0; g < npts; ++g) {
          const double v = std::abs(pts(g, i) - mu(i));
          if (v != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(g), v);
        }
      prog.add_nonneg(trips, mad->deviation);
    }
  } else {
    {  // mean ellipsoid: ||Sigma^{-1/2}(sum p xi - mu)|| <= sqrt(gamma1)
      const MatrixXd isqrt = mc->eigvecs() *
                             mc->eigvals().cwiseSqrt().cwiseInverse().asDiagonal() *
                             mc->eigvecs().transpose();
      std::vector<Triplet> trips;
      VectorXd rhs = VectorXd::Zero(m + 1);
      rhs(0) = std::sqrt(mc->gamma1());
      const VectorXd shift = isqrt * mu;
      for (Index i = 0; i < m; ++i) {
        for (Index g = 0; g < npts; ++g) {
          const double v = isqrt.row(i).dot(pts.row(g));
          if (v != 0.0) trips.emplace_back(static_cast<int>(1 + i), static_cast<int>(g), -v);
        }
        rhs(1 + i) = -shift(i);
      }
      prog.add_soc(m + 1, trips, std::move(rhs));
    }
    {  // second-moment dominance
      std::vector<Triplet> trips;
      for (Index g = 0; g < npts; ++g) {
        const VectorXd d = pts.row(g).transpose() - mu;
        const VectorXd col = svec(d * d.transpose());
        for (Index r = 0; r < col.size(); ++r)
          if (col(r) != 0.0)
            trips.emplace_back(static_cast<int>(r), static_cast<int>(g), col(r));
      }
      prog.add_psd(m, trips, svec(mc->gamma2() * mc->covariance()));
    }
  }
  add_nonneg_vars(prog, 0, npts);

  auto sol = solve(prog);
  OracleResult res;
  res.status = sol.status;
  if (sol.status == SolveStatus::Optimal) res.value = -sol.objective;
  return res;
}

double objective_at_fixed_decision(const BuiltProgram& built, const VectorXd& x,
                                   const SolveSettings& settings) {
  require(x.size() == built.decision_dim, "objective_at_fixed_decision: dimension mismatch");
  ConicProgram prog = built.program;
  for (Index i = 0; i < x.size(); ++i) prog.fix_variable(i, x(i));
  auto sol = solve(prog, settings);
  require(sol.status == SolveStatus::Optimal,
          std::string("objective_at_fixed_decision: solve status ") + to_string(sol.status));
  return sol.objective;
}

}  // namespace ho
