#include "ho/problems.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ho/rng.hpp"

namespace ho {

using Triplet = Eigen::Triplet<double>;
using nlohmann::json;

namespace {
json vec_json(const VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}
VectorXd vec_from(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}
json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}
MatrixXd mat_from(const json& j) {
  const Index r = static_cast<Index>(j.size());
  const Index c = r > 0 ? static_cast<Index>(j[0].size()) : 0;
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}
}  // namespace

std::string PortfolioInstance::to_json() const {
  json j;
  j["assets"] = assets;
  j["cvar_level"] = cvar_level;
  j["risk_aversion"] = risk_aversion;
  j["factor_scale"] = factor_scale;
  j["idio_mean_step"] = idio_mean_step;
  j["idio_scale_step"] = idio_scale_step;
  j["normal_param"] = normal_param == NormalParam::Variance ? "variance" : "stddev";
  return j.dump();
}

PortfolioInstance PortfolioInstance::from_json(const std::string& text) {
  json j = json::parse(text);
  PortfolioInstance p;
  p.assets = j.value("assets", Index{10});
  p.cvar_level = j.value("cvar_level", 0.2);
  p.risk_aversion = j.value("risk_aversion", 10.0);
  p.factor_scale = j.value("factor_scale", 0.02);
  p.idio_mean_step = j.value("idio_mean_step", 0.03);
  p.idio_scale_step = j.value("idio_scale_step", 0.025);
  p.normal_param =
      j.value("normal_param", std::string("variance")) == "stddev" ? NormalParam::StdDev
                                                                   : NormalParam::Variance;
  return p;
}

PiecewiseAffineLoss portfolio_pieces(double rho, double a, Index assets) {
  require(a > 0.0 && a < 1.0, "portfolio_pieces: CVaR level must lie in (0,1)");
  require(rho >= 0.0, "portfolio_pieces: risk aversion must be >= 0");
  const Index n = assets + 1;  // joint decision (x, tau)
  LossPiece p1, p2;
  p1.slope_matrix = MatrixXd::Zero(assets, n);
  p1.slope_matrix.leftCols(assets) = -MatrixXd::Identity(assets, assets);
  p1.slope_offset = VectorXd::Zero(assets);
  p1.intercept_vec = VectorXd::Zero(n);
  p1.intercept_vec(assets) = rho;
  p2 = p1;
  p2.slope_matrix.leftCols(assets) = -(1.0 + rho / a) * MatrixXd::Identity(assets, assets);
  p2.intercept_vec(assets) = rho * (1.0 - 1.0 / a);
  return PiecewiseAffineLoss({p1, p2});
}

DecisionSpace portfolio_space(Index assets) { return DecisionSpace::simplex(assets, 1); }

SampleSet generate_portfolio_samples(const PortfolioInstance& inst, Index n_samples,
                                     std::uint64_t seed) {
  require(n_samples >= 1, "generate_portfolio_samples: N must be >= 1");
  Rng rng(seed);
  const bool var = inst.normal_param == NormalParam::Variance;
  const double factor_sd = var ? std::sqrt(inst.factor_scale) : inst.factor_scale;
  MatrixXd atoms(n_samples, inst.assets);
  for (Index r = 0; r < n_samples; ++r) {
    const double phi = rng.normal(0.0, factor_sd);
    for (Index i = 0; i < inst.assets; ++i) {
      const double scale = (i + 1) * inst.idio_scale_step;
      const double sd = var ? std::sqrt(scale) : scale;
      atoms(r, i) = phi + rng.normal((i + 1) * inst.idio_mean_step, sd);
    }
  }
  return SampleSet(std::move(atoms), seed);
}

void LotSizingInstance::validate() const {
  require(stores >= 1, "LotSizingInstance: needs at least one store");
  require(storage_cost.size() == stores && penalty.size() == stores &&
              alloc_cap.size() == stores && demand_lower.size() == stores &&
              demand_upper.size() == stores && demand_mean.size() == stores &&
              deviation.size() == stores,
          "LotSizingInstance: vector lengths");
  require(transport_cost.rows() == stores && transport_cost.cols() == stores &&
              transport_cap.rows() == stores && transport_cap.cols() == stores,
          "LotSizingInstance: matrix shapes");
  require((storage_cost.array() >= 0).all() && (penalty.array() >= 0).all() &&
              (alloc_cap.array() >= 0).all() && (transport_cost.array() >= 0).all() &&
              (transport_cap.array() >= 0).all(),
          "LotSizingInstance: costs and caps must be nonnegative");
  require((demand_lower.array() <= demand_mean.array()).all() &&
              (demand_mean.array() <= demand_upper.array()).all(),
          "LotSizingInstance: demand mean must lie inside the box");
}

std::string LotSizingInstance::to_json() const {
  json j;
  j["stores"] = stores;
  j["a"] = vec_json(storage_cost);
  j["b"] = mat_json(transport_cost);
  j["c"] = vec_json(penalty);
  j["Y"] = mat_json(transport_cap);
  j["K"] = vec_json(alloc_cap);
  j["d_lower"] = vec_json(demand_lower);
  j["d_upper"] = vec_json(demand_upper);
  j["mu"] = vec_json(demand_mean);
  j["delta"] = vec_json(deviation);
  return j.dump();
}

LotSizingInstance LotSizingInstance::from_json(const std::string& text) {
  json j = json::parse(text);
  LotSizingInstance l;
  l.stores = j.at("stores").get<Index>();
  l.storage_cost = vec_from(j.at("a"));
  l.transport_cost = mat_from(j.at("b"));
  l.penalty = vec_from(j.at("c"));
  l.transport_cap = mat_from(j.at("Y"));
  l.alloc_cap = vec_from(j.at("K"));
  l.demand_lower = vec_from(j.at("d_lower"));
  l.demand_upper = vec_from(j.at("d_upper"));
  l.demand_mean = vec_from(j.at("mu"));
  l.deviation = vec_from(j.at("delta"));
  l.validate();
  return l;
}

LotSizingInstance generate_lotsizing_instance(Index stores, std::uint64_t seed) {
  require(stores >= 2, "generate_lotsizing_instance: needs m >= 2");
  Rng rng(seed);
  LotSizingInstance inst;
  inst.stores = stores;
  inst.storage_cost.resize(stores);
  for (Index i = 0; i < stores; ++i) inst.storage_cost(i) = rng.uniform(0.5, 1.5);
  inst.demand_mean.resize(stores);
  inst.demand_lower.resize(stores);
  inst.demand_upper.resize(stores);
  for (Index i = 0; i < stores; ++i) {
    inst.demand_mean(i) = rng.uniform(300.0, 420.0);
    inst.demand_lower(i) = rng.uniform(60.0, inst.demand_mean(i) - 60.0);
    inst.demand_upper(i) = rng.uniform(inst.demand_mean(i) + 60.0, 660.0);
  }
  inst.transport_cost = MatrixXd::Zero(stores, stores);
  for (Index i = 0; i < stores; ++i) {
    for (Index j = 0; j < stores; ++j) {
      if (i == j) continue;
      const Index gap = i > j ? i - j : j - i;
      double base = 4.5;
      // |i-j| in [4k+1, 4(k+1)] -> 1 + 0.5k for bands k = 0..6.
      if (gap >= 1 && gap <= 28) {
        const Index k = (gap - 1) / 4;
        base = 1.0 + 0.5 * static_cast<double>(k);
      }
      inst.transport_cost(i, j) = rng.uniform(base, base + 1.0);
    }
  }
  inst.penalty.resize(stores);
  for (Index i = 0; i < stores; ++i) inst.penalty(i) = 5.0 * inst.transport_cost.col(i).sum();
  inst.transport_cap = MatrixXd::Ones(stores, stores);
  inst.transport_cap.diagonal().setZero();
  inst.alloc_cap = inst.demand_upper;
  // True MAD of the uniform demand on [d_lo, d_hi].
  inst.deviation = (inst.demand_upper - inst.demand_lower) / 4.0;
  inst.validate();
  return inst;
}

SampleSet generate_lotsizing_demands(const LotSizingInstance& inst, Index n_samples,
                                     std::uint64_t seed) {
  require(n_samples >= 1, "generate_lotsizing_demands: N must be >= 1");
  Rng rng(seed);
  MatrixXd atoms(n_samples, inst.stores);
  for (Index r = 0; r < n_samples; ++r)
    for (Index i = 0; i < inst.stores; ++i)
      atoms(r, i) = rng.uniform(inst.demand_lower(i), inst.demand_upper(i));
  return SampleSet(std::move(atoms), seed);
}

namespace {

// One second-stage block: y(m*m, row-major) then z(m). When x_offset < 0 the
// first stage is a constant folded into xi.
void add_second_stage_rows(ConicProgram& prog, const LotSizingInstance& inst, Index x_offset,
                           Index block_offset, const VectorXd& xi) {
  const Index m = inst.stores;
  const Index y_off = block_offset, z_off = block_offset + m * m;
  {  // balance: sum_j y_ji - sum_j y_ij + z_i >= xi_i - x_i
    std::vector<Triplet> trips;
    VectorXd rhs(m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        if (i == j) continue;
        trips.emplace_back(static_cast<int>(i), static_cast<int>(y_off + j * m + i), -1.0);
        trips.emplace_back(static_cast<int>(i), static_cast<int>(y_off + i * m + j), 1.0);
      }
      trips.emplace_back(static_cast<int>(i), static_cast<int>(z_off + i), -1.0);
      if (x_offset >= 0)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(x_offset + i), -1.0);
      rhs(i) = -xi(i);
    }
    prog.add_nonneg(trips, std::move(rhs));
  }
  {  // 0 <= y <= Y, z >= 0
    std::vector<Triplet> trips;
    VectorXd rhs(2 * m * m + m);
    Index row = 0;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) {
        trips.emplace_back(static_cast<int>(row), static_cast<int>(y_off + i * m + j), 1.0);
        rhs(row++) = inst.transport_cap(i, j);
        trips.emplace_back(static_cast<int>(row), static_cast<int>(y_off + i * m + j), -1.0);
        rhs(row++) = 0.0;
      }
    for (Index i = 0; i < m; ++i) {
      trips.emplace_back(static_cast<int>(row), static_cast<int>(z_off + i), -1.0);
      rhs(row++) = 0.0;
    }
    prog.add_nonneg(trips, std::move(rhs));
  }
}

void add_second_stage_cost(VectorXd& c, const LotSizingInstance& inst, Index block_offset,
                           double weight) {
  const Index m = inst.stores;
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j)
      c(block_offset + i * m + j) += weight * inst.transport_cost(i, j);
    c(block_offset + m * m + i) += weight * inst.penalty(i);
  }
}

}  // namespace

double second_stage_cost(const LotSizingInstance& inst, const VectorXd& x, const VectorXd& xi) {
  inst.validate();
  const Index m = inst.stores;
  require(x.size() == m && xi.size() == m, "second_stage_cost: dimension mismatch");
  ConicProgram prog(m * m + m);
  VectorXd c = VectorXd::Zero(m * m + m);
  add_second_stage_cost(c, inst, 0, 1.0);
  prog.set_objective(std::move(c));
  add_second_stage_rows(prog, inst, -1, 0, xi - x);
  auto sol = solve(prog);
  require(sol.status == SolveStatus::Optimal,
          std::string("second_stage_cost: LP ") + to_string(sol.status));
  return sol.objective;
}

void ComonotonePath::validate() const {
  require(probs.size() == atoms.rows(), "ComonotonePath: length mismatch");
  require((probs.array() >= -1e-15).all(), "ComonotonePath: negative probability");
  require(std::abs(probs.sum() - 1.0) <= 1e-12, "ComonotonePath: probabilities must sum to 1");
}

double ComonotonePath::marginal_mass(Index coordinate, int stage, const VectorXd& lo,
                                     const VectorXd& mu, const VectorXd& hi) const {
  const double target =
      stage == 0 ? lo(coordinate) : (stage == 1 ? mu(coordinate) : hi(coordinate));
  double mass = 0.0;
  for (Index r = 0; r < atoms.rows(); ++r)
    if (atoms(r, coordinate) == target) mass += probs(r);
  return mass;
}

ComonotonePath comonotone_path(const VectorXd& lo, const VectorXd& mu, const VectorXd& hi,
                               const VectorXd& delta) {
  const Index m = lo.size();
  require(mu.size() == m && hi.size() == m && delta.size() == m,
          "comonotone_path: dimension mismatch");
  MatrixXd marg(m, 3);
  for (Index i = 0; i < m; ++i)
    marg.row(i) = mad_worst_case_probs(lo(i), mu(i), hi(i), delta(i)).transpose();

  ComonotonePath path;
  path.atoms.resize(2 * m + 1, m);
  path.probs.resize(2 * m + 1);
  std::vector<int> stage(static_cast<size_t>(m), 0);
  VectorXd value = lo;
  VectorXd q(m);
  for (Index i = 0; i < m; ++i) q(i) = marg(i, 0);
  path.atoms.row(0) = value.transpose();
  double p = q.minCoeff();
  path.probs(0) = p;
  for (Index r = 0; r < 2 * m; ++r) {
    // Lowest-index minimal coordinate that can still advance; coordinates at
    // the top value hold at least the common remaining mass, so one exists.
    Index l = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (stage[static_cast<size_t>(i)] >= 2) continue;
      if (q(i) < best - 1e-15) {
        best = q(i);
        l = i;
      }
    }
    require(l >= 0, "comonotone_path: sweep ran out of advanceable coordinates");
    q.array() -= p;
    auto& st = stage[static_cast<size_t>(l)];
    ++st;
    value(l) = st == 1 ? mu(l) : hi(l);
    q(l) = marg(l, st);
    path.atoms.row(r + 1) = value.transpose();
    p = std::max(q.minCoeff(), 0.0);
    path.probs(r + 1) = p;
  }
  path.validate();
  return path;
}

ComonotonePath comonotone_path(const MadAmbiguity& set) {
  require(set.bounded(), "comonotone_path: needs a finite support box");
  return comonotone_path(set.support_lower, set.mean, set.support_upper, set.deviation);
}

ComonotonePath long_worst_case(const LotSizingInstance& inst) {
  inst.validate();
  return comonotone_path(inst.demand_lower, inst.demand_mean, inst.demand_upper,
                         inst.deviation);
}

LotSizingSolution lotsizing_ho_solve(const LotSizingInstance& inst, const SampleSet& demands,
                                     double lambda, const MadAmbiguity* information,
                                     const SolveSettings& settings) {
  inst.validate();
  require(lambda >= 0.0 && lambda <= 1.0, "lotsizing_ho_solve: lambda must lie in [0,1]");
  require(demands.dim() == inst.stores, "lotsizing_ho_solve: demand dimension mismatch");
  const Index m = inst.stores;

  std::vector<std::pair<VectorXd, double>> scenarios;
  if (lambda < 1.0) {
    for (Index j = 0; j < demands.size(); ++j)
      if (demands.weights()(j) > 0.0)
        scenarios.emplace_back(demands.atom(j), (1.0 - lambda) * demands.weights()(j));
  }
  if (lambda > 0.0) {
    MadAmbiguity info =
        information != nullptr ? *information : MadAmbiguity::from_samples(demands);
    ComonotonePath path = comonotone_path(info);
    for (Index r = 0; r < path.probs.size(); ++r)
      if (path.probs(r) > 0.0)
        scenarios.emplace_back(path.atoms.row(r).transpose(), lambda * path.probs(r));
  }

  const Index block = m * m + m;
  const Index total = m + static_cast<Index>(scenarios.size()) * block;
  ConicProgram prog(total);
  VectorXd c = VectorXd::Zero(total);
  c.head(m) = inst.storage_cost;
  for (size_t s = 0; s < scenarios.size(); ++s)
    add_second_stage_cost(c, inst, m + static_cast<Index>(s) * block, scenarios[s].second);
  prog.set_objective(std::move(c));

  for (size_t s = 0; s < scenarios.size(); ++s)
    add_second_stage_rows(prog, inst, 0, m + static_cast<Index>(s) * block, scenarios[s].first);

  {  // 0 <= x <= K
    std::vector<Triplet> trips;
    VectorXd rhs(2 * m);
    for (Index i = 0; i < m; ++i) {
      trips.emplace_back(static_cast<int>(2 * i), static_cast<int>(i), 1.0);
      rhs(2 * i) = inst.alloc_cap(i);
      trips.emplace_back(static_cast<int>(2 * i + 1), static_cast<int>(i), -1.0);
      rhs(2 * i + 1) = 0.0;
    }
    prog.add_nonneg(trips, std::move(rhs));
  }

  LotSizingSolution out;
  out.raw = solve(prog, settings);
  out.status = out.raw.status;
  if (out.status == SolveStatus::Optimal) {
    out.allocation = out.raw.x.head(m);
    out.objective = out.raw.objective;
  }
  return out;
}

}  // namespace ho
