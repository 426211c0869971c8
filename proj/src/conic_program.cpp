#include "ho/conic.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace ho {

using nlohmann::json;

VectorXd svec(const MatrixXd& s) {
  const Index d = s.rows();
  require(s.cols() == d, "svec: matrix must be square");
  VectorXd v(svec_len(d));
  const double rt2 = std::sqrt(2.0);
  Index idx = 0;
  for (Index j = 0; j < d; ++j) {
    v(idx++) = s(j, j);
    for (Index i = j + 1; i < d; ++i) v(idx++) = rt2 * 0.5 * (s(i, j) + s(j, i));
  }
  return v;
}

MatrixXd smat(const VectorXd& v) {
  // Invert d(d+1)/2 = len.
  const Index len = v.size();
  const Index d = static_cast<Index>(std::llround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  require(svec_len(d) == len, "smat: length is not a triangular number");
  MatrixXd s(d, d);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  Index idx = 0;
  for (Index j = 0; j < d; ++j) {
    s(j, j) = v(idx++);
    for (Index i = j + 1; i < d; ++i) {
      s(i, j) = s(j, i) = v(idx++) * inv_rt2;
    }
  }
  return s;
}

void ConicProgram::add_block(Cone cone, Index dim,
                             const std::vector<Eigen::Triplet<double>>& entries, VectorXd rhs) {
  require(dim >= 1, "ConicProgram: block dimension must be >= 1");
  if (cone == Cone::SecondOrder) require(dim >= 2, "ConicProgram: SOC dimension must be >= 2");
  const Index rows = cone == Cone::Psd ? svec_len(dim) : dim;
  require(rhs.size() == rows, "ConicProgram: block rhs length mismatch");
  ConstraintBlock blk;
  blk.cone = cone;
  blk.dim = dim;
  blk.b = std::move(rhs);
  blk.A.resize(rows, n_);
  for (const auto& t : entries) {
    require(t.row() >= 0 && t.row() < rows && t.col() >= 0 && t.col() < n_,
            "ConicProgram: triplet out of range");
    require(std::isfinite(t.value()), "ConicProgram: non-finite coefficient");
  }
  blk.A.setFromTriplets(entries.begin(), entries.end());
  require(blk.b.allFinite(), "ConicProgram: non-finite rhs");
  blocks_.push_back(std::move(blk));
}

void ConicProgram::fix_variable(Index var, double value) {
  require(var >= 0 && var < n_, "ConicProgram::fix_variable: index out of range");
  std::vector<Eigen::Triplet<double>> t{{0, static_cast<int>(var), 1.0}};
  VectorXd rhs(1);
  rhs << value;
  add_zero(t, std::move(rhs));
}

Index ConicProgram::total_rows() const {
  Index r = 0;
  for (const auto& b : blocks_) r += b.rows();
  return r;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {
const char* cone_name(Cone c) {
  switch (c) {
    case Cone::Zero: return "zero";
    case Cone::Nonnegative: return "nonnegative";
    case Cone::SecondOrder: return "second_order";
    case Cone::Psd: return "psd";
  }
  return "unknown";
}

Cone cone_from(const std::string& s) {
  if (s == "zero") return Cone::Zero;
  if (s == "nonnegative") return Cone::Nonnegative;
  if (s == "second_order") return Cone::SecondOrder;
  if (s == "psd") return Cone::Psd;
  throw ArgumentError("ConicProgram JSON: unknown cone '" + s + "'");
}
}  // namespace

std::string ConicProgram::to_json() const {
  json j;
  j["num_vars"] = n_;
  j["objective"] = std::vector<double>(c_.data(), c_.data() + c_.size());
  j["blocks"] = json::array();
  for (const auto& blk : blocks_) {
    json bj;
    bj["cone"] = cone_name(blk.cone);
    bj["dim"] = blk.dim;
    bj["b"] = std::vector<double>(blk.b.data(), blk.b.data() + blk.b.size());
    json entries = json::array();
    for (int k = 0; k < blk.A.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(blk.A, k); it; ++it) {
        entries.push_back({it.row(), it.col(), it.value()});
      }
    }
    bj["entries"] = std::move(entries);
    j["blocks"].push_back(std::move(bj));
  }
  return j.dump();
}

ConicProgram ConicProgram::from_json(const std::string& text) {
  json j = json::parse(text);
  ConicProgram p(j.at("num_vars").get<Index>());
  VectorXd c(p.num_vars());
  const auto& cj = j.at("objective");
  require(static_cast<Index>(cj.size()) == p.num_vars(), "ConicProgram JSON: objective length");
  for (Index i = 0; i < c.size(); ++i) c(i) = cj[i].get<double>();
  p.set_objective(std::move(c));
  for (const auto& bj : j.at("blocks")) {
    const Cone cone = cone_from(bj.at("cone").get<std::string>());
    const Index dim = bj.at("dim").get<Index>();
    const auto& rv = bj.at("b");
    VectorXd b(static_cast<Index>(rv.size()));
    for (Index i = 0; i < b.size(); ++i) b(i) = rv[i].get<double>();
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& e : bj.at("entries")) {
      entries.emplace_back(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
    }
    p.add_block(cone, dim, entries, std::move(b));
  }
  return p;
}

ViolationReport verify_solution(const ConicProgram& program, const Solution& solution,
                                double tol) {
  require(solution.status == SolveStatus::Optimal, "verify_solution: solution not optimal");
  require(solution.x.size() == program.num_vars(), "verify_solution: solution length");
  ViolationReport rep;
  for (size_t bi = 0; bi < program.blocks().size(); ++bi) {
    const auto& blk = program.blocks()[bi];
    VectorXd slack = blk.b - blk.A * solution.x;
    double v = 0.0;
    switch (blk.cone) {
      case Cone::Zero:
        v = slack.cwiseAbs().maxCoeff();
        break;
      case Cone::Nonnegative:
        v = std::max(0.0, -slack.minCoeff());
        break;
      case Cone::SecondOrder:
        v = std::max(0.0, slack.tail(slack.size() - 1).norm() - slack(0));
        break;
      case Cone::Psd: {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(slack));
        v = std::max(0.0, -es.eigenvalues().minCoeff());
        break;
      }
    }
    if (v > tol) rep.blocks.push_back({bi, blk.cone, v});
    rep.max_violation = std::max(rep.max_violation, v);
  }
  return rep;
}

}  // namespace ho
