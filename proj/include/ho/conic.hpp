#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "ho/common.hpp"

namespace ho {

enum class Cone { Zero, Nonnegative, SecondOrder, Psd };

// svec length for a symmetric d x d matrix (scaled lower-triangular,
// column-major, off-diagonals multiplied by sqrt(2)).
inline Index svec_len(Index d) { return d * (d + 1) / 2; }
VectorXd svec(const MatrixXd& s);
MatrixXd smat(const VectorXd& v);

// One constraint block: b - A x must lie in the tagged cone.
//   Zero:        A x = b
//   Nonnegative: A x <= b componentwise
//   SecondOrder: s = b - A x with s0 >= ||s_1:||
//   Psd:         smat(b - A x) positive semidefinite (rows = svec entries)
struct ConstraintBlock {
  Cone cone = Cone::Nonnegative;
  Index dim = 0;  // rows for zero/nonneg/soc; matrix order for psd
  Eigen::SparseMatrix<double> A;
  VectorXd b;

  Index rows() const { return cone == Cone::Psd ? svec_len(dim) : dim; }
};

class ConicProgram {
 public:
  explicit ConicProgram(Index num_vars) : n_(num_vars), c_(VectorXd::Zero(num_vars)) {
    require(num_vars >= 1, "ConicProgram: needs at least one variable");
  }

  Index num_vars() const { return n_; }
  const VectorXd& objective() const { return c_; }
  void set_objective(VectorXd c) {
    require(c.size() == n_, "ConicProgram: objective length");
    c_ = std::move(c);
  }
  void add_objective_term(Index var, double coeff) { c_(var) += coeff; }

  const std::vector<ConstraintBlock>& blocks() const { return blocks_; }

  // Triplet-based block assembly.
  void add_block(Cone cone, Index dim, const std::vector<Eigen::Triplet<double>>& entries,
                 VectorXd rhs);
  void add_zero(const std::vector<Eigen::Triplet<double>>& entries, VectorXd rhs) {
    const Index dim = rhs.size();
    add_block(Cone::Zero, dim, entries, std::move(rhs));
  }
  void add_nonneg(const std::vector<Eigen::Triplet<double>>& entries, VectorXd rhs) {
    const Index dim = rhs.size();
    add_block(Cone::Nonnegative, dim, entries, std::move(rhs));
  }
  void add_soc(Index dim, const std::vector<Eigen::Triplet<double>>& entries, VectorXd rhs) {
    add_block(Cone::SecondOrder, dim, entries, std::move(rhs));
  }
  void add_psd(Index dim, const std::vector<Eigen::Triplet<double>>& entries, VectorXd rhs) {
    add_block(Cone::Psd, dim, entries, std::move(rhs));
  }

  // Pins variable `var` to `value` through a zero-cone row.
  void fix_variable(Index var, double value);

  Index total_rows() const;

  // Debug-format JSON (documented in the README; not a stability-guaranteed
  // interchange format).
  std::string to_json() const;
  static ConicProgram from_json(const std::string& text);

 private:
  Index n_;
  VectorXd c_;
  std::vector<ConstraintBlock> blocks_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  VectorXd x;
  double objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
};

struct SolveSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iter = 200;
  bool equilibrate = true;
};

// Homogeneous self-dual interior-point solve. Infeasible/unbounded are
// reported through the status, never thrown; backend breakdowns surface as
// NumericalFailure.
Solution solve(const ConicProgram& program, const SolveSettings& settings = {});

struct BlockViolation {
  size_t block = 0;
  Cone cone = Cone::Nonnegative;
  double violation = 0.0;
};

struct ViolationReport {
  double max_violation = 0.0;
  std::vector<BlockViolation> blocks;
};

// Recomputes every block residual from scratch (independent of the solver).
ViolationReport verify_solution(const ConicProgram& program, const Solution& solution,
                                double tol = 1e-6);

}  // namespace ho
