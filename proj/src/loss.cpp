#include "ho/loss.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ho/stats.hpp"

namespace ho {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected array of rows");
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return MatrixXd(0, 0);
  const Index c = static_cast<Index>(j[0].size());
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    require(static_cast<Index>(j[i].size()) == c, std::string(what) + ": ragged matrix");
    for (Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected array");
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}
}  // namespace

PiecewiseAffineLoss::PiecewiseAffineLoss(std::vector<LossPiece> pieces)
    : pieces_(std::move(pieces)) {
  require(!pieces_.empty(), "PiecewiseAffineLoss: needs at least one piece");
  const Index m = pieces_[0].slope_matrix.rows();
  const Index n = pieces_[0].slope_matrix.cols();
  for (const auto& p : pieces_) {
    require(p.slope_matrix.rows() == m && p.slope_matrix.cols() == n,
            "PiecewiseAffineLoss: inconsistent slope matrix shape");
    require(p.slope_offset.size() == m, "PiecewiseAffineLoss: slope offset length");
    require(p.intercept_vec.size() == n, "PiecewiseAffineLoss: intercept vector length");
    require(all_finite(p.slope_matrix) && all_finite(p.slope_offset) &&
                all_finite(p.intercept_vec) && std::isfinite(p.intercept_scalar),
            "PiecewiseAffineLoss: entries must be finite");
  }
}

VectorXd PiecewiseAffineLoss::alpha(Index k, const VectorXd& x) const {
  const auto& p = pieces_[static_cast<size_t>(k)];
  return p.slope_matrix * x + p.slope_offset;
}

double PiecewiseAffineLoss::beta(Index k, const VectorXd& x) const {
  const auto& p = pieces_[static_cast<size_t>(k)];
  return p.intercept_vec.dot(x) + p.intercept_scalar;
}

std::string PiecewiseAffineLoss::to_json() const {
  json j;
  j["pieces"] = json::array();
  for (const auto& p : pieces_) {
    json piece;
    piece["A"] = matrix_to_json(p.slope_matrix);
    piece["a"] = vector_to_json(p.slope_offset);
    piece["b"] = vector_to_json(p.intercept_vec);
    piece["c"] = p.intercept_scalar;
    j["pieces"].push_back(std::move(piece));
  }
  return j.dump();
}

PiecewiseAffineLoss PiecewiseAffineLoss::from_json(const std::string& text) {
  json j = json::parse(text);
  require(j.contains("pieces"), "loss JSON: pieces missing");
  std::vector<LossPiece> pieces;
  for (const auto& pj : j["pieces"]) {
    LossPiece p;
    p.slope_matrix = matrix_from_json(pj.at("A"), "loss A");
    p.slope_offset = vector_from_json(pj.at("a"), "loss a");
    p.intercept_vec = vector_from_json(pj.at("b"), "loss b");
    p.intercept_scalar = pj.value("c", 0.0);
    pieces.push_back(std::move(p));
  }
  return PiecewiseAffineLoss(std::move(pieces));
}

DecisionSpace DecisionSpace::box(const VectorXd& lo, const VectorXd& hi) {
  DecisionSpace s;
  s.n = lo.size();
  s.G.resize(0, s.n);
  s.h.resize(0);
  s.E.resize(0, s.n);
  s.g.resize(0);
  s.lower = lo;
  s.upper = hi;
  s.validate();
  return s;
}

DecisionSpace DecisionSpace::free(Index n) {
  return box(VectorXd::Constant(n, -kInf), VectorXd::Constant(n, kInf));
}

DecisionSpace DecisionSpace::simplex(Index m, Index extra_free) {
  DecisionSpace s;
  s.n = m + extra_free;
  s.G.resize(0, s.n);
  s.h.resize(0);
  s.E = MatrixXd::Zero(1, s.n);
  s.E.leftCols(m).setOnes();
  s.g = VectorXd::Ones(1);
  s.lower = VectorXd::Constant(s.n, -kInf);
  s.lower.head(m).setZero();
  s.upper = VectorXd::Constant(s.n, kInf);
  return s;
}

void DecisionSpace::validate() const {
  require(n >= 1, "DecisionSpace: empty decision vector");
  require(G.cols() == n || G.rows() == 0, "DecisionSpace: G column count");
  require(G.rows() == h.size(), "DecisionSpace: G/h size mismatch");
  require(E.cols() == n || E.rows() == 0, "DecisionSpace: E column count");
  require(E.rows() == g.size(), "DecisionSpace: E/g size mismatch");
  require(lower.size() == n && upper.size() == n, "DecisionSpace: bound lengths");
}

bool DecisionSpace::contains(const VectorXd& x, double tol) const {
  if (x.size() != n) return false;
  if (G.rows() > 0 && ((G * x - h).array() > tol).any()) return false;
  if (E.rows() > 0 && ((E * x - g).array().abs() > tol).any()) return false;
  for (Index i = 0; i < n; ++i) {
    if (x(i) < lower(i) - tol || x(i) > upper(i) + tol) return false;
  }
  return true;
}

std::string DecisionSpace::to_json() const {
  json j;
  j["n"] = n;
  j["G"] = matrix_to_json(G);
  j["h"] = vector_to_json(h);
  j["E"] = matrix_to_json(E);
  j["g"] = vector_to_json(g);
  json lo = json::array(), hi = json::array();
  for (Index i = 0; i < n; ++i) {
    lo.push_back(std::isinf(lower(i)) ? json(nullptr) : json(lower(i)));
    hi.push_back(std::isinf(upper(i)) ? json(nullptr) : json(upper(i)));
  }
  j["lower"] = lo;
  j["upper"] = hi;
  return j.dump();
}

DecisionSpace DecisionSpace::from_json(const std::string& text) {
  json j = json::parse(text);
  DecisionSpace s;
  s.n = j.at("n").get<Index>();
  s.G = j.contains("G") ? matrix_from_json(j["G"], "space G") : MatrixXd(0, s.n);
  if (s.G.cols() == 0) s.G.resize(s.G.rows(), s.n);
  s.h = j.contains("h") ? vector_from_json(j["h"], "space h") : VectorXd(0);
  s.E = j.contains("E") ? matrix_from_json(j["E"], "space E") : MatrixXd(0, s.n);
  if (s.E.cols() == 0) s.E.resize(s.E.rows(), s.n);
  s.g = j.contains("g") ? vector_from_json(j["g"], "space g") : VectorXd(0);
  s.lower = VectorXd::Constant(s.n, -kInf);
  s.upper = VectorXd::Constant(s.n, kInf);
  if (j.contains("lower"))
    for (Index i = 0; i < s.n; ++i)
      if (!j["lower"][i].is_null()) s.lower(i) = j["lower"][i].get<double>();
  if (j.contains("upper"))
    for (Index i = 0; i < s.n; ++i)
      if (!j["upper"][i].is_null()) s.upper(i) = j["upper"][i].get<double>();
  s.validate();
  return s;
}

MeanCovPair::MeanCovPair(VectorXd mu, MatrixXd sigma)
    : mean(std::move(mu)), covariance(std::move(sigma)) {
  require(covariance.rows() == covariance.cols(), "MeanCovPair: covariance must be square");
  require(covariance.rows() == mean.size(), "MeanCovPair: dimension mismatch");
  require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
          "MeanCovPair: covariance must be symmetric within 1e-10");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (covariance + covariance.transpose()));
  require(es.eigenvalues().minCoeff() >= -1e-10, "MeanCovPair: covariance must be PSD");
}

double evaluate_loss(const PiecewiseAffineLoss& loss, const VectorXd& x, const VectorXd& xi) {
  require(x.size() == loss.decision_dim(), "evaluate_loss: decision dimension mismatch");
  require(xi.size() == loss.uncertainty_dim(), "evaluate_loss: uncertainty dimension mismatch");
  double best = -kInf;
  for (Index k = 0; k < loss.num_pieces(); ++k) {
    best = std::max(best, loss.alpha(k, x).dot(xi) + loss.beta(k, x));
  }
  return best;
}

double saa_objective(const PiecewiseAffineLoss& loss, const VectorXd& x,
                     const SampleSet& samples) {
  require(samples.dim() == loss.uncertainty_dim(), "saa_objective: dimension mismatch");
  double acc = 0.0;
  for (Index j = 0; j < samples.size(); ++j) {
    acc += samples.weights()(j) * evaluate_loss(loss, x, samples.atom(j));
  }
  return acc;
}

ConfidenceInterval confidence_interval(const PiecewiseAffineLoss& loss, const VectorXd& x,
                                       const SampleSet& samples, double alpha) {
  require(samples.size() >= 2, "confidence_interval: needs N >= 2");
  require(alpha > 0.0 && alpha < 1.0, "confidence_interval: alpha must lie in (0,1)");
  const Index n = samples.size();
  VectorXd values(n);
  for (Index j = 0; j < n; ++j) values(j) = evaluate_loss(loss, x, samples.atom(j));
  const double center = values.dot(samples.weights());
  // The interval targets iid (uniform-weight) samples; sigma_hat keeps the
  // unbiased divisor N-1 regardless of weights, about the weighted mean.
  const double ss = (values.array() - center).square().sum();
  const double sigma_hat = std::sqrt(ss / static_cast<double>(n - 1));
  const double hw = z_quantile(alpha) * sigma_hat / std::sqrt(static_cast<double>(n));
  return ConfidenceInterval{center - hw, center + hw, hw};
}

}  // namespace ho
