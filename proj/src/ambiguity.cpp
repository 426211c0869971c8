#include "ho/ambiguity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ho {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from(const json& j) {
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return MatrixXd(0, 0);
  const Index c = static_cast<Index>(j[0].size());
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}
}  // namespace

MadAmbiguity::MadAmbiguity(VectorXd lo, VectorXd hi, VectorXd mu, VectorXd delta)
    : support_lower(std::move(lo)),
      support_upper(std::move(hi)),
      mean(std::move(mu)),
      deviation(std::move(delta)) {
  const Index m = mean.size();
  require(support_lower.size() == m && support_upper.size() == m && deviation.size() == m,
          "MadAmbiguity: dimension mismatch");
  require((support_lower.array() <= mean.array()).all() &&
              (mean.array() <= support_upper.array()).all(),
          "MadAmbiguity: mean must lie inside the support box");
  require((deviation.array() >= 0.0).all(), "MadAmbiguity: deviation must be nonnegative");
}

bool MadAmbiguity::bounded() const {
  return support_lower.allFinite() && support_upper.allFinite();
}

MadAmbiguity MadAmbiguity::from_samples(const SampleSet& samples) {
  const auto mom = samples.moments();
  VectorXd lo = samples.atoms().colwise().minCoeff().transpose();
  VectorXd hi = samples.atoms().colwise().maxCoeff().transpose();
  return MadAmbiguity(std::move(lo), std::move(hi), mom.mean, mom.mad);
}

MomentAmbiguity::MomentAmbiguity(VectorXd mu, MatrixXd sigma, double gamma1, double gamma2)
    : mean_(std::move(mu)), covariance_(std::move(sigma)), gamma1_(gamma1), gamma2_(gamma2) {
  require(covariance_.rows() == covariance_.cols() && covariance_.rows() == mean_.size(),
          "MomentAmbiguity: dimension mismatch");
  require(gamma1_ >= 0.0, "MomentAmbiguity: gamma1 must be >= 0");
  require(gamma2_ >= 1.0, "MomentAmbiguity: gamma2 must be >= 1");
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(covariance_);
  require(es.info() == Eigen::Success, "MomentAmbiguity: eigendecomposition failed");
  eigvals_ = es.eigenvalues();
  eigvecs_ = es.eigenvectors();
  require(eigvals_.minCoeff() > 1e-12, "MomentAmbiguity: covariance must be positive definite");
  // Reconstruction check; guards against wildly asymmetric input.
  MatrixXd rec = eigvecs_ * eigvals_.asDiagonal() * eigvecs_.transpose();
  require((rec - covariance_).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, eigvals_.maxCoeff()),
          "MomentAmbiguity: eigendecomposition reconstruction failed");
}

MatrixXd MomentAmbiguity::sqrt_factor() const {
  return eigvecs_ * eigvals_.cwiseSqrt().asDiagonal();
}

void GenericConicAmbiguity::validate() const {
  const Index m = xi_dim();
  const Index h = aux_dim();
  require(A.rows() == b.size() && B.rows() == A.rows(),
          "GenericConicAmbiguity: moment row mismatch");
  require(!sets.empty(), "GenericConicAmbiguity: needs at least one confidence set");
  for (const auto& s : sets) {
    require(s.C.cols() == m, "GenericConicAmbiguity: set C column count");
    require(s.D.cols() == h || (h == 0 && s.D.cols() == 0),
            "GenericConicAmbiguity: set D column count");
    require(s.C.rows() == s.c.size() && (s.D.rows() == s.c.size() || s.D.size() == 0),
            "GenericConicAmbiguity: set row mismatch");
    require(s.prob_lower >= 0.0 && s.prob_upper <= 1.0 && s.prob_lower <= s.prob_upper,
            "GenericConicAmbiguity: probability bounds");
  }
  const auto& last = sets.back();
  require(last.prob_lower == 1.0 && last.prob_upper == 1.0,
          "GenericConicAmbiguity: outermost set must have probability one");
  if (!ancestors.empty()) {
    require(ancestors.size() == sets.size(), "GenericConicAmbiguity: ancestors size");
    for (size_t i = 0; i < ancestors.size(); ++i) {
      bool has_self = false;
      for (int j : ancestors[i]) {
        require(j >= 0 && j < static_cast<int>(sets.size()),
                "GenericConicAmbiguity: ancestor index out of range");
        if (j == static_cast<int>(i)) has_self = true;
      }
      require(has_self, "GenericConicAmbiguity: ancestors must include the set itself");
    }
  }
}

MixtureAmbiguity::MixtureAmbiguity(SampleSet emp, AmbiguitySet info, double lam)
    : empirical(std::move(emp)), information(std::move(info)), lambda(lam) {
  require(lambda >= 0.0 && lambda <= 1.0, "MixtureAmbiguity: lambda must lie in [0,1]");
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  require(es.info() == Eigen::Success, "psd_sqrt: eigendecomposition failed");
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  MatrixXd r = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

double gelbrich_distance(const MeanCovPair& p1, const MeanCovPair& p2) {
  require(p1.mean.size() == p2.mean.size(), "gelbrich_distance: dimension mismatch");
  // The trace term Tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2}) equals
  // min_R ||A - B R||_F^2 over orthogonal R with A = S1^{1/2}, B = S2^{1/2};
  // evaluating it through the polar factor avoids the cancellation the
  // difference-of-traces form suffers near equal pairs.
  const MatrixXd a = psd_sqrt(p1.covariance);
  const MatrixXd b = psd_sqrt(p2.covariance);
  Eigen::JacobiSVD<MatrixXd> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
  const double bures_sq = (a - b * rot).squaredNorm();
  return std::sqrt((p1.mean - p2.mean).squaredNorm() + bures_sq);
}

MeanCovPair mixture_moments(const MeanCovPair& empirical, const MeanCovPair& info,
                            double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "mixture_moments: lambda must lie in [0,1]");
  VectorXd mean = (1.0 - lambda) * empirical.mean + lambda * info.mean;
  VectorXd d = info.mean - empirical.mean;
  MatrixXd cov = (1.0 - lambda) * empirical.covariance + lambda * info.covariance +
                 lambda * (1.0 - lambda) * d * d.transpose();
  return MeanCovPair(std::move(mean), std::move(cov));
}

MeanCovPair mixture_moments(const MixtureAmbiguity& mix, const MeanCovPair& info_pair) {
  const auto mom = mix.empirical.moments();
  return mixture_moments(MeanCovPair(mom.mean, mom.covariance), info_pair, mix.lambda);
}

Eigen::Vector3d mad_worst_case_probs(double lo, double mu, double hi, double delta) {
  require(delta >= 0.0, "mad_worst_case_marginal: delta must be >= 0");
  require(lo <= mu && mu <= hi, "mad_worst_case_marginal: needs lo <= mu <= hi");
  require(std::isfinite(lo) && std::isfinite(hi), "mad_worst_case_marginal: needs a finite box");
  const double width = hi - lo;
  const double cap = width > 0.0 ? 2.0 * (hi - mu) * (mu - lo) / width : 0.0;
  const double dhat = std::min(delta, cap);
  Eigen::Vector3d p(0.0, 1.0, 0.0);
  if (dhat > 0.0) {
    p(0) = dhat / (2.0 * (mu - lo));
    p(2) = dhat / (2.0 * (hi - mu));
    p(1) = 1.0 - p(0) - p(2);
  }
  return p;
}

ThreePointLaw mad_worst_case_marginal(double lo, double mu, double hi, double delta) {
  const Eigen::Vector3d p = mad_worst_case_probs(lo, mu, hi, delta);
  const double width = hi - lo;
  const double cap = width > 0.0 ? 2.0 * (hi - mu) * (mu - lo) / width : 0.0;
  ThreePointLaw law;
  law.clipped_deviation = std::min(delta, cap);
  const double atoms[3] = {lo, mu, hi};
  for (int i = 0; i < 3; ++i) {
    if (p(i) <= 0.0) continue;
    // Merge coincident atoms (degenerate mu == lo or mu == hi).
    bool merged = false;
    for (size_t k = 0; k < law.atoms.size(); ++k) {
      if (law.atoms[k] == atoms[i]) {
        law.probs[k] += p(i);
        merged = true;
        break;
      }
    }
    if (!merged) {
      law.atoms.push_back(atoms[i]);
      law.probs.push_back(p(i));
    }
  }
  return law;
}

double ThreePointLaw::mean() const {
  double m = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i];
  return m;
}

double ThreePointLaw::mad() const {
  const double m = mean();
  double d = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) d += probs[i] * std::abs(atoms[i] - m);
  return d;
}

double ThreePointLaw::variance() const {
  const double m = mean();
  double v = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) v += probs[i] * (atoms[i] - m) * (atoms[i] - m);
  return v;
}

namespace {
void report(MembershipReport& rep, const std::string& msg) {
  rep.member = false;
  rep.violations.push_back(msg);
}
}  // namespace

MembershipReport membership_check(const SampleSet& samples, const MadAmbiguity& set,
                                  double tol) {
  require(samples.dim() == set.dim(), "membership_check: dimension mismatch");
  MembershipReport rep;
  const auto mom = samples.moments();
  for (Index i = 0; i < set.dim(); ++i) {
    if (std::abs(mom.mean(i) - set.mean(i)) > tol) {
      std::ostringstream os;
      os << "mean[" << i << "] = " << mom.mean(i) << " differs from " << set.mean(i);
      report(rep, os.str());
    }
    if (mom.mad(i) > set.deviation(i) + tol) {
      std::ostringstream os;
      os << "mad[" << i << "] = " << mom.mad(i) << " exceeds " << set.deviation(i);
      report(rep, os.str());
    }
  }
  for (Index j = 0; j < samples.size(); ++j) {
    for (Index i = 0; i < set.dim(); ++i) {
      const double v = samples.atoms()(j, i);
      if (v < set.support_lower(i) - tol || v > set.support_upper(i) + tol) {
        std::ostringstream os;
        os << "atom " << j << " coordinate " << i << " = " << v << " outside support box";
        report(rep, os.str());
        break;
      }
    }
  }
  return rep;
}

MembershipReport membership_check(const SampleSet& samples, const MomentAmbiguity& set,
                                  double tol) {
  require(samples.dim() == set.dim(), "membership_check: dimension mismatch");
  MembershipReport rep;
  const auto mom = samples.moments();
  const VectorXd d = mom.mean - set.mean();
  const double ell = d.dot(set.covariance().ldlt().solve(d));
  if (ell > set.gamma1() + tol) {
    std::ostringstream os;
    os << "mean ellipsoid value " << ell << " exceeds gamma1 = " << set.gamma1();
    report(rep, os.str());
  }
  MatrixXd centered = samples.atoms().rowwise() - set.mean().transpose();
  MatrixXd second = centered.transpose() * samples.weights().asDiagonal() * centered;
  MatrixXd slack = set.gamma2() * set.covariance() - second;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (slack + slack.transpose()));
  if (es.eigenvalues().minCoeff() < -tol) {
    std::ostringstream os;
    os << "second-moment dominance violated: min eigenvalue " << es.eigenvalues().minCoeff();
    report(rep, os.str());
  }
  return rep;
}

std::string ambiguity_to_json(const AmbiguitySet& set) {
  json j;
  if (const auto* mad = std::get_if<MadAmbiguity>(&set)) {
    j["kind"] = "mad";
    json lo = json::array(), hi = json::array();
    for (Index i = 0; i < mad->dim(); ++i) {
      lo.push_back(std::isinf(mad->support_lower(i)) ? json(nullptr)
                                                     : json(mad->support_lower(i)));
      hi.push_back(std::isinf(mad->support_upper(i)) ? json(nullptr)
                                                     : json(mad->support_upper(i)));
    }
    j["lower"] = lo;
    j["upper"] = hi;
    j["mean"] = vector_json(mad->mean);
    j["deviation"] = vector_json(mad->deviation);
  } else if (const auto* mc = std::get_if<MomentAmbiguity>(&set)) {
    j["kind"] = "meancov";
    j["mean"] = vector_json(mc->mean());
    j["covariance"] = matrix_json(mc->covariance());
    j["gamma1"] = mc->gamma1();
    j["gamma2"] = mc->gamma2();
  } else {
    const auto& g = std::get<GenericConicAmbiguity>(set);
    j["kind"] = "generic";
    j["A"] = matrix_json(g.A);
    j["B"] = matrix_json(g.B);
    j["b"] = vector_json(g.b);
    j["sets"] = json::array();
    for (const auto& s : g.sets) {
      json sj;
      sj["C"] = matrix_json(s.C);
      sj["D"] = matrix_json(s.D);
      sj["c"] = vector_json(s.c);
      sj["cone"] = s.cone == ConfidenceCone::NonnegativeOrthant ? "nonnegative" : "second_order";
      sj["p_lower"] = s.prob_lower;
      sj["p_upper"] = s.prob_upper;
      j["sets"].push_back(std::move(sj));
    }
    if (!g.ancestors.empty()) j["ancestors"] = g.ancestors;
  }
  return j.dump();
}

AmbiguitySet ambiguity_from_json(const std::string& text) {
  json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mad") {
    VectorXd mean = vector_from(j.at("mean"));
    const Index m = mean.size();
    VectorXd lo = VectorXd::Constant(m, -kInf);
    VectorXd hi = VectorXd::Constant(m, kInf);
    for (Index i = 0; i < m; ++i) {
      if (!j.at("lower")[i].is_null()) lo(i) = j["lower"][i].get<double>();
      if (!j.at("upper")[i].is_null()) hi(i) = j["upper"][i].get<double>();
    }
    return MadAmbiguity(std::move(lo), std::move(hi), std::move(mean),
                        vector_from(j.at("deviation")));
  }
  if (kind == "meancov") {
    return MomentAmbiguity(vector_from(j.at("mean")), matrix_from(j.at("covariance")),
                           j.at("gamma1").get<double>(), j.at("gamma2").get<double>());
  }
  require(kind == "generic", "ambiguity JSON: unknown kind '" + kind + "'");
  GenericConicAmbiguity g;
  g.A = matrix_from(j.at("A"));
  g.B = matrix_from(j.at("B"));
  g.b = vector_from(j.at("b"));
  if (g.B.cols() == 0) g.B.resize(g.A.rows(), 0);
  for (const auto& sj : j.at("sets")) {
    ConfidenceSet s;
    s.C = matrix_from(sj.at("C"));
    s.D = matrix_from(sj.at("D"));
    if (s.D.cols() == 0) s.D.resize(s.C.rows(), 0);
    s.c = vector_from(sj.at("c"));
    const std::string cone = sj.value("cone", "nonnegative");
    s.cone = cone == "second_order" ? ConfidenceCone::SecondOrder
                                    : ConfidenceCone::NonnegativeOrthant;
    s.prob_lower = sj.value("p_lower", 1.0);
    s.prob_upper = sj.value("p_upper", 1.0);
    g.sets.push_back(std::move(s));
  }
  if (j.contains("ancestors")) g.ancestors = j["ancestors"].get<std::vector<std::vector<int>>>();
  g.validate();
  return g;
}

}  // namespace ho
