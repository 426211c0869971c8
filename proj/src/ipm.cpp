#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "ho/conic.hpp"

// Homogeneous self-dual interior-point method over the product of zero,
// nonnegative, second-order and PSD cones, with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step. The KKT system is solved as one sparse
// quasi-definite augmented system with static regularization plus iterative
// refinement against the unregularized operator.
//
// Problem form handled here (after splitting the blocks):
//   min c'x  s.t.  E x = g,  G x + s = h,  s in K,
// with the homogeneous embedding variables (x, y, z, s, tau, kappa).

namespace ho {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConeSeg {
  Cone cone;
  Index offset;  // first row within G
  Index len;     // rows occupied (svec length for psd)
  Index dim;     // geometric dimension
};

// Cone-wise minimum eigenvalue in the Jordan-algebra sense.
double cone_min_eig(const ConeSeg& seg, const Eigen::Ref<const VectorXd>& v) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return v.minCoeff();
    case Cone::SecondOrder:
      return v(0) - v.tail(v.size() - 1).norm();
    case Cone::Psd: {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(v));
      return es.eigenvalues().minCoeff();
    }
    default:
      return 0.0;
  }
}

void cone_add_identity(const ConeSeg& seg, Eigen::Ref<VectorXd> v, double t) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      v.array() += t;
      break;
    case Cone::SecondOrder:
      v(0) += t;
      break;
    case Cone::Psd: {
      Index idx = 0;
      for (Index j = 0; j < seg.dim; ++j) {
        v(idx) += t;
        idx += seg.dim - j;
      }
      break;
    }
    default:
      break;
  }
}

// Largest step alpha with v + alpha d staying in the cone (up to kInf).
double cone_max_step(const ConeSeg& seg, const Eigen::Ref<const VectorXd>& v,
                     const Eigen::Ref<const VectorXd>& d) {
  switch (seg.cone) {
    case Cone::Nonnegative: {
      double a = kInf;
      for (Index i = 0; i < v.size(); ++i) {
        if (d(i) < 0.0) a = std::min(a, -v(i) / d(i));
      }
      return a;
    }
    case Cone::SecondOrder: {
      const Index k = v.size() - 1;
      const double v0 = v(0), d0 = d(0);
      const auto v1 = v.tail(k);
      const auto d1 = d.tail(k);
      // Roots of (v0+a d0)^2 - |v1+a d1|^2 = 0, plus the linear cutoff.
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = 2.0 * (v0 * d0 - v1.dot(d1));
      const double qc = v0 * v0 - v1.squaredNorm();
      double a = kInf;
      if (d0 < 0.0) a = std::min(a, -v0 / d0);
      if (std::abs(qa) < 1e-16) {
        if (qb < 0.0) a = std::min(a, -qc / qb);
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double r1 = (-qb - sq) / (2.0 * qa);
          const double r2 = (-qb + sq) / (2.0 * qa);
          for (double r : {std::min(r1, r2), std::max(r1, r2)}) {
            if (r > 0.0) {
              // Accept the smallest positive root where the boundary is hit
              // while the leading entry stays nonnegative.
              const double mid = 0.5 * r;
              const double lead = v0 + mid * d0;
              const double q = (v0 + mid * d0) * (v0 + mid * d0) -
                               (v1 + mid * d1).squaredNorm();
              if (lead >= 0.0 && q >= 0.0) {
                a = std::min(a, r);
                break;
              }
            }
          }
        }
      }
      return a;
    }
    case Cone::Psd: {
      MatrixXd V = smat(v);
      MatrixXd D = smat(d);
      Eigen::LLT<MatrixXd> llt(V);
      if (llt.info() != Eigen::Success) return 0.0;
      MatrixXd L = llt.matrixL();
      MatrixXd M = L.triangularView<Eigen::Lower>().solve(D);
      M = L.triangularView<Eigen::Lower>().solve(M.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
      const double lmin = es.eigenvalues().minCoeff();
      if (lmin >= 0.0) return kInf;
      return -1.0 / lmin;
    }
    default:
      return kInf;
  }
}

struct Scaling {
  // nonneg: diagonal of W (sqrt(s/z)); soc: dense symmetric W and W^{-1};
  // psd: NT factor R with lambda = R' Z R = R^{-1} S R^{-T}.
  VectorXd w;
  MatrixXd W, Winv;
  MatrixXd R, Rinv;
  MatrixXd W2;  // dense W'W for soc/psd
};

MatrixXd psd_chol_factor(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Clip tiny negative curvature and retry once.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const double shift = std::max(1e-14, -1.5 * es.eigenvalues().minCoeff());
  Eigen::LLT<MatrixXd> llt2(m + shift * MatrixXd::Identity(m.rows(), m.cols()));
  if (llt2.info() != Eigen::Success) throw std::runtime_error("psd factor failed");
  return llt2.matrixL();
}

// svec-coordinate matrix of the linear map X -> F X F'.
MatrixXd svec_congruence(const MatrixXd& F) {
  const Index d = F.rows();
  const Index len = svec_len(d);
  MatrixXd out(len, len);
  VectorXd basis = VectorXd::Zero(len);
  for (Index j = 0; j < len; ++j) {
    basis(j) = 1.0;
    MatrixXd X = smat(basis);
    out.col(j) = svec(F * X * F.transpose());
    basis(j) = 0.0;
  }
  return out;
}

bool compute_scaling(const ConeSeg& seg, const Eigen::Ref<const VectorXd>& s,
                     const Eigen::Ref<const VectorXd>& z, Scaling& sc) {
  switch (seg.cone) {
    case Cone::Nonnegative: {
      if ((s.array() <= 0).any() || (z.array() <= 0).any()) return false;
      sc.w = (s.array() / z.array()).sqrt();
      return true;
    }
    case Cone::SecondOrder: {
      // NT scaling point w solves P(w) z = s with P the Jordan quadratic
      // representation; W = P(w^{1/2}), so that W z = W^{-1} s = lambda.
      const Index k = s.size() - 1;
      const double ns = s(0) * s(0) - s.tail(k).squaredNorm();
      const double nz = z(0) * z(0) - z.tail(k).squaredNorm();
      if (ns <= 0.0 || nz <= 0.0) return false;
      const double rs = std::sqrt(ns), rz = std::sqrt(nz);
      VectorXd sb = s / rs, zb = z / rz;
      const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      VectorXd Jzb = zb;
      Jzb.tail(k) = -zb.tail(k);
      VectorXd w = (std::sqrt(rs / rz) / (2.0 * gamma)) * (sb + Jzb);
      const double nw = std::sqrt(rs / rz);  // norm_J(w): the direction is J-unit
      VectorXd wr = w;
      wr(0) += nw;
      wr /= std::sqrt(2.0 * (w(0) + nw));  // wr = w^{1/2}, norm_J(wr)^2 = nw
      MatrixXd J = -MatrixXd::Identity(s.size(), s.size());
      J(0, 0) = 1.0;
      sc.W = 2.0 * wr * wr.transpose() - nw * J;
      VectorXd wri = wr / nw;
      wri.tail(k) = -wri.tail(k);  // Jordan inverse of wr, det 1/nw
      sc.Winv = 2.0 * wri * wri.transpose() - (1.0 / nw) * J;
      sc.W2 = sc.W * sc.W;
      return true;
    }
    case Cone::Psd: {
      MatrixXd S = smat(s), Z = smat(z);
      MatrixXd Ls, Lz;
      try {
        Ls = psd_chol_factor(S);
        Lz = psd_chol_factor(Z);
      } catch (...) {
        return false;
      }
      Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
      VectorXd sv = svd.singularValues();
      if (sv.minCoeff() <= 0.0) return false;
      VectorXd isq = sv.cwiseSqrt().cwiseInverse();
      sc.R = Ls * svd.matrixV() * isq.asDiagonal();
      sc.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
      sc.W2 = svec_congruence(sc.R * sc.R.transpose());
      sc.W2 = 0.5 * (sc.W2 + sc.W2.transpose()).eval();
      sc.w = sv;  // NT scaled point is diag(sv)
      return true;
    }
    default:
      return false;
  }
}

// lambda as an svec/vector in the scaled space.
VectorXd scaled_point(const ConeSeg& seg, const Scaling& sc,
                      const Eigen::Ref<const VectorXd>& s,
                      const Eigen::Ref<const VectorXd>& z) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return (s.array() * z.array()).sqrt();
    case Cone::SecondOrder:
      return sc.W * z;
    case Cone::Psd: {
      VectorXd lam = VectorXd::Zero(seg.len);
      Index idx = 0;
      for (Index j = 0; j < seg.dim; ++j) {
        lam(idx) = sc.w(j);
        idx += seg.dim - j;
      }
      return lam;
    }
    default:
      return VectorXd();
  }
}

VectorXd jordan_product(const ConeSeg& seg, const Eigen::Ref<const VectorXd>& u,
                        const Eigen::Ref<const VectorXd>& v) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return u.cwiseProduct(v);
    case Cone::SecondOrder: {
      VectorXd out(u.size());
      out(0) = u.dot(v);
      out.tail(u.size() - 1) = u(0) * v.tail(v.size() - 1) + v(0) * u.tail(u.size() - 1);
      return out;
    }
    case Cone::Psd: {
      MatrixXd U = smat(u), V = smat(v);
      return svec(0.5 * (U * V + V * U));
    }
    default:
      return VectorXd();
  }
}

// Solves lambda o u = d for u, where lambda is the NT scaled point (diagonal
// for psd cones).
VectorXd jordan_solve(const ConeSeg& seg, const Scaling& sc,
                      const Eigen::Ref<const VectorXd>& lambda,
                      const Eigen::Ref<const VectorXd>& d) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return d.cwiseQuotient(lambda);
    case Cone::SecondOrder: {
      const Index k = lambda.size() - 1;
      const double det = lambda(0) * lambda(0) - lambda.tail(k).squaredNorm();
      VectorXd u(lambda.size());
      u(0) = (lambda(0) * d(0) - lambda.tail(k).dot(d.tail(k))) / det;
      u.tail(k) = (d.tail(k) - u(0) * lambda.tail(k)) / lambda(0);
      return u;
    }
    case Cone::Psd: {
      MatrixXd D = smat(d);
      MatrixXd U(seg.dim, seg.dim);
      for (Index i = 0; i < seg.dim; ++i)
        for (Index j = 0; j < seg.dim; ++j) U(i, j) = 2.0 * D(i, j) / (sc.w(i) + sc.w(j));
      return svec(U);
    }
    default:
      return VectorXd();
  }
}

// W' v (W symmetric for nonneg/soc).
VectorXd apply_Wt(const ConeSeg& seg, const Scaling& sc, const Eigen::Ref<const VectorXd>& v) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return sc.w.cwiseProduct(v);
    case Cone::SecondOrder:
      return sc.W * v;
    case Cone::Psd:
      return svec(sc.R * smat(v) * sc.R.transpose());
    default:
      return VectorXd();
  }
}

VectorXd apply_W(const ConeSeg& seg, const Scaling& sc, const Eigen::Ref<const VectorXd>& v) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return sc.w.cwiseProduct(v);
    case Cone::SecondOrder:
      return sc.W * v;
    case Cone::Psd:
      return svec(sc.R.transpose() * smat(v) * sc.R);
    default:
      return VectorXd();
  }
}

VectorXd apply_Winv_t(const ConeSeg& seg, const Scaling& sc,
                      const Eigen::Ref<const VectorXd>& v) {
  switch (seg.cone) {
    case Cone::Nonnegative:
      return v.cwiseQuotient(sc.w);
    case Cone::SecondOrder:
      return sc.Winv * v;
    case Cone::Psd:
      return svec(sc.Rinv * smat(v) * sc.Rinv.transpose());
    default:
      return VectorXd();
  }
}

struct SplitProblem {
  Index n = 0, p = 0, mG = 0;
  SpMat E, G, Et, Gt;
  VectorXd g, h, c;
  std::vector<ConeSeg> segs;
  double degree = 0.0;
  // Equilibration state (identity when disabled).
  VectorXd col_scale, row_scale_E, row_scale_G;
};

SplitProblem split(const ConicProgram& prog) {
  SplitProblem sp;
  sp.n = prog.num_vars();
  sp.c = prog.objective();
  std::vector<Triplet> te, tg;
  std::vector<double> ge, gh;
  for (const auto& blk : prog.blocks()) {
    const bool eq = blk.cone == Cone::Zero;
    auto& trips = eq ? te : tg;
    auto& rhs = eq ? ge : gh;
    const Index base = static_cast<Index>(rhs.size());
    if (!eq) {
      sp.segs.push_back({blk.cone, base, blk.rows(), blk.dim});
      if (blk.cone == Cone::Nonnegative) sp.degree += static_cast<double>(blk.dim);
      if (blk.cone == Cone::SecondOrder) sp.degree += 1.0;
      if (blk.cone == Cone::Psd) sp.degree += static_cast<double>(blk.dim);
    }
    for (int k = 0; k < blk.A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(blk.A, k); it; ++it) {
        trips.emplace_back(static_cast<int>(base + it.row()), static_cast<int>(it.col()),
                           it.value());
      }
    }
    for (Index r = 0; r < blk.rows(); ++r) rhs.push_back(blk.b(r));
  }
  sp.p = static_cast<Index>(ge.size());
  sp.mG = static_cast<Index>(gh.size());
  sp.E.resize(sp.p, sp.n);
  sp.E.setFromTriplets(te.begin(), te.end());
  sp.G.resize(sp.mG, sp.n);
  sp.G.setFromTriplets(tg.begin(), tg.end());
  sp.g = Eigen::Map<VectorXd>(ge.data(), sp.p);
  sp.h = Eigen::Map<VectorXd>(gh.data(), sp.mG);
  sp.col_scale = VectorXd::Ones(sp.n);
  sp.row_scale_E = VectorXd::Ones(sp.p);
  sp.row_scale_G = VectorXd::Ones(sp.mG);
  return sp;
}

// Ruiz equilibration; rows of one soc/psd block share a single factor so the
// cone geometry is preserved.
void equilibrate(SplitProblem& sp, int iters = 10) {
  for (int it = 0; it < iters; ++it) {
    VectorXd re = VectorXd::Zero(sp.p), rg = VectorXd::Zero(sp.mG);
    for (int k = 0; k < sp.E.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp.E, k); e; ++e)
        re(e.row()) = std::max(re(e.row()), std::abs(e.value()));
    for (int k = 0; k < sp.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp.G, k); e; ++e)
        rg(e.row()) = std::max(rg(e.row()), std::abs(e.value()));
    for (const auto& seg : sp.segs) {
      if (seg.cone == Cone::Nonnegative) continue;
      const double mx = rg.segment(seg.offset, seg.len).maxCoeff();
      rg.segment(seg.offset, seg.len).setConstant(mx);
    }
    auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
    VectorXd fe = re.unaryExpr(factor), fg = rg.unaryExpr(factor);
    sp.E = fe.asDiagonal() * sp.E;
    sp.G = fg.asDiagonal() * sp.G;
    sp.g = fe.cwiseProduct(sp.g);
    sp.h = fg.cwiseProduct(sp.h);
    sp.row_scale_E = sp.row_scale_E.cwiseProduct(fe);
    sp.row_scale_G = sp.row_scale_G.cwiseProduct(fg);

    VectorXd cn = VectorXd::Zero(sp.n);
    for (int k = 0; k < sp.E.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp.E, k); e; ++e)
        cn(e.col()) = std::max(cn(e.col()), std::abs(e.value()));
    for (int k = 0; k < sp.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp.G, k); e; ++e)
        cn(e.col()) = std::max(cn(e.col()), std::abs(e.value()));
    VectorXd fc = cn.unaryExpr(factor);
    sp.E = sp.E * fc.asDiagonal();
    sp.G = sp.G * fc.asDiagonal();
    sp.c = sp.c.cwiseProduct(fc);
    sp.col_scale = sp.col_scale.cwiseProduct(fc);
  }
  sp.Et = sp.E.transpose();
  sp.Gt = sp.G.transpose();
}

class KktSolver {
 public:
  KktSolver(const SplitProblem& sp, double delta) : sp_(sp), delta_(delta) {}

  void set_delta(double d) { delta_ = d; }
  double delta() const { return delta_; }

  // Tries the current regularization, escalating it if the factorization
  // breaks down; refinement always targets the unregularized operator.
  bool factorize_robust(const std::vector<Scaling>& scalings) {
    while (true) {
      if (factorize(scalings)) return true;
      if (delta_ >= 1e-2) return false;
      delta_ *= 1e3;
    }
  }

  bool factorize(const std::vector<Scaling>& scalings) {
    const Index N = sp_.n + sp_.p + sp_.mG;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(sp_.E.nonZeros() + sp_.G.nonZeros()) * 2 + N * 2);
    for (Index i = 0; i < sp_.n; ++i) trips.emplace_back(i, i, delta_);
    for (int k = 0; k < sp_.E.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp_.E, k); e; ++e) {
        trips.emplace_back(static_cast<int>(sp_.n + e.row()), static_cast<int>(e.col()),
                           e.value());
        trips.emplace_back(static_cast<int>(e.col()), static_cast<int>(sp_.n + e.row()),
                           e.value());
      }
    for (Index i = 0; i < sp_.p; ++i)
      trips.emplace_back(static_cast<int>(sp_.n + i), static_cast<int>(sp_.n + i), -delta_);
    const Index zoff = sp_.n + sp_.p;
    for (int k = 0; k < sp_.G.outerSize(); ++k)
      for (SpMat::InnerIterator e(sp_.G, k); e; ++e) {
        trips.emplace_back(static_cast<int>(zoff + e.row()), static_cast<int>(e.col()),
                           e.value());
        trips.emplace_back(static_cast<int>(e.col()), static_cast<int>(zoff + e.row()),
                           e.value());
      }
    for (size_t si = 0; si < sp_.segs.size(); ++si) {
      const auto& seg = sp_.segs[si];
      const auto& sc = scalings[si];
      if (seg.cone == Cone::Nonnegative) {
        for (Index i = 0; i < seg.len; ++i) {
          trips.emplace_back(static_cast<int>(zoff + seg.offset + i),
                             static_cast<int>(zoff + seg.offset + i),
                             -(sc.w(i) * sc.w(i)) - delta_);
        }
      } else {
        for (Index r = 0; r < seg.len; ++r)
          for (Index cidx = 0; cidx < seg.len; ++cidx) {
            double v = -sc.W2(r, cidx) - (r == cidx ? delta_ : 0.0);
            trips.emplace_back(static_cast<int>(zoff + seg.offset + r),
                               static_cast<int>(zoff + seg.offset + cidx), v);
          }
      }
    }
    kkt_.resize(N, N);
    kkt_.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(kkt_);
      analyzed_ = true;
    }
    ldlt_.factorize(kkt_);
    scalings_ = &scalings;
    return ldlt_.info() == Eigen::Success;
  }

  // Solves the unregularized system with two refinement passes.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd x = ldlt_.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd r = rhs - apply_unregularized(x);
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  VectorXd apply_unregularized(const VectorXd& v) const {
    const Index zoff = sp_.n + sp_.p;
    VectorXd out(sp_.n + sp_.p + sp_.mG);
    const auto vx = v.head(sp_.n);
    const auto vy = v.segment(sp_.n, sp_.p);
    const auto vz = v.tail(sp_.mG);
    out.head(sp_.n) = sp_.Et * vy + sp_.Gt * vz;
    out.segment(sp_.n, sp_.p) = sp_.E * vx;
    VectorXd gz = sp_.G * vx;
    for (size_t si = 0; si < sp_.segs.size(); ++si) {
      const auto& seg = sp_.segs[si];
      const auto& sc = (*scalings_)[si];
      if (seg.cone == Cone::Nonnegative) {
        gz.segment(seg.offset, seg.len) -=
            sc.w.array().square().matrix().cwiseProduct(vz.segment(seg.offset, seg.len));
      } else {
        gz.segment(seg.offset, seg.len) -= sc.W2 * vz.segment(seg.offset, seg.len);
      }
    }
    out.segment(zoff, sp_.mG) = gz;
    return out;
  }

  const SplitProblem& sp_;
  double delta_;
  SpMat kkt_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  bool analyzed_ = false;
  const std::vector<Scaling>* scalings_ = nullptr;
};

Solution solve_no_cones(const ConicProgram& prog, const SplitProblem& sp) {
  // Pure equality-constrained LP (or unconstrained): handled directly.
  Solution sol;
  MatrixXd Ed = MatrixXd(sp.E);
  VectorXd x;
  if (sp.p == 0) {
    x = VectorXd::Zero(sp.n);
  } else {
    x = Ed.colPivHouseholderQr().solve(sp.g);
    if ((Ed * x - sp.g).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + sp.g.lpNorm<Eigen::Infinity>())) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
  }
  VectorXd y;
  if (sp.p > 0) {
    y = (-Ed.transpose()).colPivHouseholderQr().solve(sp.c);
  }
  VectorXd resid = sp.p > 0 ? VectorXd(sp.c + Ed.transpose() * y) : sp.c;
  if (resid.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + sp.c.lpNorm<Eigen::Infinity>())) {
    sol.status = SolveStatus::Unbounded;
    return sol;
  }
  sol.status = SolveStatus::Optimal;
  sol.x = sp.col_scale.cwiseProduct(x);
  sol.objective = prog.objective().dot(sol.x);
  sol.dual_objective = sol.objective;
  return sol;
}

}  // namespace

Solution solve(const ConicProgram& prog, const SolveSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  Solution sol;
  auto finish = [&](SolveStatus st) {
    sol.status = st;
    sol.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  };

  SplitProblem sp = split(prog);
  if (sp.mG == 0) {
    Solution s2 = solve_no_cones(prog, sp);
    sol = s2;
    return finish(s2.status);
  }
  if (settings.equilibrate) {
    equilibrate(sp);
  } else {
    sp.Et = sp.E.transpose();
    sp.Gt = sp.G.transpose();
  }

  const Index n = sp.n, p = sp.p, mG = sp.mG;
  const double nu = sp.degree + 1.0;
  const double delta = 1e-8;

  // Interior initialization via two identity-scaled KKT solves.
  std::vector<Scaling> scalings(sp.segs.size());
  for (size_t si = 0; si < sp.segs.size(); ++si) {
    const auto& seg = sp.segs[si];
    VectorXd e = VectorXd::Zero(seg.len);
    cone_add_identity(seg, e, 1.0);
    Scaling sc;
    if (seg.cone == Cone::Nonnegative) {
      sc.w = VectorXd::Ones(seg.len);
    } else if (seg.cone == Cone::SecondOrder) {
      sc.W = MatrixXd::Identity(seg.len, seg.len);
      sc.Winv = sc.W;
      sc.W2 = sc.W;
    } else {
      sc.R = MatrixXd::Identity(seg.dim, seg.dim);
      sc.Rinv = sc.R;
      sc.W2 = MatrixXd::Identity(seg.len, seg.len);
      sc.w = VectorXd::Ones(seg.dim);
    }
    scalings[si] = std::move(sc);
  }

  KktSolver kkt(sp, delta);
  if (!kkt.factorize_robust(scalings)) return finish(SolveStatus::NumericalFailure);

  VectorXd rhs = VectorXd::Zero(n + p + mG);
  rhs.segment(n, p) = sp.g;
  rhs.tail(mG) = sp.h;
  VectorXd init_p = kkt.solve(rhs);
  VectorXd x = init_p.head(n);
  VectorXd s = sp.h - sp.G * x;
  rhs.setZero();
  rhs.head(n) = -sp.c;
  VectorXd init_d = kkt.solve(rhs);
  VectorXd y = init_d.segment(n, p);
  VectorXd z = init_d.tail(mG);
  for (const auto& seg : sp.segs) {
    const double le_s = cone_min_eig(seg, s.segment(seg.offset, seg.len));
    if (le_s <= 0.0) cone_add_identity(seg, s.segment(seg.offset, seg.len), 1.0 - le_s);
    const double le_z = cone_min_eig(seg, z.segment(seg.offset, seg.len));
    if (le_z <= 0.0) cone_add_identity(seg, z.segment(seg.offset, seg.len), 1.0 - le_z);
  }
  double tau = 1.0, kappa = 1.0;

  const double norm_c = std::max(1.0, sp.c.lpNorm<Eigen::Infinity>());
  const double norm_g = std::max(1.0, p > 0 ? sp.g.lpNorm<Eigen::Infinity>() : 0.0);
  const double norm_h = std::max(1.0, sp.h.lpNorm<Eigen::Infinity>());
  const double feas_tol = std::max(settings.abs_tol, 1e-12);

  auto cone_dot = [&](const VectorXd& a, const VectorXd& b) { return a.dot(b); };

  int iter = 0;
  for (; iter < settings.max_iter; ++iter) {
    // Residuals of the homogeneous system.
    VectorXd rd = sp.Et * y + sp.Gt * z + sp.c * tau;
    VectorXd rp = sp.E * x - sp.g * tau;
    VectorXd rg = sp.G * x + s - sp.h * tau;
    const double rk = -sp.c.dot(x) - sp.g.dot(y) - sp.h.dot(z) - kappa;
    const double mu = (cone_dot(s, z) + tau * kappa) / nu;

    // Convergence on the de-homogenized candidate.
    {
      const double inv_tau = 1.0 / tau;
      const double pobj = sp.c.dot(x) * inv_tau;
      const double dobj = -(sp.g.dot(y) + sp.h.dot(z)) * inv_tau;
      const double pres =
          std::max(p > 0 ? rp.lpNorm<Eigen::Infinity>() * inv_tau / norm_g : 0.0,
                   rg.lpNorm<Eigen::Infinity>() * inv_tau / norm_h);
      const double dres = rd.lpNorm<Eigen::Infinity>() * inv_tau / norm_c;
      const double gap = std::abs(pobj - dobj);
      const double gap_tol =
          std::max(settings.abs_tol, settings.rel_tol * std::max(std::abs(pobj), std::abs(dobj)));
      if (pres <= feas_tol && dres <= feas_tol && gap <= gap_tol) {
        sol.x = sp.col_scale.cwiseProduct(x) * inv_tau;
        sol.objective = prog.objective().dot(sol.x);
        sol.dual_objective = dobj;
        sol.iterations = iter;
        return finish(SolveStatus::Optimal);
      }
      // Infeasibility certificates.
      const double by_hz = sp.g.dot(y) + sp.h.dot(z);
      if (by_hz < -1e-12) {
        const double scale = -1.0 / by_hz;
        const double cert = (sp.Et * y + sp.Gt * z).lpNorm<Eigen::Infinity>() * scale;
        if (cert <= feas_tol && tau <= 1e-6 * std::max(1.0, kappa)) {
          sol.iterations = iter;
          return finish(SolveStatus::Infeasible);
        }
      }
      const double cx = sp.c.dot(x);
      if (cx < -1e-12) {
        const double scale = -1.0 / cx;
        const double cert_e = p > 0 ? (sp.E * x).lpNorm<Eigen::Infinity>() * scale : 0.0;
        const double cert_g = (sp.G * x + s).lpNorm<Eigen::Infinity>() * scale;
        if (std::max(cert_e, cert_g) <= feas_tol && tau <= 1e-6 * std::max(1.0, kappa)) {
          sol.iterations = iter;
          return finish(SolveStatus::Unbounded);
        }
      }
      if (mu < 1e-16 || tau < 1e-14) {
        sol.iterations = iter;
        return finish(SolveStatus::NumericalFailure);
      }
    }

    // NT scalings at the current iterate.
    for (size_t si = 0; si < sp.segs.size(); ++si) {
      if (!compute_scaling(sp.segs[si], s.segment(sp.segs[si].offset, sp.segs[si].len),
                           z.segment(sp.segs[si].offset, sp.segs[si].len), scalings[si])) {
        sol.iterations = iter;
        return finish(SolveStatus::NumericalFailure);
      }
    }
    if (!kkt.factorize_robust(scalings)) {
      sol.iterations = iter;
      return finish(SolveStatus::NumericalFailure);
    }

    std::vector<VectorXd> lambdas(sp.segs.size());
    for (size_t si = 0; si < sp.segs.size(); ++si) {
      const auto& seg = sp.segs[si];
      lambdas[si] = scaled_point(seg, scalings[si], s.segment(seg.offset, seg.len),
                                 z.segment(seg.offset, seg.len));
    }

    // tau column solve (reused by both predictor and corrector).
    rhs.head(n) = -sp.c;
    rhs.segment(n, p) = sp.g;
    rhs.tail(mG) = sp.h;
    VectorXd u1 = kkt.solve(rhs);

    auto direction = [&](const VectorXd& dsig, double dtk, double resid_weight, VectorXd& dx,
                         VectorXd& dy, VectorXd& dz, VectorXd& ds, double& dtau,
                         double& dkappa) {
      VectorXd rhs2(n + p + mG);
      VectorXd adj = VectorXd::Zero(mG);
      for (size_t si = 0; si < sp.segs.size(); ++si) {
        const auto& seg = sp.segs[si];
        VectorXd t = jordan_solve(seg, scalings[si], lambdas[si], dsig.segment(seg.offset, seg.len));
        adj.segment(seg.offset, seg.len) = apply_Wt(seg, scalings[si], t);
      }
      rhs2.head(n) = -resid_weight * rd;
      rhs2.segment(n, p) = -resid_weight * rp;
      rhs2.tail(mG) = -resid_weight * rg - adj;
      VectorXd u2 = kkt.solve(rhs2);
      const double num = -resid_weight * rk + sp.c.dot(u2.head(n)) + sp.g.dot(u2.segment(n, p)) +
                         sp.h.dot(u2.tail(mG)) + dtk / tau;
      const double den = -sp.c.dot(u1.head(n)) - sp.g.dot(u1.segment(n, p)) -
                         sp.h.dot(u1.tail(mG)) + kappa / tau;
      dtau = num / den;
      dx = u2.head(n) + dtau * u1.head(n);
      dy = u2.segment(n, p) + dtau * u1.segment(n, p);
      dz = u2.tail(mG) + dtau * u1.tail(mG);
      ds = -resid_weight * rg + sp.h * dtau - sp.G * dx;
      dkappa = (dtk - kappa * dtau) / tau;
    };

    auto max_step = [&](const VectorXd& ds, const VectorXd& dz, double dtau, double dkappa) {
      double a = kInf;
      for (const auto& seg : sp.segs) {
        a = std::min(a, cone_max_step(seg, s.segment(seg.offset, seg.len),
                                      ds.segment(seg.offset, seg.len)));
        a = std::min(a, cone_max_step(seg, z.segment(seg.offset, seg.len),
                                      dz.segment(seg.offset, seg.len)));
      }
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // Predictor (affine) direction.
    VectorXd dsig(mG);
    for (size_t si = 0; si < sp.segs.size(); ++si) {
      const auto& seg = sp.segs[si];
      dsig.segment(seg.offset, seg.len) = -jordan_product(seg, lambdas[si], lambdas[si]);
    }
    VectorXd dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
    direction(dsig, -tau * kappa, 1.0, dx, dy, dz, ds, dtau, dkappa);
    double a_aff = std::min(1.0, max_step(ds, dz, dtau, dkappa));

    const double mu_aff = ((s + a_aff * ds).dot(z + a_aff * dz) +
                           (tau + a_aff * dtau) * (kappa + a_aff * dkappa)) /
                          nu;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // Corrector: recenter toward sigma*mu and subtract the Mehrotra term.
    for (size_t si = 0; si < sp.segs.size(); ++si) {
      const auto& seg = sp.segs[si];
      VectorXd wi_ds = apply_Winv_t(seg, scalings[si], ds.segment(seg.offset, seg.len));
      VectorXd w_dz = apply_W(seg, scalings[si], dz.segment(seg.offset, seg.len));
      VectorXd corr = jordan_product(seg, wi_ds, w_dz);
      VectorXd e = VectorXd::Zero(seg.len);
      cone_add_identity(seg, e, 1.0);
      dsig.segment(seg.offset, seg.len) =
          -jordan_product(seg, lambdas[si], lambdas[si]) - corr + sigma * mu * e;
    }
    const double dtk = -tau * kappa - dtau * dkappa + sigma * mu;
    direction(dsig, dtk, 1.0 - sigma, dx, dy, dz, ds, dtau, dkappa);
    double alpha = std::min(1.0, 0.99 * max_step(ds, dz, dtau, dkappa));

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  sol.iterations = iter;
  // Out of iterations: report the candidate if it is decent, else failure.
  {
    const double inv_tau = 1.0 / tau;
    VectorXd xs = sp.col_scale.cwiseProduct(x) * inv_tau;
    Solution cand;
    cand.status = SolveStatus::Optimal;
    cand.x = xs;
    ViolationReport rep = verify_solution(prog, cand, kInf);
    if (rep.max_violation <= 1e-6) {
      sol.x = xs;
      sol.objective = prog.objective().dot(xs);
      sol.dual_objective = -(sp.g.dot(y) + sp.h.dot(z)) * inv_tau;
      return finish(SolveStatus::Optimal);
    }
  }
  return finish(SolveStatus::NumericalFailure);
}

}  // namespace ho
