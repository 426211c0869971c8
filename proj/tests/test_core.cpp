#include <doctest.h>

#include <cmath>

#include "ho/loss.hpp"
#include "ho/rng.hpp"
#include "ho/samples.hpp"
#include "ho/stats.hpp"

using namespace ho;

namespace {

PiecewiseAffineLoss linear_loss_1d() {
  // f(x, xi) = x * xi with n = m = 1.
  LossPiece p;
  p.slope_matrix = MatrixXd::Identity(1, 1);
  p.slope_offset = VectorXd::Zero(1);
  p.intercept_vec = VectorXd::Zero(1);
  return PiecewiseAffineLoss({p});
}

PiecewiseAffineLoss identity_loss(Index m) {
  // f(x, xi) = x' xi.
  LossPiece p;
  p.slope_matrix = MatrixXd::Identity(m, m);
  p.slope_offset = VectorXd::Zero(m);
  p.intercept_vec = VectorXd::Zero(m);
  return PiecewiseAffineLoss({p});
}

}  // namespace

TEST_CASE("inverse normal cdf accuracy") {
  // Round trip through the exact CDF.
  for (double p : {1e-9, 1e-4, 0.025, 0.31, 0.5, 0.77, 0.975, 1 - 1e-6}) {
    const double x = inverse_normal_cdf(p);
    CHECK(std::abs(normal_cdf(x) - p) < 1e-12);
  }
  CHECK(z_quantile(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), ArgumentError);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), ArgumentError);
}

TEST_CASE("evaluate_loss examples") {
  // K=1, alpha(x)=x, beta=0, x=(1,1), xi=(2,3) -> 5.
  auto loss = identity_loss(2);
  VectorXd x(2), xi(2);
  x << 1, 1;
  xi << 2, 3;
  CHECK(evaluate_loss(loss, x, xi) == doctest::Approx(5.0));

  // CVaR pieces with rho=10, a=0.2: alpha1=-1, beta1=rho*tau; alpha2=-51, beta2=-40*tau.
  // Joint decision (x, tau), m=1: x=1, tau=0, xi=0.1 -> max(-0.1, -5.1) = -0.1.
  const double rho = 10.0, a = 0.2;
  LossPiece p1, p2;
  p1.slope_matrix = MatrixXd::Zero(1, 2);
  p1.slope_matrix(0, 0) = -1.0;
  p1.slope_offset = VectorXd::Zero(1);
  p1.intercept_vec = VectorXd::Zero(2);
  p1.intercept_vec(1) = rho;
  p2 = p1;
  p2.slope_matrix(0, 0) = -1.0 - rho / a;
  p2.intercept_vec(1) = rho * (1.0 - 1.0 / a);
  PiecewiseAffineLoss cvar({p1, p2});
  VectorXd xt(2), xi1(1);
  xt << 1, 0;
  xi1 << 0.1;
  CHECK(evaluate_loss(cvar, xt, xi1) == doctest::Approx(-0.1));

  // Identical pieces: max is that piece's value.
  PiecewiseAffineLoss dup({p1, p1, p1});
  CHECK(evaluate_loss(dup, xt, xi1) == doctest::Approx(-0.1));

  VectorXd bad(3);
  CHECK_THROWS_AS(evaluate_loss(loss, x, bad), ArgumentError);
}

TEST_CASE("evaluate_loss is convex in xi") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Index m = 1 + rng.below(3), n = 1 + rng.below(3), K = 1 + rng.below(4);
    std::vector<LossPiece> pieces;
    for (Index k = 0; k < K; ++k) {
      LossPiece p;
      p.slope_matrix = MatrixXd::NullaryExpr(m, n, [&] { return rng.uniform(-2, 2); });
      p.slope_offset = VectorXd::NullaryExpr(m, [&] { return rng.uniform(-2, 2); });
      p.intercept_vec = VectorXd::NullaryExpr(n, [&] { return rng.uniform(-2, 2); });
      p.intercept_scalar = rng.uniform(-2, 2);
      pieces.push_back(p);
    }
    PiecewiseAffineLoss loss(pieces);
    VectorXd x = VectorXd::NullaryExpr(n, [&] { return rng.uniform(-3, 3); });
    VectorXd xi1 = VectorXd::NullaryExpr(m, [&] { return rng.uniform(-3, 3); });
    VectorXd xi2 = VectorXd::NullaryExpr(m, [&] { return rng.uniform(-3, 3); });
    const double t = rng.uniform01();
    const double mid = evaluate_loss(loss, x, t * xi1 + (1 - t) * xi2);
    const double chord = t * evaluate_loss(loss, x, xi1) + (1 - t) * evaluate_loss(loss, x, xi2);
    CHECK(mid <= chord + 1e-9);
  }
}

TEST_CASE("saa_objective examples and permutation invariance") {
  auto loss = linear_loss_1d();
  VectorXd x(1);
  x << 1.0;

  MatrixXd one(1, 1);
  one << 0.7;
  SampleSet single(one);
  CHECK(saa_objective(loss, x, single) == doctest::Approx(0.7));

  MatrixXd two(2, 1);
  two << 0.0, 2.0;
  CHECK(saa_objective(loss, x, SampleSet(two)) == doctest::Approx(1.0));

  // weights (0.25, 0.75) over losses (4, 8) -> 7.
  MatrixXd atoms(2, 1);
  atoms << 4.0, 8.0;
  VectorXd w(2);
  w << 0.25, 0.75;
  CHECK(saa_objective(loss, x, SampleSet(atoms, w)) == doctest::Approx(7.0));

  // Permutation with matched weights.
  MatrixXd perm(2, 1);
  perm << 8.0, 4.0;
  VectorXd wp(2);
  wp << 0.75, 0.25;
  CHECK(saa_objective(loss, x, SampleSet(perm, wp)) ==
        doctest::Approx(saa_objective(loss, x, SampleSet(atoms, w))));
}

TEST_CASE("confidence_interval examples") {
  auto loss = linear_loss_1d();
  VectorXd x(1);
  x << 1.0;

  MatrixXd atoms(2, 1);
  atoms << 1.0, 3.0;
  auto ci = confidence_interval(loss, x, SampleSet(atoms), 0.05);
  CHECK(ci.half_width == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(ci.lower == doctest::Approx(2.0 - 1.959963984540054).epsilon(1e-9));
  CHECK(ci.upper == doctest::Approx(2.0 + 1.959963984540054).epsilon(1e-9));

  // Constant losses: zero width.
  MatrixXd cst(3, 1);
  cst << 5, 5, 5;
  CHECK(confidence_interval(loss, x, SampleSet(cst), 0.1).half_width == doctest::Approx(0.0));

  // k-fold replication: half width follows z * sigma_hat / sqrt(N) exactly,
  // with sigma_hat the unbiased estimator (so the 1/sqrt(N) scaling carries a
  // (N-1)-divisor correction: sigma_hat^2 = kN/(kN-1) * population variance).
  MatrixXd rep(8, 1);
  rep << 1, 3, 1, 3, 1, 3, 1, 3;
  auto ci4 = confidence_interval(loss, x, SampleSet(rep), 0.05);
  const double z = 1.959963984540054;
  CHECK(ci4.half_width == doctest::Approx(z * std::sqrt(8.0 / 7.0) / std::sqrt(8.0)).epsilon(1e-9));
  // Pure 1/sqrt(k) scaling holds on the population-variance part exactly.
  const double corr2 = std::sqrt(2.0 / 1.0), corr8 = std::sqrt(8.0 / 7.0);
  CHECK(ci4.half_width / corr8 == doctest::Approx(ci.half_width / corr2 / 2.0).epsilon(1e-12));

  MatrixXd one(1, 1);
  one << 1.0;
  CHECK_THROWS_AS(confidence_interval(loss, x, SampleSet(one), 0.05), ArgumentError);
}

TEST_CASE("sample_moments examples") {
  MatrixXd single(1, 2);
  single << 3.0, -1.0;
  auto m1 = SampleSet(single).moments();
  CHECK(m1.mean(0) == doctest::Approx(3.0));
  CHECK(m1.covariance.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(m1.mad.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  MatrixXd pm(2, 1);
  pm << -1.0, 1.0;
  auto m2 = SampleSet(pm).moments();
  CHECK(m2.mean(0) == doctest::Approx(0.0));
  CHECK(m2.covariance(0, 0) == doctest::Approx(1.0));
  CHECK(m2.mad(0) == doctest::Approx(1.0));

  MatrixXd tri(3, 1);
  tri << 0.0, 0.0, 3.0;
  auto m3 = SampleSet(tri).moments();
  CHECK(m3.mean(0) == doctest::Approx(1.0));
  CHECK(m3.mad(0) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("sample moments covariance is symmetric PSD") {
  Rng rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 1 + rng.below(20), m = 1 + rng.below(5);
    MatrixXd atoms = MatrixXd::NullaryExpr(n, m, [&] { return rng.uniform(-10, 10); });
    VectorXd w = VectorXd::NullaryExpr(n, [&] { return rng.uniform(0.01, 1.0); });
    w /= w.sum();
    auto mom = SampleSet(atoms, w).moments();
    CHECK((mom.covariance - mom.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(mom.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("sample set validation") {
  MatrixXd atoms(2, 1);
  atoms << 1.0, 2.0;
  VectorXd bad(2);
  bad << 0.5, 0.6;  // sums to 1.1
  CHECK_THROWS_AS(SampleSet(atoms, bad), ArgumentError);
  VectorXd neg(2);
  neg << -0.1, 1.1;
  CHECK_THROWS_AS(SampleSet(atoms, neg), ArgumentError);
  MatrixXd inf(1, 1);
  inf << std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)SampleSet{inf}, ArgumentError);
}

TEST_CASE("csv and json round trips are bit exact") {
  Rng rng(1234);
  MatrixXd atoms = MatrixXd::NullaryExpr(17, 3, [&] {
    // Awkward doubles: mix tiny, huge, negative.
    const double u = rng.uniform(-1, 1);
    return u * std::pow(10.0, rng.uniform(-12, 12));
  });
  VectorXd w = VectorXd::NullaryExpr(17, [&] { return rng.uniform(0.01, 1.0); });
  w /= w.sum();
  SampleSet s(atoms, w);

  SampleSet s2 = SampleSet::from_csv(s.to_csv());
  CHECK(s2.atoms() == s.atoms());
  CHECK(s2.weights() == s.weights());

  SampleSet s3 = SampleSet::from_json(s.to_json());
  CHECK(s3.atoms() == s.atoms());
  CHECK(s3.weights() == s.weights());

  // Uniform-weight sets omit the weight column and restore exactly 1/N.
  SampleSet u(atoms);
  SampleSet u2 = SampleSet::from_csv(u.to_csv());
  CHECK(u2.weights() == u.weights());
  CHECK(u.to_csv().find("weight") == std::string::npos);
}

TEST_CASE("rng determinism and uniform sanity") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += r.uniform01();
  CHECK(acc / n == doctest::Approx(0.5).epsilon(0.01));
  // derive_seed differs across paths.
  CHECK(derive_seed(1, {0, 1}) != derive_seed(1, {1, 0}));
}

TEST_CASE("rng normal moments") {
  Rng r(11);
  const int n = 200000;
  double m1 = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    m1 += v;
    m2 += v * v;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
}
