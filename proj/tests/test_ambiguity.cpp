#include <doctest.h>

#include <cmath>

#include "ho/ambiguity.hpp"
#include "ho/rng.hpp"
#include "test_util.hpp"

using namespace ho;
using ho::testutil::random_mad;
using ho::testutil::random_spd;
using ho::testutil::random_vector;

TEST_CASE("gelbrich distance examples") {
  MatrixXd eye = MatrixXd::Identity(2, 2);
  VectorXd zero = VectorXd::Zero(2);
  CHECK(gelbrich_distance({zero, eye}, {zero, eye}) == doctest::Approx(0.0));

  MatrixXd one(1, 1);
  one << 1.0;
  VectorXd z1 = VectorXd::Zero(1), o1 = VectorXd::Ones(1);
  CHECK(gelbrich_distance({z1, one}, {o1, one}) == doctest::Approx(1.0));

  MatrixXd four(1, 1);
  four << 4.0;
  CHECK(gelbrich_distance({z1, four}, {z1, one}) == doctest::Approx(1.0));
}

TEST_CASE("gelbrich metric properties on random psd pairs") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const Index m = 1 + rng.below(4);
    MeanCovPair a(random_vector(rng, m, -2, 2), random_spd(rng, m));
    MeanCovPair b(random_vector(rng, m, -2, 2), random_spd(rng, m));
    MeanCovPair c(random_vector(rng, m, -2, 2), random_spd(rng, m));
    const double dab = gelbrich_distance(a, b);
    const double dba = gelbrich_distance(b, a);
    const double dac = gelbrich_distance(a, c);
    const double dcb = gelbrich_distance(c, b);
    CHECK(dab >= 0.0);
    CHECK(dab == doctest::Approx(dba).epsilon(1e-9));
    CHECK(dab <= dac + dcb + 1e-7);
    CHECK(gelbrich_distance(a, a) <= 1e-9);
  }
}

TEST_CASE("mixture moments endpoints and hand example") {
  Rng rng(5);
  MatrixXd atoms = testutil::random_matrix(rng, 10, 2, -1, 1);
  SampleSet samples(atoms);
  auto mom = samples.moments();
  MeanCovPair emp(mom.mean, mom.covariance);
  MeanCovPair info(random_vector(rng, 2), random_spd(rng, 2));

  auto at0 = mixture_moments(emp, info, 0.0);
  CHECK(at0.mean.isApprox(emp.mean, 1e-14));
  CHECK(at0.covariance.isApprox(emp.covariance, 1e-14));
  auto at1 = mixture_moments(emp, info, 1.0);
  CHECK(at1.mean.isApprox(info.mean, 1e-14));
  CHECK(at1.covariance.isApprox(info.covariance, 1e-14));

  MatrixXd one(1, 1);
  one << 1.0;
  auto mid = mixture_moments(MeanCovPair(VectorXd::Zero(1), one),
                             MeanCovPair(2.0 * VectorXd::Ones(1), one), 0.5);
  CHECK(mid.mean(0) == doctest::Approx(1.0));
  CHECK(mid.covariance(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("mixture moments match monte carlo") {
  Rng rng(2024);
  const double lambda = 0.35;
  MatrixXd atoms(3, 1);
  atoms << -1.0, 0.5, 2.0;
  SampleSet samples(atoms);
  MeanCovPair info(VectorXd::Ones(1), 9.0 * MatrixXd::Identity(1, 1));
  auto mixed = mixture_moments(MixtureAmbiguity(samples, random_mad(rng, 1), lambda), info);

  const int draws = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < draws; ++i) {
    double v;
    if (rng.uniform01() < lambda) {
      v = rng.uniform01() < 0.5 ? -2.0 : 4.0;  // mean 1, var 9
    } else {
      v = atoms(static_cast<Index>(rng.below(3)), 0);
    }
    s1 += v;
    s2 += v * v;
  }
  const double mc_mean = s1 / draws;
  const double mc_var = s2 / draws - mc_mean * mc_mean;
  const double se_mean = std::sqrt(mixed.covariance(0, 0) / draws);
  CHECK(std::abs(mc_mean - mixed.mean(0)) <= 3.0 * se_mean);
  const double se_var = std::sqrt(2.0) * mixed.covariance(0, 0) / std::sqrt(double(draws)) * 2.0;
  CHECK(std::abs(mc_var - mixed.covariance(0, 0)) <= 3.0 * se_var);
}

TEST_CASE("mad worst case marginal examples and invariants") {
  {
    auto law = mad_worst_case_marginal(-1.0, 0.0, 1.0, 0.5);
    REQUIRE(law.atoms.size() == 3);
    CHECK(law.probs[0] == doctest::Approx(0.25));
    CHECK(law.probs[1] == doctest::Approx(0.5));
    CHECK(law.probs[2] == doctest::Approx(0.25));
  }
  {
    auto law = mad_worst_case_marginal(-1.0, 0.2, 1.0, 0.0);
    REQUIRE(law.atoms.size() == 1);
    CHECK(law.atoms[0] == doctest::Approx(0.2));
    CHECK(law.probs[0] == doctest::Approx(1.0));
  }
  {
    auto law = mad_worst_case_marginal(200.0, 300.0, 500.0, 80.0);
    REQUIRE(law.atoms.size() == 3);
    CHECK(law.clipped_deviation == doctest::Approx(80.0));
    CHECK(law.probs[0] == doctest::Approx(0.4));
    CHECK(law.probs[1] == doctest::Approx(0.4));
    CHECK(law.probs[2] == doctest::Approx(0.2));
  }
  CHECK_THROWS_AS(mad_worst_case_marginal(0, 0.5, 1, -0.1), ArgumentError);

  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const double lo = rng.uniform(-5, 0), hi = rng.uniform(0.5, 5);
    const double mu = rng.uniform(lo, hi);
    const double delta = rng.uniform(0, 3);  // may exceed the cap
    auto law = mad_worst_case_marginal(lo, mu, hi, delta);
    double mass = 0;
    for (double p : law.probs) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0 + 1e-15);
      mass += p;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.mean() == doctest::Approx(mu).epsilon(1e-12));
    CHECK(law.mad() == doctest::Approx(law.clipped_deviation).epsilon(1e-12));
  }

  auto edge = mad_worst_case_marginal(0.0, 0.0, 1.0, 0.7);
  CHECK(edge.clipped_deviation == doctest::Approx(0.0));
  REQUIRE(edge.atoms.size() == 1);
  CHECK(edge.atoms[0] == doctest::Approx(0.0));
}

TEST_CASE("membership check mad") {
  MatrixXd atoms(4, 1);
  atoms << -1.0, -0.5, 0.5, 1.0;
  SampleSet samples(atoms);
  auto mom = samples.moments();
  MadAmbiguity good(VectorXd::Constant(1, -2), VectorXd::Constant(1, 2), mom.mean, mom.mad);
  CHECK(membership_check(samples, good).member);

  MadAmbiguity pinned(VectorXd::Constant(1, -2), VectorXd::Constant(1, 2),
                      VectorXd::Constant(1, 0.3), VectorXd::Zero(1));
  auto rep = membership_check(samples, pinned);
  CHECK_FALSE(rep.member);
  bool mean_violation = false;
  for (const auto& v : rep.violations) mean_violation |= v.find("mean") != std::string::npos;
  CHECK(mean_violation);
}

TEST_CASE("membership check meancov") {
  Rng rng(55);
  MatrixXd atoms = testutil::random_matrix(rng, 50, 2, -1, 1);
  SampleSet samples(atoms);
  auto mom = samples.moments();
  MomentAmbiguity good(mom.mean, mom.covariance + 1e-6 * MatrixXd::Identity(2, 2), 0.1, 1.5);
  CHECK(membership_check(samples, good).member);

  MatrixXd sqrt_cov = psd_sqrt(mom.covariance);
  VectorXd dir = VectorXd::Zero(2);
  dir(0) = 1.0;
  VectorXd shifted = mom.mean + 0.1 * (sqrt_cov * dir);
  MomentAmbiguity tight(shifted, mom.covariance + 1e-6 * MatrixXd::Identity(2, 2), 0.0, 2.0);
  CHECK_FALSE(membership_check(samples, tight, 1e-6).member);
}

TEST_CASE("mixture nesting on mad sets with sample moments") {
  Rng rng(303);
  for (int rep = 0; rep < 10; ++rep) {
    const Index m = 1 + rng.below(2);
    SampleSet p0 = testutil::samples_in_box(rng, 12, VectorXd::Constant(m, -1.0),
                                            VectorXd::Constant(m, 1.0));
    auto mom = p0.moments();
    VectorXd lo = p0.atoms().colwise().minCoeff().transpose();
    VectorXd hi = p0.atoms().colwise().maxCoeff().transpose();
    MadAmbiguity set(lo, hi, mom.mean, mom.mad);
    REQUIRE(membership_check(p0, set).member);

    // Q: product of per-coordinate worst-case three-point laws; lies in the set.
    std::vector<std::vector<double>> axes, probs;
    for (Index i = 0; i < m; ++i) {
      auto law = mad_worst_case_marginal(lo(i), mom.mean(i), hi(i), mom.mad(i));
      axes.push_back(law.atoms);
      probs.push_back(law.probs);
    }
    std::vector<VectorXd> q_atoms;
    std::vector<double> q_probs;
    std::vector<size_t> idx(static_cast<size_t>(m), 0);
    while (true) {
      VectorXd atom(m);
      double pr = 1.0;
      for (Index i = 0; i < m; ++i) {
        atom(i) = axes[static_cast<size_t>(i)][idx[static_cast<size_t>(i)]];
        pr *= probs[static_cast<size_t>(i)][idx[static_cast<size_t>(i)]];
      }
      q_atoms.push_back(atom);
      q_probs.push_back(pr);
      Index carry = 0;
      while (carry < m) {
        if (++idx[static_cast<size_t>(carry)] < axes[static_cast<size_t>(carry)].size()) break;
        idx[static_cast<size_t>(carry)] = 0;
        ++carry;
      }
      if (carry == m) break;
    }

    const double l1 = rng.uniform(0.5, 1.0);
    const double l2 = rng.uniform(0.0, l1);
    // P' = (1-l2) P0 + l2 Q lies in D_H(l2); rewriting it as an l1-mixture
    // leaves information component Q' = (1 - l2/l1) P0 + (l2/l1) Q.
    const double t = l2 / l1;
    const Index nq = static_cast<Index>(q_atoms.size());
    MatrixXd atoms(p0.size() + nq, m);
    VectorXd w(p0.size() + nq);
    for (Index r = 0; r < p0.size(); ++r) {
      atoms.row(r) = p0.atoms().row(r);
      w(r) = (1.0 - t) * p0.weights()(r);
    }
    for (Index r = 0; r < nq; ++r) {
      atoms.row(p0.size() + r) = q_atoms[static_cast<size_t>(r)].transpose();
      w(p0.size() + r) = t * q_probs[static_cast<size_t>(r)];
    }
    SampleSet qprime(atoms, w / w.sum());
    CHECK(membership_check(qprime, set, 1e-8).member);
  }
}

TEST_CASE("ambiguity json round trips with kind discriminator") {
  Rng rng(8);
  AmbiguitySet mad = random_mad(rng, 3);
  auto mad2 = ambiguity_from_json(ambiguity_to_json(mad));
  CHECK(std::get<MadAmbiguity>(mad2).mean.isApprox(std::get<MadAmbiguity>(mad).mean, 0));
  CHECK(ambiguity_to_json(mad).find("\"kind\":\"mad\"") != std::string::npos);

  AmbiguitySet mc = MomentAmbiguity(random_vector(rng, 2), random_spd(rng, 2), 0.3, 2.0);
  auto mc2 = ambiguity_from_json(ambiguity_to_json(mc));
  CHECK(std::get<MomentAmbiguity>(mc2).covariance().isApprox(
      std::get<MomentAmbiguity>(mc).covariance(), 0));

  AmbiguitySet gen = testutil::mad_as_generic(random_mad(rng, 2));
  auto gen2 = ambiguity_from_json(ambiguity_to_json(gen));
  CHECK(std::get<GenericConicAmbiguity>(gen2).sets.size() == 1);

  MadAmbiguity unb(VectorXd::Constant(1, -std::numeric_limits<double>::infinity()),
                   VectorXd::Constant(1, std::numeric_limits<double>::infinity()),
                   VectorXd::Zero(1), VectorXd::Ones(1));
  auto unb2 = std::get<MadAmbiguity>(ambiguity_from_json(ambiguity_to_json(AmbiguitySet(unb))));
  CHECK(!unb2.bounded());
}
