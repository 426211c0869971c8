#include <doctest.h>

#include <cmath>

#include "ho/scenred.hpp"
#include "ho/weights.hpp"
#include "test_util.hpp"

using namespace ho;
namespace tu = ho::testutil;

namespace {

SampleSet uniform_1d(std::initializer_list<double> vals) {
  MatrixXd atoms(static_cast<Index>(vals.size()), 1);
  Index r = 0;
  for (double v : vals) atoms(r++, 0) = v;
  return SampleSet(atoms);
}

// Exhaustive optimum of G'_l over all supports of size M.
double exhaustive_best(const SampleSet& p, Index m_keep, double l) {
  std::vector<int> idx(static_cast<size_t>(m_keep));
  std::vector<int> best_support;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == static_cast<int>(m_keep)) {
      std::vector<int> support(idx.begin(), idx.end());
      best = std::min(best, closest_fixed_support_distance(p, support, l).distance);
      return;
    }
    for (int i = start; i < static_cast<int>(p.size()); ++i) {
      idx[static_cast<size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("wasserstein type-l examples") {
  auto p = uniform_1d({0.0, 2.0});
  CHECK(wasserstein_type_l(p, p, 1.0) == doctest::Approx(0.0).epsilon(1e-8));
  auto q = uniform_1d({1.0});
  CHECK(wasserstein_type_l(p, q, 1.0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(wasserstein_type_l(p, q, 2.0) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("closest fixed support examples") {
  auto p = uniform_1d({0.0, 2.0});
  auto all = closest_fixed_support_distance(p, {0, 1}, 1.0);
  CHECK(all.distance == doctest::Approx(0.0));
  CHECK(all.omega(0) == doctest::Approx(0.5));

  auto one = closest_fixed_support_distance(p, {0}, 1.0);
  CHECK(one.distance == doctest::Approx(1.0));
  CHECK(one.omega(0) == doctest::Approx(1.0));

  auto tri = uniform_1d({0.0, 1.0, 10.0});
  auto two = closest_fixed_support_distance(tri, {1, 2}, 1.0);
  CHECK(two.distance == doctest::Approx(1.0 / 3.0));
  CHECK(two.omega(0) == doctest::Approx(2.0 / 3.0));
  CHECK(two.omega(1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("nearest assignment matches the transportation lp for fixed support") {
  Rng rng(31);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 5 + rng.below(10), m = 1 + rng.below(2);
    SampleSet p = tu::samples_in_box(rng, n, VectorXd::Constant(m, -2.0),
                                     VectorXd::Constant(m, 2.0));
    const Index keep = 1 + rng.below(std::min<Index>(4, n - 1));
    Rng pick(rep);
    auto support = pick.sample_without_replacement(static_cast<int>(n), static_cast<int>(keep));
    const double l = 1.0 + rng.below(2);
    auto fixed = closest_fixed_support_distance(p, support, l);
    MatrixXd atoms(keep, m);
    for (Index j = 0; j < keep; ++j)
      atoms.row(j) = p.atoms().row(support[static_cast<size_t>(j)]);
    SampleSet q(atoms, fixed.omega);
    CHECK(fixed.distance == doctest::Approx(wasserstein_type_l(p, q, l)).epsilon(1e-8));
  }
}

TEST_CASE("local search examples") {
  auto tri = uniform_1d({0.0, 1.0, 10.0});
  auto red = local_search_reduce(tri, 2, 1.0, ReduceInit::Random, 3);
  REQUIRE(red.achieved_distance);
  CHECK(*red.achieved_distance == doctest::Approx(1.0 / 3.0));
  CHECK(*red.achieved_distance == doctest::Approx(exhaustive_best(tri, 2, 1.0)));

  // M = N-1 on distinct atoms drops the cheapest atom.
  auto quad = uniform_1d({0.0, 0.1, 5.0, 9.0});
  auto red3 = local_search_reduce(quad, 3, 1.0, ReduceInit::KMeans, 5);
  CHECK(*red3.achieved_distance == doctest::Approx(exhaustive_best(quad, 3, 1.0)));
  // Removal of 0.1 (absorbed by 0.0) costs 0.1/4, the cheapest removal.
  CHECK(*red3.achieved_distance == doctest::Approx(0.1 / 4.0));

  // Already-optimal init is a fixed point.
  std::vector<int> opt{1, 2};
  auto fixed = local_search_reduce(tri, 2, 1.0, ReduceInit::Given, 0, &opt);
  CHECK(fixed.source_indices == opt);
}

TEST_CASE("random reduce determinism and edge cases") {
  Rng rng(17);
  SampleSet p = tu::samples_in_box(rng, 9, VectorXd::Constant(2, -1.0),
                                   VectorXd::Constant(2, 1.0));
  auto a = random_reduce(p, 4, 42);
  auto b = random_reduce(p, 4, 42);
  CHECK(a.source_indices == b.source_indices);
  CHECK((a.probabilities.array() == 0.25).all());

  auto full = random_reduce(p, 9, 7);
  std::vector<int> sorted = full.source_indices;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 9; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);

  auto single = random_reduce(p, 1, 5);
  CHECK(single.probabilities(0) == doctest::Approx(1.0));
}

TEST_CASE("recover probabilities") {
  auto tri = uniform_1d({0.0, 1.0, 10.0});
  auto all = recover_probabilities(tri, {0, 1, 2});
  CHECK(all.isApprox(VectorXd::Constant(3, 1.0 / 3.0), 1e-14));

  auto two = recover_probabilities(tri, {1, 2});
  CHECK(two(0) == doctest::Approx(2.0 / 3.0));
  CHECK(two(1) == doctest::Approx(1.0 / 3.0));

  // Equidistant atom assigns to the lower support position.
  auto mid = uniform_1d({0.0, 1.0, 2.0});
  auto tie = recover_probabilities(mid, {0, 2});
  CHECK(tie(0) == doctest::Approx(2.0 / 3.0));
  CHECK(tie(1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("strict decrease and random-baseline comparison") {
  Rng rng(23);
  SampleSet p = tu::samples_in_box(rng, 20, VectorXd::Constant(2, -1.0),
                                   VectorXd::Constant(2, 1.0));
  int wins = 0, ties = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ls = local_search_reduce(p, 5, 1.0, ReduceInit::KMeans, seed);
    auto rnd = random_reduce(p, 5, seed);
    const double d_rnd = closest_fixed_support_distance(p, rnd.source_indices, 1.0).distance;
    if (*ls.achieved_distance < d_rnd - 1e-12) ++wins;
    if (std::abs(*ls.achieved_distance - d_rnd) <= 1e-12) ++ties;
  }
  CHECK(wins + ties >= 18);  // local search at least matches random almost always
}

TEST_CASE("ho reduce") {
  Rng rng(71);
  SampleSet p = tu::samples_in_box(rng, 16, VectorXd::Constant(1, -1.0),
                                   VectorXd::Constant(1, 1.0));
  LossPiece piece;
  piece.slope_matrix = MatrixXd::Identity(1, 1);
  piece.slope_offset = VectorXd::Zero(1);
  piece.intercept_vec = VectorXd::Zero(1);
  PiecewiseAffineLoss loss({piece});
  auto space = DecisionSpace::box(VectorXd::Zero(1), VectorXd::Ones(1));

  // M = N: lambda = 0 and the HO value equals full-sample SAA.
  auto full = ho_reduce(p, p.size(), loss, space, 11);
  CHECK(full.instance.lambda == doctest::Approx(0.0));
  auto v_full = solve(build_ho_mad_lp(full.instance).program);
  HOInstance saa_inst(loss, space, p, MadAmbiguity::from_samples(p), 0.0);
  auto v_saa = solve(build_saa(saa_inst).program);
  REQUIRE(v_full.status == SolveStatus::Optimal);
  CHECK(v_full.objective == doctest::Approx(v_saa.objective).epsilon(1e-6));

  // M = 1: lambda = 1 - 1/sqrt(N); single kept atom.
  auto one = ho_reduce(p, 1, loss, space, 11);
  CHECK(one.reduced.size() == 1);
  CHECK(*one.reduced.lambda ==
        doctest::Approx(1.0 - 1.0 / std::sqrt(static_cast<double>(p.size()))));

  // Embedded information moments equal the full-sample moments.
  const auto& mad = std::get<MadAmbiguity>(one.instance.ambiguity);
  auto mom = p.moments();
  CHECK(mad.mean.isApprox(mom.mean, 1e-14));
  CHECK(mad.deviation.isApprox(mom.mad, 1e-14));

  // Serialization round trip sanity.
  auto csv = one.reduced.to_csv();
  CHECK(csv.find("index,x1,omega") != std::string::npos);
  CHECK(one.reduced.to_json().find("\"method\":\"ho\"") != std::string::npos);
}
