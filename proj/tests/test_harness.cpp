#include <doctest.h>

#include <cmath>

#include "ho/harness.hpp"
#include "ho/reformulate.hpp"
#include "ho/rng.hpp"
#include "test_util.hpp"

using namespace ho;
namespace tu = ho::testutil;

TEST_CASE("portfolio out of sample equals training objective at the saa optimum") {
  PortfolioInstance pinst;
  pinst.assets = 3;
  auto train = generate_portfolio_samples(pinst, 40, 21);
  auto loss = portfolio_pieces(pinst.risk_aversion, pinst.cvar_level, pinst.assets);
  auto space = portfolio_space(pinst.assets);
  Rng rng(5);
  HOInstance inst(loss, space, train, tu::random_mad(rng, pinst.assets), 0.0);
  auto built = build_saa(inst);
  auto sol = solve(built.program);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const VectorXd weights = sol.x.head(pinst.assets);
  // Test set = training set: tau re-optimization recovers the SAA optimum.
  const double oos = portfolio_out_of_sample(pinst.risk_aversion, pinst.cvar_level, weights,
                                             train);
  CHECK(oos == doctest::Approx(sol.objective).epsilon(1e-6));

  // Frozen tau at the trained value gives the same (tau* is optimal there).
  const double frozen = portfolio_out_of_sample(pinst.risk_aversion, pinst.cvar_level,
                                                weights, train, sol.x(pinst.assets));
  CHECK(frozen >= oos - 1e-9);
  CHECK(frozen == doctest::Approx(oos).epsilon(1e-6));

  // Exactness of the breakpoint scan against a dense tau grid.
  double dense = std::numeric_limits<double>::infinity();
  for (double tau = -1.0; tau <= 1.0; tau += 1e-4) {
    dense = std::min(dense, portfolio_out_of_sample(pinst.risk_aversion, pinst.cvar_level,
                                                    weights, train, tau));
  }
  CHECK(oos <= dense + 1e-9);
}

TEST_CASE("constant loss out of sample") {
  // With rho = 0 the objective is -x' xi averaged; constant samples make it
  // constant regardless of weights on the simplex.
  MatrixXd atoms = MatrixXd::Constant(5, 2, 0.7);
  SampleSet test(atoms);
  VectorXd w1(2), w2(2);
  w1 << 1.0, 0.0;
  w2 << 0.3, 0.7;
  const double v1 = portfolio_out_of_sample(0.0, 0.2, w1, test);
  const double v2 = portfolio_out_of_sample(0.0, 0.2, w2, test);
  CHECK(v1 == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(v2 == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("approximation error") {
  CHECK(approximation_error(5.0, 5.0) == doctest::Approx(0.0));
  CHECK(approximation_error(1.05 * 8.0, 8.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(approximation_error(-3.0, 3.0) == doctest::Approx(200.0));
  CHECK_THROWS_AS(approximation_error(1.0, 0.0), ArgumentError);
}

TEST_CASE("tiny portfolio experiment runs and is deterministic") {
  ExperimentConfig cfg;
  cfg.problem = "portfolio";
  cfg.portfolio.assets = 3;
  cfg.n_values = {10, 20};
  cfg.methods = {"saa", "mad_sqrt_m0", "mad_cross"};
  cfg.replications = 2;
  cfg.test_samples = 500;
  cfg.master_seed = 99;
  cfg.cv_folds = 2;
  auto t1 = run_experiment(cfg);
  auto t2 = run_experiment(cfg);
  CHECK(t1.results_csv() == t2.results_csv());
  CHECK(t1.cells.size() == 6);  // 3 methods x 2 N
  for (const auto& c : t1.cells) CHECK(c.failures == 0);

  // Estimate-once: mad_cross estimated once per replication, not per N.
  CHECK(t1.estimation_calls == cfg.replications);
  for (const auto& r : t1.records) {
    if (r.method == "mad_cross" && r.n == 20) CHECK(r.prep_seconds == 0.0);
  }

  // The saa column equals pure SAA per cell: resolve by hand for one cell.
  auto loss = portfolio_pieces(cfg.portfolio.risk_aversion, cfg.portfolio.cvar_level, 3);
  auto space = portfolio_space(3);
  SampleSet train = generate_portfolio_samples(cfg.portfolio, 10, derive_seed(99, {1, 10, 0}));
  SampleSet test = generate_portfolio_samples(cfg.portfolio, 500, derive_seed(99, {9001, 0}));
  Rng rng(1);
  HOInstance inst(loss, space, train, tu::random_mad(rng, 3), 0.0);
  auto sol = solve(build_saa(inst).program);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const double expect = portfolio_out_of_sample(cfg.portfolio.risk_aversion,
                                                cfg.portfolio.cvar_level,
                                                sol.x.head(3), test);
  for (const auto& r : t1.records) {
    if (r.method == "saa" && r.n == 10 && r.replication == 0)
      CHECK(r.out_of_sample == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("tiny lotsizing experiment") {
  ExperimentConfig cfg;
  cfg.problem = "lotsizing";
  cfg.lotsizing_stores = 3;
  cfg.n_values = {12};
  cfg.m_values = {4};
  cfg.methods = {"ho", "random"};
  cfg.replications = 1;
  cfg.test_samples = 30;
  cfg.master_seed = 7;
  auto table = run_experiment(cfg);
  CHECK(table.cells.size() == 2);
  for (const auto& c : table.cells) {
    CHECK(c.failures == 0);
    CHECK(std::isfinite(c.mean_error_percent));
  }
  // CSV sanity: schema header, no wall-time columns in results.csv.
  auto csv = table.results_csv();
  CHECK(csv.find("# schema ho.results.v1") != std::string::npos);
  CHECK(csv.find("seconds") == std::string::npos);
  CHECK(table.timings_csv().find("mean_prep_seconds") != std::string::npos);
}
