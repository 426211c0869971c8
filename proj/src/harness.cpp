#include "ho/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ho/reformulate.hpp"
#include "ho/rng.hpp"
#include "ho/scenred.hpp"
#include "ho/weights.hpp"

namespace ho {

using nlohmann::json;

double portfolio_out_of_sample(double rho, double a, const VectorXd& weights,
                               const SampleSet& test, std::optional<double> frozen_tau) {
  require(a > 0.0 && a < 1.0, "portfolio_out_of_sample: CVaR level in (0,1)");
  require(weights.size() == test.dim(), "portfolio_out_of_sample: dimension mismatch");
  const Index t = test.size();
  VectorXd losses = -(test.atoms() * weights);
  const double k2 = 1.0 + rho / a;
  auto objective_at = [&](double tau) {
    double acc = 0.0;
    for (Index j = 0; j < t; ++j)
      acc += test.weights()(j) * std::max(losses(j) + rho * tau,
                                          k2 * losses(j) + rho * (1.0 - 1.0 / a) * tau);
    return acc;
  };
  if (frozen_tau) return objective_at(*frozen_tau);

  // Piecewise affine and convex in tau with breakpoints at the per-sample
  // losses; scanning sorted breakpoints with prefix sums is exact.
  std::vector<Index> order(static_cast<size_t>(t));
  for (Index j = 0; j < t; ++j) order[static_cast<size_t>(j)] = j;
  std::sort(order.begin(), order.end(),
            [&](Index i, Index j) { return losses(i) < losses(j); });
  // Weighted prefix sums over sorted losses.
  double best = std::numeric_limits<double>::infinity();
  double wsum_below = 0.0, lsum_below = 0.0;
  double wsum_total = test.weights().sum();
  double lsum_total = 0.0;
  for (Index j = 0; j < t; ++j) lsum_total += test.weights()(j) * losses(j);
  for (Index k = 0; k < t; ++k) {
    const Index j = order[static_cast<size_t>(k)];
    wsum_below += test.weights()(j);
    lsum_below += test.weights()(j) * losses(j);
    const double tau = losses(j);
    const double val = lsum_below + rho * tau * wsum_below +
                       k2 * (lsum_total - lsum_below) +
                       rho * (1.0 - 1.0 / a) * tau * (wsum_total - wsum_below);
    best = std::min(best, val);
  }
  return best;
}

double lotsizing_out_of_sample(const LotSizingInstance& inst, const VectorXd& x,
                               const SampleSet& test) {
  double acc = 0.0;
  for (Index j = 0; j < test.size(); ++j)
    acc += test.weights()(j) * second_stage_cost(inst, x, test.atom(j));
  return inst.storage_cost.dot(x) + acc;
}

double approximation_error(double opt_m, double opt_star) {
  require(opt_star != 0.0, "approximation_error: reference optimum must be nonzero");
  return std::abs(opt_m - opt_star) / std::abs(opt_star) * 100.0;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["problem"] = problem;
  j["n_values"] = n_values;
  j["m_values"] = m_values;
  j["methods"] = methods;
  j["replications"] = replications;
  j["test_samples"] = test_samples;
  j["master_seed"] = master_seed;
  j["out_dir"] = out_dir;
  j["solver_tol"] = solver_tol;
  j["portfolio"] = json::parse(portfolio.to_json());
  j["wasserstein_radius_lo"] = wasserstein_radius_lo;
  j["wasserstein_radius_hi"] = wasserstein_radius_hi;
  j["wasserstein_radius_grid"] = wasserstein_radius_grid;
  j["cv_folds"] = cv_folds;
  j["gamma1"] = gamma1;
  j["gamma2"] = gamma2;
  j["freeze_tau"] = freeze_tau;
  j["lotsizing_stores"] = lotsizing_stores;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  c.problem = j.value("problem", std::string("portfolio"));
  if (j.contains("n_values")) c.n_values = j["n_values"].get<std::vector<Index>>();
  if (j.contains("m_values")) c.m_values = j["m_values"].get<std::vector<Index>>();
  if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
  c.replications = j.value("replications", 25);
  c.test_samples = j.value("test_samples", Index{100000});
  c.master_seed = j.value("master_seed", std::uint64_t{0});
  c.out_dir = j.value("out_dir", std::string());
  c.solver_tol = j.value("solver_tol", 1e-8);
  if (j.contains("portfolio")) c.portfolio = PortfolioInstance::from_json(j["portfolio"].dump());
  c.wasserstein_radius_lo = j.value("wasserstein_radius_lo", 1e-3);
  c.wasserstein_radius_hi = j.value("wasserstein_radius_hi", 1.0);
  c.wasserstein_radius_grid = j.value("wasserstein_radius_grid", 10);
  c.cv_folds = j.value("cv_folds", 5);
  c.gamma1 = j.value("gamma1", 0.1);
  c.gamma2 = j.value("gamma2", 1.5);
  c.freeze_tau = j.value("freeze_tau", false);
  c.lotsizing_stores = j.value("lotsizing_stores", Index{10});
  require(c.replications >= 1 && c.test_samples >= 1 && !c.n_values.empty(),
          "ExperimentConfig: counts must be >= 1");
  return c;
}

namespace {

std::string fmt(double v) { return format_double(v); }

struct PortfolioTrueMoments {
  VectorXd mean;
  MatrixXd cov;
  VectorXd mad;
};

PortfolioTrueMoments portfolio_true_moments(const PortfolioInstance& inst) {
  const Index m = inst.assets;
  const bool var = inst.normal_param == NormalParam::Variance;
  const double factor_var =
      var ? inst.factor_scale : inst.factor_scale * inst.factor_scale;
  PortfolioTrueMoments out;
  out.mean.resize(m);
  out.cov = MatrixXd::Constant(m, m, factor_var);
  out.mad.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double scale = (i + 1) * inst.idio_scale_step;
    const double idio_var = var ? scale : scale * scale;
    out.mean(i) = (i + 1) * inst.idio_mean_step;
    out.cov(i, i) += idio_var;
    // MAD of a normal with this variance.
    out.mad(i) = std::sqrt(2.0 * (factor_var + idio_var) / M_PI);
  }
  return out;
}

struct CellKey {
  std::string method;
  Index n;
  Index m_kept;
  bool operator<(const CellKey& o) const {
    return std::tie(method, n, m_kept) < std::tie(o.method, o.n, o.m_kept);
  }
};

void aggregate(ExperimentTable& table) {
  std::vector<CellKey> order;
  std::map<CellKey, CellAggregate> cells;
  for (const auto& r : table.records) {
    CellKey key{r.method, r.n, r.m_kept};
    auto it = cells.find(key);
    if (it == cells.end()) {
      order.push_back(key);
      CellAggregate agg;
      agg.method = r.method;
      agg.n = r.n;
      agg.m_kept = r.m_kept;
      it = cells.emplace(key, agg).first;
    }
    auto& agg = it->second;
    if (r.status == SolveStatus::Optimal) {
      ++agg.successes;
      agg.mean_oos += r.out_of_sample;
      if (std::isfinite(r.error_percent)) {
        if (!std::isfinite(agg.mean_error_percent)) agg.mean_error_percent = 0.0;
        agg.mean_error_percent += r.error_percent;
      }
    } else {
      ++agg.failures;
    }
    agg.mean_prep_seconds += r.prep_seconds;
    agg.mean_solve_seconds += r.solve_seconds;
  }
  table.cells.clear();
  for (const auto& key : order) {
    auto agg = cells[key];
    const int total = agg.successes + agg.failures;
    if (agg.successes > 0) {
      agg.mean_oos /= agg.successes;
      if (std::isfinite(agg.mean_error_percent)) agg.mean_error_percent /= agg.successes;
    }
    if (total > 0) {
      agg.mean_prep_seconds /= total;
      agg.mean_solve_seconds /= total;
    }
    table.cells.push_back(std::move(agg));
  }
}

struct PortfolioMethodState {
  bool has_c = false;
  double c = 0.0;
  double prep_seconds = 0.0;  // charged once, at the estimation N
};

// FNV-1a; std::hash is implementation-defined and would break cross-platform
// reproducibility of the derived seed streams.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

VectorXd solve_portfolio_decision(const BuiltProgram& built, const SolveSettings& settings,
                                  SolveStatus& status, double& seconds) {
  auto sol = solve(built.program, settings);
  status = sol.status;
  seconds = sol.solve_seconds;
  if (sol.status != SolveStatus::Optimal) return VectorXd();
  return sol.x.head(built.decision_dim);
}

void run_portfolio(const ExperimentConfig& cfg, ExperimentTable& table) {
  const Index m = cfg.portfolio.assets;
  const double rho = cfg.portfolio.risk_aversion;
  const double a = cfg.portfolio.cvar_level;
  auto loss = portfolio_pieces(rho, a, m);
  auto space = portfolio_space(m);
  const auto truth = portfolio_true_moments(cfg.portfolio);
  const double inf = std::numeric_limits<double>::infinity();
  MadAmbiguity mad_true(VectorXd::Constant(m, -inf), VectorXd::Constant(m, inf), truth.mean,
                        truth.mad);
  MomentAmbiguity moment_true(truth.mean, truth.cov, cfg.gamma1, cfg.gamma2);
  SolveSettings settings;
  settings.abs_tol = settings.rel_tol = cfg.solver_tol;

  std::vector<Index> sweep = cfg.n_values;
  std::sort(sweep.begin(), sweep.end());
  const Index n0 = sweep.front();

  std::vector<std::string> methods = cfg.methods;
  if (methods.empty()) methods = {"saa", "mad_sqrt_m0", "wasserstein"};

  for (int rep = 0; rep < cfg.replications; ++rep) {
    SampleSet test = generate_portfolio_samples(cfg.portfolio, cfg.test_samples,
                                                derive_seed(cfg.master_seed, {9001, static_cast<std::uint64_t>(rep)}));
    std::map<std::string, PortfolioMethodState> cstate;
    for (Index n : sweep) {
      SampleSet train = generate_portfolio_samples(
          cfg.portfolio, n,
          derive_seed(cfg.master_seed, {1, static_cast<std::uint64_t>(n),
                                        static_cast<std::uint64_t>(rep)}));
      for (const auto& method : methods) {
        ResultRecord rec;
        rec.method = method;
        rec.n = n;
        rec.replication = rep;
        VectorXd decision;  // (x, tau)
        try {
          if (method == "saa") {
            HOInstance inst(loss, space, train, mad_true, 0.0);
            decision = solve_portfolio_decision(build_saa(inst), settings, rec.status,
                                                rec.solve_seconds);
          } else if (method == "wasserstein") {
            // Radius by cross-validation at every N (no C/sqrt(N) rule).
            const auto t0 = std::chrono::steady_clock::now();
            std::vector<double> radii;
            for (int g = 0; g < cfg.wasserstein_radius_grid; ++g) {
              const double t = cfg.wasserstein_radius_grid == 1
                                   ? 0.0
                                   : static_cast<double>(g) /
                                         (cfg.wasserstein_radius_grid - 1);
              radii.push_back(cfg.wasserstein_radius_lo *
                              std::pow(cfg.wasserstein_radius_hi / cfg.wasserstein_radius_lo,
                                       t));
            }
            const auto folds = fold_indices(train.size(), cfg.cv_folds,
                                            derive_seed(cfg.master_seed,
                                                        {4, static_cast<std::uint64_t>(n),
                                                         static_cast<std::uint64_t>(rep)}));
            std::vector<double> score(radii.size(), 0.0);
            for (int k = 0; k < cfg.cv_folds; ++k) {
              std::vector<int> val_idx = folds[static_cast<size_t>(k)];
              std::vector<int> tr_idx;
              for (size_t q = 0; q < folds.size(); ++q)
                if (static_cast<int>(q) != k)
                  tr_idx.insert(tr_idx.end(), folds[q].begin(), folds[q].end());
              SampleSet tr = train.select(tr_idx), va = train.select(val_idx);
              for (size_t ri = 0; ri < radii.size(); ++ri) {
                auto built = build_wasserstein_penalty(loss, space, tr, radii[ri],
                                                       GroundNorm::L2);
                auto sol = solve(built.program, settings);
                if (sol.status != SolveStatus::Optimal) {
                  score[ri] += 1e30;
                  continue;
                }
                score[ri] += saa_objective(loss, sol.x.head(m + 1), va);
              }
            }
            const size_t best =
                std::distance(score.begin(), std::min_element(score.begin(), score.end()));
            rec.prep_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            auto built =
                build_wasserstein_penalty(loss, space, train, radii[best], GroundNorm::L2);
            decision = solve_portfolio_decision(built, settings, rec.status,
                                                rec.solve_seconds);
          } else {
            // HO variants: resolve the information set and the weight.
            const bool is_mad = method.rfind("mad_", 0) == 0;
            const bool is_moment = method.rfind("moment_", 0) == 0;
            require(is_mad || is_moment, "run_experiment: unknown method " + method);
            AmbiguitySet info = is_mad ? AmbiguitySet(mad_true) : AmbiguitySet(moment_true);
            auto build = [&](const SampleSet& data, double lambda) {
              HOInstance inst(loss, space, data, info, lambda);
              return is_mad ? build_ho_mad_lp(inst) : build_ho_moment_sdp(inst);
            };
            auto& state = cstate[method];
            if (!state.has_c) {
              // Estimate once per replication, at the smallest N of the sweep.
              require(n == n0, "estimate-once bookkeeping out of order");
              const std::uint64_t eseed = derive_seed(
                  cfg.master_seed, {5, static_cast<std::uint64_t>(rep), fnv1a(method)});
              if (method.ends_with("_sqrt_m0")) {
                state.c = estimate_c_fixed(n0);
              } else if (method.ends_with("_cross")) {
                CrossValProblem prob{
                    [&](const SampleSet& tr, double lambda) {
                      auto built = build(tr, lambda);
                      auto sol = solve(built.program, settings);
                      require(sol.status == SolveStatus::Optimal, "cv solve failed");
                      return VectorXd(sol.x.head(m + 1));
                    },
                    [&](const VectorXd& x, const SampleSet& va) {
                      return saa_objective(loss, x, va);
                    }};
                std::vector<double> grid;
                const double g_lo = 0.05 * std::sqrt(static_cast<double>(n0));
                const double g_hi = std::sqrt(static_cast<double>(n0));
                for (int g = 0; g < 20; ++g)
                  grid.push_back(g_lo * std::pow(g_hi / g_lo, g / 19.0));
                auto repx = estimate_c_crossval(prob, train, grid, cfg.cv_folds, eseed);
                state.c = repx.constant;
                state.prep_seconds = repx.wall_seconds;
                ++table.estimation_calls;
              } else if (method.ends_with("_gap")) {
                GapProblem prob{
                    [&](const SampleSet& tr) {
                      HOInstance inst(loss, space, tr, info, 0.0);
                      auto sol = solve(build_saa(inst).program, settings);
                      require(sol.status == SolveStatus::Optimal, "saa solve failed");
                      return VectorXd(sol.x.head(m + 1));
                    },
                    [&](const SampleSet&) {
                      auto built = build_pure_dro(loss, space, info);
                      auto sol = solve(built.program, settings);
                      require(sol.status == SolveStatus::Optimal, "dro solve failed");
                      return VectorXd(sol.x.head(m + 1));
                    },
                    [&](const VectorXd& x, const SampleSet& va) {
                      VectorXd out(va.size());
                      for (Index j = 0; j < va.size(); ++j)
                        out(j) = evaluate_loss(loss, x, va.atom(j));
                      return out;
                    },
                    &space};
                auto repx = estimate_c_gap(prob, train, cfg.cv_folds, 0.05, 0.0,
                                           std::sqrt(static_cast<double>(n0)), 1e-3, eseed);
                state.c = repx.constant;
                state.prep_seconds = repx.wall_seconds;
                ++table.estimation_calls;
              } else {
                throw ArgumentError("run_experiment: unknown method " + method);
              }
              state.has_c = true;
              rec.prep_seconds = state.prep_seconds;
            }
            const double lambda =
                std::min(1.0, state.c / std::sqrt(static_cast<double>(n)));
            decision = solve_portfolio_decision(build(train, lambda), settings, rec.status,
                                                rec.solve_seconds);
          }
          if (rec.status == SolveStatus::Optimal) {
            std::optional<double> frozen;
            if (cfg.freeze_tau) frozen = decision(m);
            rec.out_of_sample =
                portfolio_out_of_sample(rho, a, decision.head(m), test, frozen);
          }
        } catch (const std::exception&) {
          rec.status = SolveStatus::NumericalFailure;
        }
        table.records.push_back(std::move(rec));
      }
    }
  }
}

void run_lotsizing(const ExperimentConfig& cfg, ExperimentTable& table) {
  LotSizingInstance inst =
      generate_lotsizing_instance(cfg.lotsizing_stores, derive_seed(cfg.master_seed, {7}));
  SolveSettings settings;
  settings.abs_tol = settings.rel_tol = cfg.solver_tol;
  std::vector<std::string> methods = cfg.methods;
  if (methods.empty()) methods = {"ho", "random"};

  for (int rep = 0; rep < cfg.replications; ++rep) {
    SampleSet test = generate_lotsizing_demands(
        inst, cfg.test_samples, derive_seed(cfg.master_seed, {9002, static_cast<std::uint64_t>(rep)}));
    for (Index n : cfg.n_values) {
      SampleSet train = generate_lotsizing_demands(
          inst, n,
          derive_seed(cfg.master_seed,
                      {2, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)}));
      // Reference: SAA with all N scenarios, evaluated out of sample.
      auto full = lotsizing_ho_solve(inst, train, 0.0, nullptr, settings);
      double opt_star = std::numeric_limits<double>::quiet_NaN();
      if (full.status == SolveStatus::Optimal)
        opt_star = lotsizing_out_of_sample(inst, full.allocation, test);
      for (Index m_keep : cfg.m_values) {
        const std::uint64_t pick_seed = derive_seed(
            cfg.master_seed, {3, static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(m_keep),
                              static_cast<std::uint64_t>(rep)});
        for (const auto& method : methods) {
          ResultRecord rec;
          rec.method = method;
          rec.n = n;
          rec.m_kept = m_keep;
          rec.replication = rep;
          try {
            VectorXd allocation;
            if (method == "ho") {
              auto reduced = random_reduce(train, m_keep, pick_seed);
              MadAmbiguity info = MadAmbiguity::from_samples(train);
              SampleSet kept(reduced.atoms, reduced.probabilities);
              const double lambda = lambda_for_reduction(m_keep, n);
              auto sol = lotsizing_ho_solve(inst, kept, lambda, &info, settings);
              rec.status = sol.status;
              rec.solve_seconds = sol.raw.solve_seconds;
              if (sol.status == SolveStatus::Optimal) allocation = sol.allocation;
            } else if (method == "random") {
              auto reduced = random_reduce(train, m_keep, pick_seed);
              SampleSet kept(reduced.atoms, reduced.probabilities);
              auto sol = lotsizing_ho_solve(inst, kept, 0.0, nullptr, settings);
              rec.status = sol.status;
              rec.solve_seconds = sol.raw.solve_seconds;
              if (sol.status == SolveStatus::Optimal) allocation = sol.allocation;
            } else if (method == "local_search") {
              const auto t0 = std::chrono::steady_clock::now();
              auto reduced = local_search_reduce(train, m_keep, 1.0, ReduceInit::KMeans,
                                                 pick_seed);
              rec.prep_seconds =
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
              SampleSet kept(reduced.atoms, reduced.probabilities);
              auto sol = lotsizing_ho_solve(inst, kept, 0.0, nullptr, settings);
              rec.status = sol.status;
              rec.solve_seconds = sol.raw.solve_seconds;
              if (sol.status == SolveStatus::Optimal) allocation = sol.allocation;
            } else {
              throw ArgumentError("run_experiment: unknown method " + method);
            }
            if (rec.status == SolveStatus::Optimal) {
              rec.out_of_sample = lotsizing_out_of_sample(inst, allocation, test);
              if (std::isfinite(opt_star) && opt_star != 0.0)
                rec.error_percent = approximation_error(rec.out_of_sample, opt_star);
            }
          } catch (const std::exception&) {
            rec.status = SolveStatus::NumericalFailure;
          }
          table.records.push_back(std::move(rec));
        }
      }
    }
  }
}

}  // namespace

std::string ExperimentTable::results_csv() const {
  std::ostringstream os;
  os << "# schema ho.results.v1\n";
  os << "problem,method,n,m,replications,failures,mean_oos,mean_error_percent\n";
  for (const auto& c : cells) {
    os << config.problem << ',' << c.method << ',' << c.n << ',' << c.m_kept << ','
       << (c.successes + c.failures) << ',' << c.failures << ',' << fmt(c.mean_oos) << ',';
    if (std::isfinite(c.mean_error_percent)) os << fmt(c.mean_error_percent);
    os << '\n';
  }
  return os.str();
}

std::string ExperimentTable::timings_csv() const {
  std::ostringstream os;
  os << "# schema ho.timings.v1\n";
  os << "problem,method,n,m,mean_prep_seconds,mean_solve_seconds\n";
  for (const auto& c : cells) {
    os << config.problem << ',' << c.method << ',' << c.n << ',' << c.m_kept << ','
       << fmt(c.mean_prep_seconds) << ',' << fmt(c.mean_solve_seconds) << '\n';
  }
  return os.str();
}

std::string ExperimentTable::results_json() const {
  json j;
  j["config"] = json::parse(config.to_json());
  j["estimation_calls"] = estimation_calls;
  j["records"] = json::array();
  for (const auto& r : records) {
    json rj;
    rj["method"] = r.method;
    rj["n"] = r.n;
    rj["m"] = r.m_kept;
    rj["replication"] = r.replication;
    rj["status"] = to_string(r.status);
    rj["out_of_sample"] = r.out_of_sample;
    if (std::isfinite(r.error_percent)) rj["error_percent"] = r.error_percent;
    rj["prep_seconds"] = r.prep_seconds;
    rj["solve_seconds"] = r.solve_seconds;
    j["records"].push_back(std::move(rj));
  }
  j["cells"] = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["method"] = c.method;
    cj["n"] = c.n;
    cj["m"] = c.m_kept;
    cj["mean_oos"] = c.mean_oos;
    if (std::isfinite(c.mean_error_percent)) cj["mean_error_percent"] = c.mean_error_percent;
    cj["failures"] = c.failures;
    cj["successes"] = c.successes;
    j["cells"].push_back(std::move(cj));
  }
  return j.dump(2);
}

void ExperimentTable::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / "results.csv") << results_csv();
  std::ofstream(fs::path(dir) / "timings.csv") << timings_csv();
  std::ofstream(fs::path(dir) / "results.json") << results_json();
}

int ExperimentTable::failed_cells() const {
  int failed = 0;
  for (const auto& c : cells)
    if (c.failures > 0) ++failed;
  return failed;
}

ExperimentTable run_experiment(const ExperimentConfig& config) {
  ExperimentTable table;
  table.config = config;
  if (config.problem == "portfolio") {
    run_portfolio(config, table);
  } else if (config.problem == "lotsizing") {
    run_lotsizing(config, table);
  } else {
    throw ArgumentError("run_experiment: unknown problem '" + config.problem + "'");
  }
  aggregate(table);
  if (!config.out_dir.empty()) table.write(config.out_dir);
  return table;
}

}  // namespace ho
