#include "ho.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ho/harness.hpp"
#include "ho/reformulate.hpp"
#include "ho/scenred.hpp"
#include "ho/weights.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& what) { g_last_error = what; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
ho_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ho::ArgumentError& e) {
    set_error(e.what());
    return HO_ERROR_ARGUMENT;
  } catch (const json::exception& e) {
    set_error(e.what());
    return HO_ERROR_PARSE;
  } catch (const std::exception& e) {
    set_error(e.what());
    return HO_ERROR_INTERNAL;
  }
}

ho::SolveSettings settings_from_json(const char* options_json) {
  ho::SolveSettings s;
  if (options_json != nullptr && options_json[0] != '\0') {
    json j = json::parse(options_json);
    s.abs_tol = j.value("abs_tol", s.abs_tol);
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.max_iter = j.value("max_iter", s.max_iter);
  }
  return s;
}

}  // namespace

struct ho_samples {
  ho::SampleSet set;
};

struct ho_instance {
  ho::HOInstance inst;
};

struct ho_result {
  ho::Solution solution;
  Eigen::VectorXd decision;
};

extern "C" {

const char* ho_version(void) { return "1.0.0"; }

const char* ho_status_string(ho_status status) {
  switch (status) {
    case HO_OK: return "ok";
    case HO_ERROR_ARGUMENT: return "argument error";
    case HO_ERROR_PARSE: return "parse error";
    case HO_ERROR_IO: return "io error";
    case HO_ERROR_SOLVE: return "solve error";
    case HO_ERROR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* ho_last_error(void) { return g_last_error.c_str(); }

void ho_string_free(char* text) { std::free(text); }

ho_status ho_samples_read_csv(const char* path, ho_samples** out) {
  return guarded([&]() -> ho_status {
    std::ifstream f(path);
    if (!f.good()) {
      set_error(std::string("cannot open ") + path);
      return HO_ERROR_IO;
    }
    std::ostringstream os;
    os << f.rdbuf();
    *out = new ho_samples{ho::SampleSet::from_csv(os.str())};
    return HO_OK;
  });
}

ho_status ho_samples_write_csv(const ho_samples* samples, const char* path) {
  return guarded([&]() -> ho_status {
    std::ofstream f(path);
    if (!f.good()) {
      set_error(std::string("cannot open ") + path);
      return HO_ERROR_IO;
    }
    f << samples->set.to_csv();
    return HO_OK;
  });
}

ho_status ho_samples_parse_json(const char* text, ho_samples** out) {
  return guarded([&]() -> ho_status {
    *out = new ho_samples{ho::SampleSet::from_json(text)};
    return HO_OK;
  });
}

ho_status ho_samples_to_json(const ho_samples* samples, char** out) {
  return guarded([&]() -> ho_status {
    *out = dup_string(samples->set.to_json());
    return HO_OK;
  });
}

int ho_samples_count(const ho_samples* samples) {
  return static_cast<int>(samples->set.size());
}

int ho_samples_dim(const ho_samples* samples) { return static_cast<int>(samples->set.dim()); }

void ho_samples_free(ho_samples* samples) { delete samples; }

ho_status ho_instance_parse_json(const char* text, ho_instance** out) {
  return guarded([&]() -> ho_status {
    *out = new ho_instance{ho::HOInstance::from_json(text)};
    return HO_OK;
  });
}

ho_status ho_instance_read_json(const char* path, ho_instance** out) {
  return guarded([&]() -> ho_status {
    std::ifstream f(path);
    if (!f.good()) {
      set_error(std::string("cannot open ") + path);
      return HO_ERROR_IO;
    }
    std::ostringstream os;
    os << f.rdbuf();
    *out = new ho_instance{ho::HOInstance::from_json(os.str())};
    return HO_OK;
  });
}

ho_status ho_instance_solve(const ho_instance* instance, const char* options_json,
                            ho_result** out) {
  return guarded([&]() -> ho_status {
    auto built = ho::build_ho(instance->inst);
    auto solution = ho::solve(built.program, settings_from_json(options_json));
    auto* res = new ho_result{std::move(solution), {}};
    if (res->solution.status == ho::SolveStatus::Optimal)
      res->decision = built.decision(res->solution);
    *out = res;
    return HO_OK;
  });
}

void ho_instance_free(ho_instance* instance) { delete instance; }

const char* ho_result_status(const ho_result* result) {
  return ho::to_string(result->solution.status);
}

double ho_result_objective(const ho_result* result) { return result->solution.objective; }

int ho_result_decision_dim(const ho_result* result) {
  return static_cast<int>(result->decision.size());
}

ho_status ho_result_decision(const ho_result* result, double* buffer, int length) {
  return guarded([&]() -> ho_status {
    if (length < result->decision.size()) {
      set_error("buffer too small");
      return HO_ERROR_ARGUMENT;
    }
    for (Eigen::Index i = 0; i < result->decision.size(); ++i) buffer[i] = result->decision(i);
    return HO_OK;
  });
}

ho_status ho_result_to_json(const ho_result* result, char** out) {
  return guarded([&]() -> ho_status {
    json j;
    j["status"] = ho::to_string(result->solution.status);
    j["objective"] = result->solution.objective;
    j["dual_objective"] = result->solution.dual_objective;
    j["iterations"] = result->solution.iterations;
    j["solve_seconds"] = result->solution.solve_seconds;
    j["decision"] = std::vector<double>(result->decision.data(),
                                        result->decision.data() + result->decision.size());
    *out = dup_string(j.dump(2));
    return HO_OK;
  });
}

void ho_result_free(ho_result* result) { delete result; }

ho_status ho_estimate(const char* request_json, char** report_json) {
  return guarded([&]() -> ho_status {
    json req = json::parse(request_json);
    const std::string method = req.at("method").get<std::string>();
    json out;
    if (method == "fixed") {
      const auto m0 = req.at("m0").get<ho::Index>();
      out["method"] = "fixed";
      out["C"] = ho::estimate_c_fixed(m0);
      out["wall_seconds"] = 0.0;
    } else if (method == "reduction") {
      const auto m = req.at("m").get<ho::Index>();
      const auto n = req.at("n").get<ho::Index>();
      out["method"] = "reduction";
      out["lambda"] = ho::lambda_for_reduction(m, n);
      out["wall_seconds"] = 0.0;
    } else if (method == "cross" || method == "gap") {
      ho::HOInstance inst = ho::HOInstance::from_json(req.at("instance").dump());
      const int folds = req.value("folds", 5);
      const std::uint64_t seed = req.value("seed", std::uint64_t{0});
      const bool single_fold = req.value("train_on_single_fold", true);
      ho::SolveSettings settings;
      ho::EstimationReport rep;
      if (method == "cross") {
        std::vector<double> grid;
        if (req.contains("grid")) {
          grid = req["grid"].get<std::vector<double>>();
        } else {
          const double n0 = static_cast<double>(inst.samples.size());
          const double lo = 0.05 * std::sqrt(n0), hi = std::sqrt(n0);
          for (int g = 0; g < 20; ++g) grid.push_back(lo * std::pow(hi / lo, g / 19.0));
        }
        ho::CrossValProblem prob{
            [&](const ho::SampleSet& train, double lambda) {
              ho::HOInstance fit(inst.loss, inst.space, train, inst.ambiguity, lambda);
              auto built = ho::build_ho(fit);
              auto sol = ho::solve(built.program, settings);
              ho::require(sol.status == ho::SolveStatus::Optimal, "cv solve failed");
              return Eigen::VectorXd(built.decision(sol));
            },
            [&](const Eigen::VectorXd& x, const ho::SampleSet& validation) {
              return ho::saa_objective(inst.loss, x, validation);
            }};
        rep = ho::estimate_c_crossval(prob, inst.samples, grid, folds, seed, single_fold);
      } else {
        double lo = 0.0, hi = std::sqrt(static_cast<double>(inst.samples.size()));
        if (req.contains("range")) {
          lo = req["range"][0].get<double>();
          hi = req["range"][1].get<double>();
        }
        ho::GapProblem prob{
            [&](const ho::SampleSet& train) {
              ho::HOInstance fit(inst.loss, inst.space, train, inst.ambiguity, 0.0);
              auto built = ho::build_saa(fit);
              auto sol = ho::solve(built.program, settings);
              ho::require(sol.status == ho::SolveStatus::Optimal, "saa solve failed");
              return Eigen::VectorXd(built.decision(sol));
            },
            [&](const ho::SampleSet&) {
              auto built = ho::build_pure_dro(inst.loss, inst.space, inst.ambiguity);
              auto sol = ho::solve(built.program, settings);
              ho::require(sol.status == ho::SolveStatus::Optimal, "dro solve failed");
              return Eigen::VectorXd(built.decision(sol));
            },
            [&](const Eigen::VectorXd& x, const ho::SampleSet& validation) {
              Eigen::VectorXd v(validation.size());
              for (Eigen::Index j = 0; j < validation.size(); ++j)
                v(j) = ho::evaluate_loss(inst.loss, x, validation.atom(j));
              return v;
            },
            &inst.space};
        rep = ho::estimate_c_gap(prob, inst.samples, folds, req.value("alpha", 0.05), lo, hi,
                                 req.value("tol", 1e-3), seed, single_fold);
      }
      out = json::parse(rep.to_json());
    } else {
      set_error("unknown estimation method '" + method + "'");
      return HO_ERROR_ARGUMENT;
    }
    *report_json = dup_string(out.dump(2));
    return HO_OK;
  });
}

ho_status ho_reduce(const char* request_json, char** result_json) {
  return guarded([&]() -> ho_status {
    json req = json::parse(request_json);
    const std::string method = req.at("method").get<std::string>();
    ho::SampleSet samples = ho::SampleSet::from_json(req.at("samples").dump());
    const auto m_keep = req.at("M").get<ho::Index>();
    const std::uint64_t seed = req.value("seed", std::uint64_t{0});
    json out;
    if (method == "random") {
      out = json::parse(ho::random_reduce(samples, m_keep, seed).to_json());
    } else if (method == "local_search" || method == "local-search") {
      const double l = req.value("l", 1.0);
      const std::string init = req.value("init", std::string("kmeans"));
      auto red = ho::local_search_reduce(
          samples, m_keep, l,
          init == "random" ? ho::ReduceInit::Random : ho::ReduceInit::KMeans, seed);
      out = json::parse(red.to_json());
    } else if (method == "ho") {
      ho::PiecewiseAffineLoss loss = ho::PiecewiseAffineLoss::from_json(req.at("loss").dump());
      ho::DecisionSpace space = ho::DecisionSpace::from_json(req.at("space").dump());
      auto red = ho::ho_reduce(samples, m_keep, loss, space, seed);
      out = json::parse(red.reduced.to_json());
      out["instance"] = json::parse(red.instance.to_json());
    } else {
      set_error("unknown reduction method '" + method + "'");
      return HO_ERROR_ARGUMENT;
    }
    *result_json = dup_string(out.dump(2));
    return HO_OK;
  });
}

ho_status ho_bench(const char* config_json, const char* out_dir, int* failed_cells) {
  return guarded([&]() -> ho_status {
    ho::ExperimentConfig cfg = ho::ExperimentConfig::from_json(config_json);
    if (out_dir != nullptr && out_dir[0] != '\0') cfg.out_dir = out_dir;
    auto table = ho::run_experiment(cfg);
    if (failed_cells != nullptr) *failed_cells = table.failed_cells();
    return HO_OK;
  });
}

}  // extern "C"
