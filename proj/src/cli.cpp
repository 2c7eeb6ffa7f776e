#include "betaforest/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "betaforest/beta_glm.hpp"
#include "betaforest/csv.hpp"
#include "betaforest/forest.hpp"
#include "betaforest/model_io.hpp"
#include "betaforest/parallel.hpp"
#include "betaforest/simulation.hpp"

namespace betaforest {

namespace {

std::map<std::string, ColumnKind> parse_kind_hints(const std::vector<std::string>& hints) {
  std::map<std::string, ColumnKind> kinds;
  for (const auto& h : hints) {
    const auto eq = h.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--column-kind expects NAME=KIND, got '" + h + "'");
    }
    kinds[h.substr(0, eq)] = parse_column_kind(h.substr(eq + 1));
  }
  return kinds;
}

// Opens `path` for writing, or returns `fallback` for "-".
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) {
        throw std::runtime_error("cannot write '" + path + "'");
      }
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish(const std::string& path) {
    stream_->flush();
    if (!*stream_) {
      throw std::runtime_error("error writing '" + path + "'");
    }
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

DesignSpec parse_design(const std::string& arg, const Dataset& data) {
  if (arg == "linear") {
    return DesignSpec::linear(data);
  }
  if (arg == "intercept") {
    return DesignSpec::intercept_only();
  }
  std::ifstream in(arg);
  if (!in) {
    throw std::runtime_error("--design: '" + arg + "' is neither linear, intercept nor a readable JSON file");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("--design: " + arg + ": " + e.what());
  }
  DesignSpec spec;
  spec.intercept = j.value("intercept", true);
  spec.main_effects = j.value("main_effects", std::vector<std::string>{});
  for (const auto& pair : j.value("interactions", nlohmann::json::array())) {
    if (!pair.is_array() || pair.size() != 2) {
      throw std::runtime_error("--design: interactions must be pairs of column names");
    }
    spec.interactions.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  return spec;
}

struct TrainArgs {
  std::string data;
  std::string outcome = "y";
  std::string criterion = "beta";
  std::string transform = "none";
  std::size_t ntree = 500;
  std::string mtry = "auto";
  std::size_t min_node_size = 5;
  std::size_t min_child_size = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t threads = 0;
  std::vector<std::string> kinds;
};

int do_train(const TrainArgs& a, std::ostream& out) {
  const SplitCriterion criterion = parse_criterion(a.criterion);
  const TransformKind transform = parse_transform(a.transform);
  if (criterion == SplitCriterion::beta_loglik && transform != TransformKind::identity) {
    throw std::invalid_argument("--criterion beta cannot be combined with --transform " + a.transform +
                                ": the beta criterion works on the original (0,1) scale");
  }
  CsvOptions opts;
  opts.outcome = a.outcome;
  opts.kinds = parse_kind_hints(a.kinds);
  const Dataset data = load_csv(a.data, opts);

  ForestConfig config = default_forest_config(data.num_features(), criterion, transform);
  config.ntree = a.ntree;
  config.growth.min_node_size = a.min_node_size;
  if (a.min_child_size > 0) {
    config.growth.min_child_size = a.min_child_size;
  }
  if (a.mtry != "auto") {
    std::size_t pos = 0;
    long long m = -1;
    try {
      m = std::stoll(a.mtry, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != a.mtry.size() || m < 1) {
      throw std::invalid_argument("--mtry expects a positive integer or auto, got '" + a.mtry + "'");
    }
    config.growth.mtry = static_cast<std::size_t>(m);
  }
  const ForestModel model = train_forest(data, config, a.seed, a.threads);
  save_model(a.out, model);
  out << "trained " << model.trees().size() << " trees on " << data.num_rows() << " rows, "
      << data.num_features() << " features (mtry " << config.growth.mtry << "); "
      << (criterion == SplitCriterion::beta_loglik ? "phi" : "sigma2") << " = " << format_double(model.scale())
      << "\n";
  return 0;
}

Dataset load_for_model(const Model& model, const std::string& path, bool require_outcome) {
  CsvOptions opts;
  opts.require_outcome = require_outcome;
  std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ForestModel>) {
          opts.outcome = m.outcome_name();
          opts.schema = m.schema();
        } else {
          opts.outcome = m.outcome_name;
          opts.schema = m.schema;
        }
      },
      model);
  return load_csv(path, opts);
}

struct Predictions {
  std::vector<double> mean;
  std::vector<double> working;
  double scale;
  ScoreFamily family;
};

Predictions model_predictions(const Model& model, const Dataset& data, std::size_t threads) {
  if (const auto* forest = std::get_if<ForestModel>(&model)) {
    ForestPrediction p = predict(*forest, data, threads);
    return {std::move(p.mean), std::move(p.working), forest->scale(), forest->family()};
  }
  const GlmModel& glm = std::get<GlmModel>(model);
  const Eigen::VectorXd eta = build_design_matrix(glm.fit.design, data) * glm.fit.beta;
  return {predict_mean_glm(glm.fit, data), std::vector<double>(eta.data(), eta.data() + eta.size()), glm.fit.phi,
          ScoreFamily::beta};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Beta regression forests and beta regression baselines", "betaforest"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Grow a forest on a CSV dataset");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--outcome", train.outcome, "Outcome column")->capture_default_str();
  train_cmd->add_option("--criterion", train.criterion, "beta or mse")
      ->check(CLI::IsMember({"beta", "mse"}))
      ->capture_default_str();
  train_cmd->add_option("--transform", train.transform, "none, logit or asin")
      ->check(CLI::IsMember({"none", "logit", "asin"}))
      ->capture_default_str();
  train_cmd->add_option("--ntree", train.ntree, "Number of trees")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--mtry", train.mtry, "Candidate features per split, or auto = ceil(sqrt(p))")
      ->capture_default_str();
  train_cmd->add_option("--min-node-size", train.min_node_size, "Nodes larger than this are split")
      ->capture_default_str();
  train_cmd->add_option("--min-child-size", train.min_child_size,
                        "Smallest admissible child (default 2 for beta, 1 for mse)");
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train_cmd->add_option("--threads", train.threads, "Worker threads (0 = all cores)")->capture_default_str();
  train_cmd->add_option("--column-kind", train.kinds, "NAME=numeric|ordinal|categorical (repeatable)");

  std::string model_path;
  std::string data_path;
  std::string out_path = "-";
  std::size_t threads = 0;
  bool no_jacobian = false;
  std::uint64_t seed = 1;

  auto* predict_cmd = app.add_subcommand("predict", "Predict means for a CSV dataset");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--data", data_path, "Input CSV")->required();
  predict_cmd->add_option("--out", out_path, "Output CSV (- for stdout)")->capture_default_str();
  predict_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Predictive log-likelihood of a CSV dataset");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--data", data_path, "CSV with the outcome column")->required();
  eval_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  eval_cmd->add_flag("--no-jacobian", no_jacobian, "Score transformed models on the working scale");

  auto* imp_cmd = app.add_subcommand("importance", "Permutation variable importance of a forest");
  imp_cmd->add_option("--model", model_path, "Forest model file")->required();
  imp_cmd->add_option("--data", data_path, "The training CSV")->required();
  imp_cmd->add_option("--seed", seed, "Permutation seed")->capture_default_str();
  imp_cmd->add_option("--out", out_path, "Output CSV (- for stdout)")->capture_default_str();
  imp_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::vector<std::string> shapes{"symmetric"};
  std::vector<double> phis{2.0};
  std::vector<std::size_t> ps{100};
  std::size_t reps = 20;
  std::string methods = "all";
  std::string summary_path;
  bool full_grid = false;
  bool timing = false;
  ScenarioSpec base;
  HarnessOptions harness;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the simulation study");
  sim_cmd->add_option("--shape", shapes, "symmetric and/or skewed")->capture_default_str();
  sim_cmd->add_option("--phi", phis, "Precision values")->capture_default_str();
  sim_cmd->add_option("--p", ps, "Feature counts (at least 4)")->capture_default_str();
  sim_cmd->add_flag("--full-grid", full_grid, "All 24 scenarios (overrides --shape/--phi/--p)");
  sim_cmd->add_option("--reps", reps, "Replications per scenario")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--methods", methods, "Comma-separated methods or all")->capture_default_str();
  sim_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--out", out_path, "Results CSV (- for stdout)")->capture_default_str();
  sim_cmd->add_option("--summary", summary_path, "Per scenario/method summary CSV");
  sim_cmd->add_option("--n-train", base.n_train, "Training rows")->capture_default_str();
  sim_cmd->add_option("--n-test", base.n_test, "Test rows")->capture_default_str();
  sim_cmd->add_option("--ntree", harness.ntree, "Trees per forest")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--min-node-size", harness.min_node_size, "Forest min node size")->capture_default_str();
  sim_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sim_cmd->add_flag("--timing", timing, "Record wall-clock seconds (makes output non-reproducible)");
  sim_cmd->add_flag("--no-jacobian", no_jacobian, "Score transformed forests on the working scale");

  std::string glm_data;
  std::string glm_outcome = "y";
  std::string design_arg;
  std::string glm_out;
  std::vector<std::string> glm_kinds;
  GlmOptions glm_options;
  auto* glm_cmd = app.add_subcommand("glm-fit", "Fit a beta regression by maximum likelihood");
  glm_cmd->add_option("--data", glm_data, "Training CSV")->required();
  glm_cmd->add_option("--outcome", glm_outcome, "Outcome column")->capture_default_str();
  glm_cmd->add_option("--design", design_arg, "linear, intercept, or a JSON design file")->required();
  glm_cmd->add_option("--out", glm_out, "Model file to write")->required();
  glm_cmd->add_option("--max-iterations", glm_options.max_iterations, "Optimizer iteration limit")
      ->capture_default_str();
  glm_cmd->add_option("--column-kind", glm_kinds, "NAME=numeric|ordinal|categorical (repeatable)");

  std::vector<std::string> argv_storage{"betaforest"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) {
    argv.push_back(s.data());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) {
      return do_train(train, out);
    }
    if (predict_cmd->parsed()) {
      const Model model = load_model(model_path);
      const Dataset data = load_for_model(model, data_path, false);
      const Predictions p = model_predictions(model, data, threads);
      OutputTarget target(out_path, out);
      target.get() << "row,mean,working\n";
      for (std::size_t i = 0; i < data.num_rows(); ++i) {
        target.get() << i + 1 << ',' << format_double(p.mean[i]) << ',' << format_double(p.working[i]) << '\n';
      }
      target.finish(out_path);
      return 0;
    }
    if (eval_cmd->parsed()) {
      const Model model = load_model(model_path);
      const Dataset data = load_for_model(model, data_path, true);
      const Predictions p = model_predictions(model, data, threads);
      ScoringOptions scoring;
      scoring.include_jacobian = !no_jacobian;
      const double ll = predictive_loglik(data.outcome(), p.working, p.scale, p.family, scoring);
      out << "loglik=" << format_double(ll) << " family=" << to_string(p.family) << " rows=" << data.num_rows()
          << "\n";
      return 0;
    }
    if (imp_cmd->parsed()) {
      const Model model = load_model(model_path);
      const auto* forest = std::get_if<ForestModel>(&model);
      if (!forest) {
        throw std::invalid_argument("importance needs a forest model");
      }
      const Dataset data = load_for_model(model, data_path, true);
      const std::vector<double> imp = variable_importance(*forest, data, seed, threads);
      OutputTarget target(out_path, out);
      target.get() << "feature,importance\n";
      for (std::size_t j = 0; j < imp.size(); ++j) {
        target.get() << data.column_schema(j).name << ',' << format_double(imp[j]) << '\n';
      }
      target.finish(out_path);
      return 0;
    }
    if (sim_cmd->parsed()) {
      std::vector<ScenarioSpec> specs;
      if (full_grid) {
        specs = full_scenario_grid(reps, seed);
        for (auto& s : specs) {
          s.n_train = base.n_train;
          s.n_test = base.n_test;
        }
      } else {
        for (const auto& shape : shapes) {
          for (double phi : phis) {
            for (std::size_t p : ps) {
              ScenarioSpec s = base;
              s.shape = parse_shape(shape);
              s.phi = phi;
              s.p = p;
              s.n_reps = reps;
              s.seed = seed;
              specs.push_back(s);
            }
          }
        }
      }
      harness.record_timing = timing;
      harness.scoring.include_jacobian = !no_jacobian;
      const std::vector<Method> method_list = parse_method_list(methods);
      const StudyResult study = run_study(specs, method_list, harness, threads);
      OutputTarget target(out_path, out);
      write_results_csv(target.get(), study.records);
      target.finish(out_path);
      if (!summary_path.empty()) {
        OutputTarget summary(summary_path, out);
        write_summary_csv(summary.get(), study.summaries);
        summary.finish(summary_path);
      }
      std::size_t failed = 0;
      for (const auto& rec : study.records) {
        failed += rec.ok ? 0 : 1;
      }
      if (failed > 0) {
        err << "betaforest: warning: " << failed << " method fit(s) failed; see the status column\n";
      }
      return 0;
    }
    if (glm_cmd->parsed()) {
      CsvOptions opts;
      opts.outcome = glm_outcome;
      opts.kinds = parse_kind_hints(glm_kinds);
      const Dataset data = load_csv(glm_data, opts);
      const DesignSpec design = parse_design(design_arg, data);
      GlmModel model{fit_beta_glm(data, design, glm_options), data.schema(), data.outcome_name()};
      save_model(glm_out, model);
      const BetaGlmFit& fit = model.fit;
      out << (fit.converged ? "converged" : "NOT converged") << " after " << fit.iterations
          << " iterations; loglik = " << format_double(fit.loglik) << ", phi = " << format_double(fit.phi) << "\n";
      std::size_t c = 0;
      if (design.intercept) {
        out << "  (intercept) " << format_double(fit.beta[static_cast<Eigen::Index>(c++)]) << "\n";
      }
      for (const auto& name : design.main_effects) {
        out << "  " << name << " " << format_double(fit.beta[static_cast<Eigen::Index>(c++)]) << "\n";
      }
      for (const auto& [a, b] : design.interactions) {
        out << "  " << a << ":" << b << " " << format_double(fit.beta[static_cast<Eigen::Index>(c++)]) << "\n";
      }
      if (!fit.converged) {
        err << "betaforest: warning: optimizer stopped before the gradient tolerance was met\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "betaforest: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace betaforest
