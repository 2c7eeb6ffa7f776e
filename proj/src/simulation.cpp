#include "betaforest/simulation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "betaforest/beta_distribution.hpp"
#include "betaforest/forest.hpp"
#include "betaforest/parallel.hpp"
#include "betaforest/random.hpp"

namespace betaforest {

namespace {

constexpr std::array<double, 9> kSymmetric = {0.2, 0.3, 0.4, -0.1, -0.3, -0.3, -0.4, 0.1, 0.3};
constexpr std::array<double, 9> kLeftSkewed = {-0.2, -0.3, -0.4, 0.1, 0.3, 0.3, 0.4, 0.1, 0.3};

constexpr std::uint64_t kMethodStreamTag = 1000;

std::string feature_name(std::size_t j) {
  return "x" + std::to_string(j + 1);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Quantile with linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct MethodFit {
  double loglik;
  double scale;
};

MethodFit fit_forest_method(const Dataset& train, const Dataset& test, SplitCriterion criterion,
                            TransformKind transform, std::uint64_t seed, const HarnessOptions& options) {
  ForestConfig config = default_forest_config(train.num_features(), criterion, transform);
  config.ntree = options.ntree;
  config.growth.min_node_size = options.min_node_size;
  const ForestModel model = train_forest(train, config, seed, 1);
  const ForestPrediction pred = predict(model, test, 1);
  return {predictive_loglik(test.outcome(), pred.working, model.scale(), model.family(), options.scoring),
          model.scale()};
}

MethodFit fit_glm_method(const Dataset& train, const Dataset& test, const DesignSpec& design,
                         const HarnessOptions& options) {
  const BetaGlmFit fit = fit_beta_glm(train, design);
  const std::vector<double> means = predict_mean_glm(fit, test);
  return {predictive_loglik(test.outcome(), means, fit.phi, ScoreFamily::beta, options.scoring), fit.phi};
}

}  // namespace

std::string_view to_string(Shape shape) {
  return shape == Shape::symmetric ? "symmetric" : "skewed";
}

Shape parse_shape(std::string_view name) {
  if (name == "symmetric") return Shape::symmetric;
  if (name == "skewed" || name == "left_skewed" || name == "left-skewed") return Shape::left_skewed;
  throw std::invalid_argument("unknown shape '" + std::string(name) + "' (expected symmetric or skewed)");
}

const std::array<double, 9>& generating_coefficients(Shape shape) {
  return shape == Shape::symmetric ? kSymmetric : kLeftSkewed;
}

double generating_eta(Shape shape, std::span<const double> x) {
  if (x.size() < 4) {
    throw std::invalid_argument("generating_eta: need at least 4 features");
  }
  const auto& b = generating_coefficients(shape);
  return b[0] + b[1] * x[0] + b[2] * x[1] + b[3] * x[2] + b[4] * x[3] + b[5] * x[0] * x[1] + b[6] * x[1] * x[2] +
         b[7] * x[2] * x[3] + b[8] * x[0] * x[3];
}

DesignSpec generating_design() {
  DesignSpec spec;
  spec.intercept = true;
  spec.main_effects = {"x1", "x2", "x3", "x4"};
  spec.interactions = {{"x1", "x2"}, {"x2", "x3"}, {"x3", "x4"}, {"x1", "x4"}};
  return spec;
}

std::string ScenarioSpec::id() const {
  return std::string(to_string(shape)) + "_phi" + format_number(phi) + "_p" + std::to_string(p);
}

void ScenarioSpec::validate() const {
  if (p < 4) {
    throw std::invalid_argument("ScenarioSpec: p must be at least 4");
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw std::invalid_argument("ScenarioSpec: phi must be positive");
  }
  if (n_train < 2 || n_test < 1 || n_reps < 1) {
    throw std::invalid_argument("ScenarioSpec: need n_train >= 2, n_test >= 1 and n_reps >= 1");
  }
}

std::vector<ScenarioSpec> full_scenario_grid(std::size_t n_reps, std::uint64_t seed) {
  std::vector<ScenarioSpec> grid;
  for (Shape shape : {Shape::symmetric, Shape::left_skewed}) {
    for (double phi : {2.0, 4.0, 8.0}) {
      for (std::size_t p : {4, 10, 100, 200}) {
        ScenarioSpec spec;
        spec.shape = shape;
        spec.phi = phi;
        spec.p = p;
        spec.n_reps = n_reps;
        spec.seed = seed;
        grid.push_back(spec);
      }
    }
  }
  return grid;
}

std::uint64_t data_stream_seed(const ScenarioSpec& spec, std::size_t replication, DataRole role) {
  return derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.shape), std::bit_cast<std::uint64_t>(spec.phi),
                                 spec.p, replication, static_cast<std::uint64_t>(role)});
}

SimulatedData generate_dataset(const ScenarioSpec& spec, std::size_t replication, DataRole role) {
  spec.validate();
  const std::size_t n = role == DataRole::train ? spec.n_train : spec.n_test;
  Rng rng(data_stream_seed(spec, replication, role));

  std::vector<std::vector<double>> columns(spec.p, std::vector<double>(n));
  std::vector<double> y(n);
  std::vector<double> mu(n);
  std::vector<double> x(spec.p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.p; ++j) {
      x[j] = static_cast<double>(rng.uniform_index(2) + 1);
      columns[j][i] = x[j];
    }
    mu[i] = inverse_logit(generating_eta(spec.shape, x));
    y[i] = sample(BetaParams(mu[i], spec.phi), 1, rng).front();
  }

  std::vector<ColumnSchema> schema;
  for (std::size_t j = 0; j < spec.p; ++j) {
    schema.push_back({feature_name(j), ColumnKind::numeric, {}});
  }
  return {Dataset(std::move(schema), std::move(columns), std::move(y), "y"), std::move(mu)};
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::beta_rf:
      return "beta-rF";
    case Method::rf:
      return "rF";
    case Method::asin_rf:
      return "asin-rF";
    case Method::logit_rf:
      return "logit-rF";
    case Method::linear_br:
      return "linear-bR";
    case Method::int_br:
      return "int-bR";
    case Method::true_br:
      return "true-bR";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (name == to_string(m)) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected beta-rF, rF, asin-rF, logit-rF, linear-bR, int-bR or true-bR)");
}

std::vector<Method> parse_method_list(std::string_view list) {
  if (list == "all") {
    return {kAllMethods.begin(), kAllMethods.end()};
  }
  std::vector<Method> methods;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string_view item = list.substr(start, comma == std::string_view::npos ? list.size() - start : comma - start);
    if (!item.empty()) {
      const Method m = parse_method(item);
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
        methods.push_back(m);
      }
    }
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  if (methods.empty()) {
    throw std::invalid_argument("empty method list");
  }
  return methods;
}

ScoreFamily method_family(Method method) {
  switch (method) {
    case Method::rf:
      return ScoreFamily::gaussian_identity;
    case Method::asin_rf:
      return ScoreFamily::arcsine_normal;
    case Method::logit_rf:
      return ScoreFamily::logit_normal;
    default:
      return ScoreFamily::beta;
  }
}

std::vector<EvalRecord> run_replication(const ScenarioSpec& spec, std::size_t replication,
                                        std::span<const Method> methods, const HarnessOptions& options) {
  spec.validate();
  const SimulatedData train = generate_dataset(spec, replication, DataRole::train);
  const SimulatedData test = generate_dataset(spec, replication, DataRole::test);

  std::vector<EvalRecord> records;
  for (Method method : methods) {
    EvalRecord rec;
    rec.scenario = spec.id();
    rec.replication = replication;
    rec.method = method;
    const std::uint64_t seed =
        derive_seed(data_stream_seed(spec, replication, DataRole::train), {kMethodStreamTag + static_cast<std::uint64_t>(method)});
    const auto start = std::chrono::steady_clock::now();
    try {
      MethodFit result{};
      switch (method) {
        case Method::beta_rf:
          result = fit_forest_method(train.data, test.data, SplitCriterion::beta_loglik, TransformKind::identity, seed,
                                     options);
          break;
        case Method::rf:
          result = fit_forest_method(train.data, test.data, SplitCriterion::mse, TransformKind::identity, seed, options);
          break;
        case Method::asin_rf:
          result =
              fit_forest_method(train.data, test.data, SplitCriterion::mse, TransformKind::arcsine_sqrt, seed, options);
          break;
        case Method::logit_rf:
          result = fit_forest_method(train.data, test.data, SplitCriterion::mse, TransformKind::logit, seed, options);
          break;
        case Method::linear_br:
          result = fit_glm_method(train.data, test.data, DesignSpec::linear(train.data), options);
          break;
        case Method::int_br:
          result = fit_glm_method(train.data, test.data, DesignSpec::intercept_only(), options);
          break;
        case Method::true_br:
          result = fit_glm_method(train.data, test.data, generating_design(), options);
          break;
      }
      if (!std::isfinite(result.loglik)) {
        throw std::runtime_error("non-finite predictive log-likelihood");
      }
      rec.loglik = result.loglik;
      rec.scale = result.scale;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.loglik = std::numeric_limits<double>::quiet_NaN();
      rec.scale = std::numeric_limits<double>::quiet_NaN();
      rec.error = e.what();
    }
    if (options.record_timing) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<MethodSummary> summarize(std::span<const EvalRecord> records) {
  std::vector<MethodSummary> summaries;
  std::vector<std::vector<double>> values;
  std::map<std::pair<std::string, Method>, std::size_t> index;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.scenario, rec.method);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, summaries.size()).first;
      summaries.push_back(MethodSummary{rec.scenario, rec.method, 0, 0, 0.0, 0.0, 0.0, 0.0});
      values.emplace_back();
    }
    MethodSummary& s = summaries[it->second];
    if (rec.ok) {
      ++s.n_ok;
      values[it->second].push_back(rec.loglik);
    } else {
      ++s.n_failed;
    }
  }
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    auto& v = values[k];
    std::sort(v.begin(), v.end());
    MethodSummary& s = summaries[k];
    if (v.empty()) {
      s.mean = s.median = s.q1 = s.q3 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double x : v) {
      sum += x;
    }
    s.mean = sum / static_cast<double>(v.size());
    s.median = quantile(v, 0.5);
    s.q1 = quantile(v, 0.25);
    s.q3 = quantile(v, 0.75);
  }
  return summaries;
}

StudyResult run_study(std::span<const ScenarioSpec> specs, std::span<const Method> methods,
                      const HarnessOptions& options, std::size_t threads) {
  struct Unit {
    std::size_t spec;
    std::size_t rep;
  };
  std::vector<Unit> units;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    specs[s].validate();
    for (std::size_t r = 0; r < specs[s].n_reps; ++r) {
      units.push_back({s, r});
    }
  }
  std::vector<std::vector<EvalRecord>> results(units.size());
  parallel_for(units.size(), threads, [&](std::size_t u) {
    results[u] = run_replication(specs[units[u].spec], units[u].rep, methods, options);
  });

  StudyResult study;
  for (auto& chunk : results) {
    for (auto& rec : chunk) {
      study.records.push_back(std::move(rec));
    }
  }
  study.summaries = summarize(study.records);
  return study;
}

}  // namespace betaforest
