#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"

#include "betaforest/beta_distribution.hpp"
#include "betaforest/forest.hpp"
#include "betaforest/scoring.hpp"
#include "betaforest/simulation.hpp"

using namespace betaforest;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Type-7 sample quantile.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ScenarioSpec small_spec(Shape shape, double phi, std::size_t p) {
  ScenarioSpec s;
  s.shape = shape;
  s.phi = phi;
  s.p = p;
  s.n_train = 120;
  s.n_test = 80;
  s.n_reps = 2;
  s.seed = 99;
  return s;
}

HarnessOptions quick() {
  HarnessOptions o;
  o.ntree = 25;
  return o;
}

}  // namespace

TEST_CASE("scoring examples") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::vector<double> ys(9);
  for (auto& y : ys) y = u(gen);
  const std::vector<double> half(ys.size(), 0.5);
  CHECK(std::abs(predictive_loglik(ys, half, 2.0, ScoreFamily::beta)) < 1e-13);

  CHECK(observation_log_likelihood(0.5, 0.0, 1.0, ScoreFamily::logit_normal) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) + std::log(4.0)).epsilon(1e-15));
  CHECK(observation_log_likelihood(0.5, 0.0, 1.0, ScoreFamily::logit_normal) ==
        doctest::Approx(0.4673558279152179).epsilon(1e-14));
  CHECK(observation_log_likelihood(0.5, 0.0, 1.0, ScoreFamily::logit_normal, ScoringOptions{false}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));

  for (double s : {0.01, 0.3, 2.0}) {
    CHECK(predictive_loglik(ys, ys, s, ScoreFamily::gaussian_identity) ==
          doctest::Approx(static_cast<double>(ys.size()) * -0.5 * std::log(2.0 * std::numbers::pi * s)).epsilon(1e-14));
  }

  // Arcsine family: working mean asin(sqrt(y)), Jacobian 1/(2 sqrt(y(1-y))).
  const double y = 0.3;
  const double t = std::asin(std::sqrt(y));
  CHECK(observation_log_likelihood(y, t, 0.5, ScoreFamily::arcsine_normal) ==
        doctest::Approx(-0.5 * std::log(std::numbers::pi) - std::log(2.0 * std::sqrt(y * (1.0 - y)))).epsilon(1e-14));

  CHECK_THROWS_AS(observation_log_likelihood(1.0, 0.0, 1.0, ScoreFamily::logit_normal), std::domain_error);
  CHECK_THROWS(predictive_loglik(ys, std::vector<double>{0.5}, 2.0, ScoreFamily::beta));
  CHECK(family_transform(ScoreFamily::arcsine_normal) == TransformKind::arcsine_sqrt);
  CHECK(family_for(true, TransformKind::identity) == ScoreFamily::beta);
  CHECK(family_for(false, TransformKind::logit) == ScoreFamily::logit_normal);
}

TEST_CASE("normal families are densities of their transformed outcome") {
  // exp(log-density) over (0,1) is the normal probability of the image of
  // (0,1) under the transform: the whole line for logit, (0,1) for the
  // identity and (0, pi/2) for the arcsine square root.
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const double s2 = 0.25 + 3.75 * u(gen);
    const double sd = std::sqrt(s2);
    for (ScoreFamily family : {ScoreFamily::gaussian_identity, ScoreFamily::logit_normal, ScoreFamily::arcsine_normal}) {
      double m = 0.0;
      double expected = 1.0;
      if (family == ScoreFamily::logit_normal) {
        m = 6.0 * (u(gen) - 0.5);
      } else {
        const double hi = family == ScoreFamily::gaussian_identity ? 1.0 : std::numbers::pi / 2.0;
        m = hi * u(gen);
        expected = oracle::normal_cdf((hi - m) / sd) - oracle::normal_cdf((0.0 - m) / sd);
      }
      const auto log_f = [&](double y) { return observation_log_likelihood(y, m, s2, family); };
      const auto log_f_reflected = [&](double v) {
        // 1 - v rounds to 1 for v below 1e-16; no mass is lost there.
        return 1.0 - v < 1.0 ? observation_log_likelihood(1.0 - v, m, s2, family)
                             : -std::numeric_limits<double>::infinity();
      };
      const double integral = oracle::integrate_unit_interval(log_f, log_f_reflected);
      CAPTURE(to_string(family));
      CAPTURE(m);
      CAPTURE(s2);
      CHECK(std::abs(integral - expected) < 1e-4);
    }
  }
}

TEST_CASE("generating predictor and data") {
  const std::vector<double> ones{1.0, 1.0, 1.0, 1.0};
  CHECK(generating_eta(Shape::symmetric, ones) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(logistic(generating_eta(Shape::symmetric, ones)) == doctest::Approx(0.549834).epsilon(1e-6));
  CHECK(generating_coefficients(Shape::left_skewed)[0] == -0.2);
  CHECK(generating_design().num_columns() == 9);

  const ScenarioSpec spec = small_spec(Shape::left_skewed, 4.0, 6);
  const SimulatedData a = generate_dataset(spec, 1, DataRole::train);
  const SimulatedData b = generate_dataset(spec, 1, DataRole::train);
  const SimulatedData test = generate_dataset(spec, 1, DataRole::test);
  CHECK(a.data.num_rows() == 120);
  CHECK(a.data.num_features() == 6);
  CHECK(test.data.num_rows() == 80);
  CHECK(a.data.schema()[5].name == "x6");
  CHECK(std::vector<double>(a.data.outcome().begin(), a.data.outcome().end()) ==
        std::vector<double>(b.data.outcome().begin(), b.data.outcome().end()));
  for (std::size_t i = 0; i < a.data.num_rows(); ++i) {
    const auto row = a.data.row(i);
    for (double x : row) CHECK((x == 1.0 || x == 2.0));
    CHECK(a.true_mean[i] == doctest::Approx(logistic(generating_eta(Shape::left_skewed, row))).epsilon(1e-15));
    CHECK(a.data.outcome()[i] > 0.0);
    CHECK(a.data.outcome()[i] < 1.0);
  }

  // Streams differ by role, replication and every scenario field.
  const auto s0 = data_stream_seed(spec, 1, DataRole::train);
  CHECK(s0 != data_stream_seed(spec, 1, DataRole::test));
  CHECK(s0 != data_stream_seed(spec, 2, DataRole::train));
  ScenarioSpec other = spec;
  other.phi = 8.0;
  CHECK(s0 != data_stream_seed(other, 1, DataRole::train));
  other = spec;
  other.shape = Shape::symmetric;
  CHECK(s0 != data_stream_seed(other, 1, DataRole::train));
  CHECK(std::vector<double>(a.data.outcome().begin(), a.data.outcome().begin() + 80) !=
        std::vector<double>(test.data.outcome().begin(), test.data.outcome().end()));
}

TEST_CASE("scenario validation and naming") {
  ScenarioSpec s;
  s.p = 100;
  CHECK(s.id() == "symmetric_phi2_p100");
  s.shape = Shape::left_skewed;
  s.phi = 8.0;
  CHECK(s.id() == "skewed_phi8_p100");
  s.p = 3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.p = 4;
  s.phi = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  const auto grid = full_scenario_grid(20, 1);
  CHECK(grid.size() == 24);
  CHECK(parse_shape("skewed") == Shape::left_skewed);
  CHECK(parse_method("logit-rF") == Method::logit_rf);
  CHECK(parse_method_list("all").size() == 7);
  CHECK(parse_method_list("beta-rF,true-bR") == std::vector<Method>{Method::beta_rf, Method::true_br});
  CHECK_THROWS_AS(parse_method("gbm"), std::invalid_argument);
  CHECK(method_family(Method::rf) == ScoreFamily::gaussian_identity);
  CHECK(method_family(Method::asin_rf) == ScoreFamily::arcsine_normal);
  CHECK(method_family(Method::int_br) == ScoreFamily::beta);
}

TEST_CASE("one scenario, one replication, one method gives one record") {
  ScenarioSpec s = small_spec(Shape::symmetric, 2.0, 4);
  s.n_reps = 1;
  const std::vector<Method> methods{Method::beta_rf};
  const StudyResult r = run_study(std::span(&s, 1), methods, quick(), 1);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].ok);
  CHECK(std::isfinite(r.records[0].loglik));
  CHECK(r.records[0].scenario == s.id());
  REQUIRE(r.summaries.size() == 1);
  CHECK(r.summaries[0].mean == r.records[0].loglik);
}

TEST_CASE("int-bR record matches an independent fit") {
  const ScenarioSpec s = small_spec(Shape::symmetric, 4.0, 4);
  const std::vector<Method> methods{Method::int_br};
  const auto records = run_replication(s, 0, methods);
  REQUIRE(records.size() == 1);
  REQUIRE(records[0].ok);
  const SimulatedData train = generate_dataset(s, 0, DataRole::train);
  const SimulatedData test = generate_dataset(s, 0, DataRole::test);
  const BetaGlmFit fit = fit_beta_glm(train.data, DesignSpec::intercept_only());
  const auto y = train.data.outcome();
  const double grand = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  CHECK(std::abs(logistic(fit.beta[0]) - grand) < 0.01);
  const auto means = predict_mean_glm(fit, test.data);
  CHECK(records[0].loglik == predictive_loglik(test.data.outcome(), means, fit.phi, ScoreFamily::beta));
  CHECK(records[0].scale == fit.phi);
}

TEST_CASE("study tables are reproducible and summaries match the records") {
  const std::vector<ScenarioSpec> specs{small_spec(Shape::symmetric, 2.0, 4), small_spec(Shape::left_skewed, 8.0, 10)};
  const StudyResult a = run_study(specs, kAllMethods, quick(), 1);
  const StudyResult b = run_study(specs, kAllMethods, quick(), 3);
  REQUIRE(a.records.size() == 2 * 2 * 7);
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].scenario == b.records[i].scenario);
    CHECK(a.records[i].replication == b.records[i].replication);
    CHECK(a.records[i].method == b.records[i].method);
    CHECK(a.records[i].ok == b.records[i].ok);
    CHECK(a.records[i].loglik == b.records[i].loglik);
    CHECK(a.records[i].scale == b.records[i].scale);
    CHECK(a.records[i].seconds == 0.0);
  }
  // Ordered by scenario, replication, then method.
  CHECK(a.records[0].scenario == specs[0].id());
  CHECK(a.records[7].replication == 1);
  CHECK(a.records[14].scenario == specs[1].id());

  std::map<std::pair<std::string, Method>, std::vector<double>> groups;
  for (const auto& r : a.records) {
    if (r.ok) groups[{r.scenario, r.method}].push_back(r.loglik);
  }
  REQUIRE(a.summaries.size() == groups.size());
  for (const auto& s : a.summaries) {
    const auto& v = groups.at({s.scenario, s.method});
    CHECK(s.n_ok == v.size());
    CHECK(s.mean == doctest::Approx(std::accumulate(v.begin(), v.end(), 0.0) / v.size()).epsilon(1e-14));
    CHECK(s.median == doctest::Approx(quantile(v, 0.5)).epsilon(1e-14));
    CHECK(s.q1 == doctest::Approx(quantile(v, 0.25)).epsilon(1e-14));
    CHECK(s.q3 == doctest::Approx(quantile(v, 0.75)).epsilon(1e-14));
  }
}

TEST_CASE("summaries count failures and use type-7 quartiles") {
  std::vector<EvalRecord> records;
  for (double v : {4.0, 1.0, 3.0, 2.0, 10.0}) {
    EvalRecord r;
    r.scenario = "s";
    r.loglik = v;
    records.push_back(r);
  }
  EvalRecord failed;
  failed.scenario = "s";
  failed.ok = false;
  failed.loglik = std::nan("");
  records.push_back(failed);
  const auto s = summarize(records);
  REQUIRE(s.size() == 1);
  CHECK(s[0].n_ok == 5);
  CHECK(s[0].n_failed == 1);
  CHECK(s[0].mean == 4.0);
  CHECK(s[0].median == 3.0);
  CHECK(s[0].q1 == 2.0);
  CHECK(s[0].q3 == 4.0);
}

TEST_CASE("failed fits become failed records") {
  // 40 training rows cannot support 200 main effects.
  ScenarioSpec s = small_spec(Shape::symmetric, 2.0, 200);
  s.n_train = 40;
  const std::vector<Method> methods{Method::linear_br, Method::int_br};
  const auto records = run_replication(s, 0, methods, quick());
  REQUIRE(records.size() == 2);
  CHECK_FALSE(records[0].ok);
  CHECK_FALSE(records[0].error.empty());
  CHECK(records[1].ok);
}

TEST_CASE("fitted scales maximize the training objective") {
  const ScenarioSpec s = small_spec(Shape::symmetric, 4.0, 4);
  const SimulatedData train = generate_dataset(s, 0, DataRole::train);
  const auto y = train.data.outcome();

  for (TransformKind kind : {TransformKind::identity, TransformKind::logit, TransformKind::arcsine_sqrt}) {
    for (bool beta : {true, false}) {
      if (beta && kind != TransformKind::identity) continue;
      ForestConfig c = default_forest_config(4, beta ? SplitCriterion::beta_loglik : SplitCriterion::mse, kind);
      c.ntree = 50;
      c.growth.min_node_size = 10;
      const ForestModel m = train_forest(train.data, c, 3);
      const auto oob = predict_oob(m, train.data);
      std::vector<double> ys;
      std::vector<double> means;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (!oob.available(i)) continue;
        ys.push_back(y[i]);
        means.push_back(oob.working[i]);
      }
      const ScoreFamily family = m.family();
      const double at_fit = predictive_loglik(ys, means, m.scale(), family);
      CAPTURE(to_string(family));
      CHECK(at_fit >= predictive_loglik(ys, means, 0.5 * m.scale(), family));
      CHECK(at_fit >= predictive_loglik(ys, means, 1.5 * m.scale(), family));
    }
  }

  const BetaGlmFit fit = fit_beta_glm(train.data, DesignSpec::linear(train.data));
  const auto means = predict_mean_glm(fit, train.data);
  const double at_fit = predictive_loglik(y, means, fit.phi, ScoreFamily::beta);
  CHECK(at_fit >= predictive_loglik(y, means, 0.5 * fit.phi, ScoreFamily::beta));
  CHECK(at_fit >= predictive_loglik(y, means, 1.5 * fit.phi, ScoreFamily::beta));
}
