#ifndef BETAFOREST_SIMULATION_HPP
#define BETAFOREST_SIMULATION_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "betaforest/beta_glm.hpp"
#include "betaforest/dataset.hpp"
#include "betaforest/scoring.hpp"

namespace betaforest {

enum class Shape { symmetric, left_skewed };

std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);

/// Coefficients of the data-generating predictor
/// eta = b0 + b1 x1 + b2 x2 + b3 x3 + b4 x4 + b5 x1x2 + b6 x2x3 + b7 x3x4 + b8 x1x4.
const std::array<double, 9>& generating_coefficients(Shape shape);

/// Generating predictor for the first four features of `x` (coded 1/2).
double generating_eta(Shape shape, std::span<const double> x);

/// Design reproducing the generating predictor term for term.
DesignSpec generating_design();

struct ScenarioSpec {
  Shape shape = Shape::symmetric;
  double phi = 2.0;
  std::size_t p = 4;
  std::size_t n_train = 500;
  std::size_t n_test = 500;
  std::size_t n_reps = 20;
  std::uint64_t seed = 1;

  /// e.g. "symmetric_phi2_p100".
  std::string id() const;
  void validate() const;
};

/// The 2 x 3 x 4 grid: both shapes, phi in {2,4,8}, p in {4,10,100,200}.
std::vector<ScenarioSpec> full_scenario_grid(std::size_t n_reps, std::uint64_t seed);

enum class DataRole : std::uint64_t { train = 0, test = 1 };

/// Seed of the stream that generates (scenario, replication, role).
std::uint64_t data_stream_seed(const ScenarioSpec& spec, std::size_t replication, DataRole role);

struct SimulatedData {
  Dataset data;
  std::vector<double> true_mean;
};

/// Features x1..xp uniform on {1,2}; y ~ Beta(mu = inverse-logit(eta), phi).
SimulatedData generate_dataset(const ScenarioSpec& spec, std::size_t replication, DataRole role);

enum class Method { beta_rf, rf, asin_rf, logit_rf, linear_br, int_br, true_br };

inline constexpr std::array<Method, 7> kAllMethods = {Method::beta_rf,   Method::rf,     Method::asin_rf,
                                                      Method::logit_rf,  Method::linear_br, Method::int_br,
                                                      Method::true_br};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
/// Comma-separated method ids, or "all".
std::vector<Method> parse_method_list(std::string_view list);

/// Family used to score a method's test predictions.
ScoreFamily method_family(Method method);

struct HarnessOptions {
  std::size_t ntree = 500;
  std::size_t min_node_size = 10;
  ScoringOptions scoring;
  /// Record wall-clock seconds per fit. Off by default so result tables are
  /// reproducible bit for bit.
  bool record_timing = false;
};

struct EvalRecord {
  std::string scenario;
  std::size_t replication = 0;
  Method method = Method::beta_rf;
  bool ok = true;
  double loglik = 0.0;
  double scale = 0.0;
  double seconds = 0.0;
  std::string error;
};

/// Fits every requested method on the replication's training data and
/// scores the predictive log-likelihood of its test data. A failing method
/// yields a record with ok == false instead of an exception.
std::vector<EvalRecord> run_replication(const ScenarioSpec& spec, std::size_t replication,
                                        std::span<const Method> methods, const HarnessOptions& options = {});

struct MethodSummary {
  std::string scenario;
  Method method = Method::beta_rf;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Per (scenario, method) statistics of the successful records, in order
/// of first appearance. Quartiles interpolate linearly between order
/// statistics.
std::vector<MethodSummary> summarize(std::span<const EvalRecord> records);

struct StudyResult {
  std::vector<EvalRecord> records;
  std::vector<MethodSummary> summaries;
};

/// Runs every replication of every scenario (in parallel over
/// replications). Records are ordered by scenario, replication and method
/// regardless of the thread count.
StudyResult run_study(std::span<const ScenarioSpec> specs, std::span<const Method> methods,
                      const HarnessOptions& options = {}, std::size_t threads = 0);

}  // namespace betaforest

#endif  // BETAFOREST_SIMULATION_HPP
