#ifndef BETAFOREST_FOREST_HPP
#define BETAFOREST_FOREST_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "betaforest/dataset.hpp"
#include "betaforest/scoring.hpp"
#include "betaforest/special_functions.hpp"
#include "betaforest/tree.hpp"

namespace betaforest {

struct ForestConfig {
  GrowthConfig growth;
  std::size_t ntree = 500;
  /// Working scale. Non-identity transforms require the mse criterion.
  TransformKind transform = TransformKind::identity;
  /// When false every tree is grown on all rows exactly once (no
  /// out-of-bag rows); meant for tests.
  bool bootstrap = true;

  void validate(std::size_t num_features) const;
};

/// ceil(sqrt(p)).
std::size_t default_mtry(std::size_t num_features);

/// ntree = 500, mtry = ceil(sqrt(p)), min_node_size = 5.
ForestConfig default_forest_config(std::size_t num_features, SplitCriterion criterion,
                                   TransformKind transform = TransformKind::identity);

/// Trained ensemble. `inbag_counts[t][i]` is how often training row i was
/// drawn into tree t's bootstrap sample. `scale` is phi for the beta
/// criterion and sigma^2 (working scale) for the mse criterion.
class ForestModel {
 public:
  ForestModel(ForestConfig config, std::vector<Tree> trees, std::vector<std::vector<std::uint32_t>> inbag_counts,
              double scale, std::vector<ColumnSchema> schema, std::string outcome_name, std::uint64_t seed);

  const ForestConfig& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::vector<std::uint32_t>>& inbag_counts() const { return inbag_counts_; }
  double scale() const { return scale_; }
  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const std::string& outcome_name() const { return outcome_name_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_training_rows() const { return inbag_counts_.empty() ? 0 : inbag_counts_.front().size(); }
  ScoreFamily family() const;

 private:
  ForestConfig config_;
  std::vector<Tree> trees_;
  std::vector<std::vector<std::uint32_t>> inbag_counts_;
  double scale_;
  std::vector<ColumnSchema> schema_;
  std::string outcome_name_;
  std::uint64_t seed_;
};

/// Per-row ensemble output: the average tree estimate on the working scale
/// and its back-transform to (0,1). For out-of-bag predictions, rows no
/// tree left out have `tree_count == 0` and NaN estimates.
struct ForestPrediction {
  std::vector<double> working;
  std::vector<double> mean;
  std::vector<std::size_t> tree_count;

  bool available(std::size_t row) const { return tree_count[row] > 0; }
};

/// Grows ntree trees on bootstrap samples. Tree t draws its sample and its
/// candidate features from a stream seeded by (master_seed, t), so the
/// model does not depend on `threads` (0 = all cores).
ForestModel train_forest(const Dataset& data, const ForestConfig& config, std::uint64_t master_seed,
                         std::size_t threads = 0);

ForestPrediction predict(const ForestModel& model, const Dataset& data, std::size_t threads = 0);

/// Averages, for each training row, only the trees whose bootstrap sample
/// left the row out.
ForestPrediction predict_oob(const ForestModel& model, const Dataset& data, std::size_t threads = 0);

/// Scale refit from out-of-bag means: phi by maximizing the plugged-in beta
/// log-likelihood, sigma^2 as the mean squared working-scale residual.
/// Falls back to all-tree predictions when fewer than two rows are ever
/// out of bag.
double estimate_scale(const ForestModel& model, const Dataset& data, std::size_t threads = 0);

/// Permutation importance: for each tree, the out-of-bag predictive
/// log-likelihood minus its value after permuting one feature among the
/// tree's out-of-bag rows, averaged over trees with out-of-bag rows.
std::vector<double> variable_importance(const ForestModel& model, const Dataset& data, std::uint64_t seed,
                                        std::size_t threads = 0);

}  // namespace betaforest

#endif  // BETAFOREST_FOREST_HPP
