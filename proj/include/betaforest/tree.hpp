#ifndef BETAFOREST_TREE_HPP
#define BETAFOREST_TREE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "betaforest/beta_distribution.hpp"
#include "betaforest/dataset.hpp"
#include "betaforest/random.hpp"

namespace betaforest {

enum class SplitCriterion { beta_loglik, mse };

std::string_view to_string(SplitCriterion criterion);
SplitCriterion parse_criterion(std::string_view name);

enum class SplitKind { threshold, subset };

/// Binary split of one feature. Threshold rules send `value <= threshold`
/// left; subset rules send values whose code is in `left_categories` left and
/// everything else (including codes never seen in training) right.
struct SplitRule {
  std::size_t feature = 0;
  SplitKind kind = SplitKind::threshold;
  double threshold = 0.0;
  std::vector<int> left_categories;  // sorted ascending

  bool goes_left(double value) const;
  bool operator==(const SplitRule&) const = default;
};

struct GrowthConfig {
  SplitCriterion criterion = SplitCriterion::beta_loglik;
  std::size_t mtry = 1;
  std::size_t min_node_size = 5;
  std::size_t min_child_size = 2;
  std::size_t max_categories_exhaustive = 12;
  PhiBounds phi_bounds;

  /// Throws std::invalid_argument when the configuration cannot be used on
  /// data with `num_features` features.
  void validate(std::size_t num_features) const;
};

/// Node of a flattened tree. Internal nodes carry a split and two child
/// indices; leaves carry the node estimate on the working scale (`value`,
/// which is the leaf mu under the beta criterion) and, for the beta
/// criterion, the leaf precision.
struct TreeNode {
  std::optional<SplitRule> split;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  double phi = 0.0;
  std::size_t n_obs = 0;
  double gain = 0.0;

  bool is_leaf() const { return !split.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

class Tree {
 public:
  Tree() = default;
  /// Throws std::invalid_argument if the node array is not a proper binary
  /// tree rooted at index 0.
  explicit Tree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t num_leaves() const;
  std::size_t depth() const;

  /// Index of the leaf reached by a row whose feature j has value
  /// `value_of(j)`.
  template <class ValueOf>
  std::size_t leaf_index(ValueOf&& value_of) const {
    std::size_t id = 0;
    while (nodes_[id].split) {
      const auto& rule = *nodes_[id].split;
      id = static_cast<std::size_t>(rule.goes_left(value_of(rule.feature)) ? nodes_[id].left : nodes_[id].right);
    }
    return id;
  }

  std::size_t leaf_index(const Dataset& data, std::size_t row) const {
    return leaf_index([&](std::size_t j) { return data.value(row, j); });
  }

  /// Leaf estimate for a feature vector. Throws std::invalid_argument if
  /// the row lacks a feature the tree tests.
  double predict_mean(std::span<const double> row) const;
  double predict_mean(const Dataset& data, std::size_t row) const { return nodes_[leaf_index(data, row)].value; }

  bool operator==(const Tree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct SplitCandidate {
  SplitRule rule;
  double gain = 0.0;
};

/// Change in the criterion caused by replacing `parent` with the two
/// children: log-likelihood of the children minus that of the parent at
/// node-wise moment estimates (beta), or the decrease of the within-node
/// sum of squared errors (mse). Throws std::invalid_argument unless left and
/// right form a partition of parent with both sides >= min_child_size.
double split_gain(std::span<const double> parent, std::span<const double> left, std::span<const double> right,
                  SplitCriterion criterion, std::size_t min_child_size = 1, const PhiBounds& bounds = {});

/// Sum of log-densities of `ys` at their own moment estimate (one
/// observation: mu = y, phi at the upper bound).
double node_beta_log_likelihood(std::span<const double> ys, const PhiBounds& bounds = {});

/// Sum of squared deviations from the mean.
double node_sum_of_squares(std::span<const double> ys);

/// Best feasible split of the node holding `rows` (with repetition) among
/// `candidate_features`, or nothing if no feature admits a split with both
/// children of at least `min_child_size` rows and a finite gain.
/// `outcome` is indexed by dataset row and is on the working scale.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const double> outcome,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features, const GrowthConfig& config);

/// Grows a tree on `sample_rows` (a bootstrap multiset of dataset rows).
Tree grow_tree(const Dataset& data, std::span<const double> outcome, std::vector<std::size_t> sample_rows,
               const GrowthConfig& config, Rng& rng);

/// Grows a tree on every row of `data` once, using its outcome.
Tree grow_tree(const Dataset& data, const GrowthConfig& config, std::uint64_t seed);

}  // namespace betaforest

#endif  // BETAFOREST_TREE_HPP
