#include "betaforest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace betaforest {

std::string_view to_string(SplitCriterion criterion) {
  return criterion == SplitCriterion::beta_loglik ? "beta" : "mse";
}

SplitCriterion parse_criterion(std::string_view name) {
  if (name == "beta" || name == "beta_loglik") return SplitCriterion::beta_loglik;
  if (name == "mse") return SplitCriterion::mse;
  throw std::invalid_argument("unknown split criterion '" + std::string(name) + "' (expected beta or mse)");
}

bool SplitRule::goes_left(double value) const {
  if (kind == SplitKind::threshold) {
    return value <= threshold;
  }
  const double code = std::round(value);
  if (code != value) {
    return false;
  }
  return std::binary_search(left_categories.begin(), left_categories.end(), static_cast<int>(code));
}

void GrowthConfig::validate(std::size_t num_features) const {
  if (num_features == 0) {
    throw std::invalid_argument("GrowthConfig: data has no features");
  }
  if (mtry < 1 || mtry > num_features) {
    throw std::invalid_argument("GrowthConfig: mtry must lie in [1, " + std::to_string(num_features) + "], got " +
                                std::to_string(mtry));
  }
  if (min_node_size < 1) {
    throw std::invalid_argument("GrowthConfig: min_node_size must be at least 1");
  }
  const std::size_t min_child = criterion == SplitCriterion::beta_loglik ? 2 : 1;
  if (min_child_size < min_child) {
    throw std::invalid_argument("GrowthConfig: min_child_size must be at least " + std::to_string(min_child) +
                                " for the " + std::string(to_string(criterion)) + " criterion");
  }
  if (max_categories_exhaustive < 2 || max_categories_exhaustive > 30) {
    throw std::invalid_argument("GrowthConfig: max_categories_exhaustive must lie in [2, 30]");
  }
  if (!(phi_bounds.lower > 0.0) || !(phi_bounds.upper > phi_bounds.lower) || !std::isfinite(phi_bounds.upper)) {
    throw std::invalid_argument("GrowthConfig: invalid phi bounds");
  }
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw std::invalid_argument("Tree: no nodes");
  }
  std::vector<int> references(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) {
      if (node.left != -1 || node.right != -1) {
        throw std::invalid_argument("Tree: leaf " + std::to_string(i) + " has children");
      }
      continue;
    }
    for (std::int32_t child : {node.left, node.right}) {
      if (child <= static_cast<std::int32_t>(i) || child >= static_cast<std::int32_t>(nodes_.size())) {
        throw std::invalid_argument("Tree: node " + std::to_string(i) + " has an invalid child index");
      }
      ++references[static_cast<std::size_t>(child)];
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (references[i] != 1) {
      throw std::invalid_argument("Tree: node " + std::to_string(i) + " is not referenced exactly once");
    }
  }
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double Tree::predict_mean(std::span<const double> row) const {
  const std::size_t leaf = leaf_index([&](std::size_t j) {
    if (j >= row.size()) {
      throw std::invalid_argument("predict_mean: row has no value for feature " + std::to_string(j));
    }
    return row[j];
  });
  return nodes_[leaf].value;
}

double node_beta_log_likelihood(std::span<const double> ys, const PhiBounds& bounds) {
  if (ys.empty()) {
    return 0.0;
  }
  const BetaParams params = ys.size() == 1 ? BetaParams(std::clamp(ys[0], kMuEpsilon, 1.0 - kMuEpsilon), bounds.upper)
                                           : estimate_node_params(ys, bounds);
  double ll = 0.0;
  for (double y : ys) {
    ll += log_density(y, params);
  }
  return ll;
}

double node_sum_of_squares(std::span<const double> ys) {
  if (ys.empty()) {
    return 0.0;
  }
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double ss = 0.0;
  for (double y : ys) {
    ss += (y - mean) * (y - mean);
  }
  return ss;
}

double split_gain(std::span<const double> parent, std::span<const double> left, std::span<const double> right,
                  SplitCriterion criterion, std::size_t min_child_size, const PhiBounds& bounds) {
  if (left.size() + right.size() != parent.size()) {
    throw std::invalid_argument("split_gain: children sizes do not add up to the parent size");
  }
  if (left.size() < std::max<std::size_t>(min_child_size, 1) || right.size() < std::max<std::size_t>(min_child_size, 1)) {
    throw std::invalid_argument("split_gain: a child is smaller than the minimum child size");
  }
  std::vector<double> merged(left.begin(), left.end());
  merged.insert(merged.end(), right.begin(), right.end());
  std::vector<double> sorted_parent(parent.begin(), parent.end());
  std::sort(merged.begin(), merged.end());
  std::sort(sorted_parent.begin(), sorted_parent.end());
  if (merged != sorted_parent) {
    throw std::invalid_argument("split_gain: children are not a partition of the parent");
  }
  if (criterion == SplitCriterion::mse) {
    return node_sum_of_squares(parent) - (node_sum_of_squares(left) + node_sum_of_squares(right));
  }
  if (left.size() < 2 || right.size() < 2) {
    throw std::invalid_argument("split_gain: the beta criterion needs at least 2 observations per child");
  }
  return node_beta_log_likelihood(left, bounds) + node_beta_log_likelihood(right, bounds) -
         node_beta_log_likelihood(parent, bounds);
}

namespace {

// Sufficient statistics of a set of rows. Sums of the outcome and of its
// logs are taken about a per-node shift, which keeps the variance and the
// log-likelihood free of cancellation.
struct Stats {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_log = 0.0;
  double sum_log1m = 0.0;

  Stats& operator+=(const Stats& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
    sum_log += o.sum_log;
    sum_log1m += o.sum_log1m;
    return *this;
  }

  Stats operator-(const Stats& o) const {
    return {n - o.n, sum - o.sum, sum_sq - o.sum_sq, sum_log - o.sum_log, sum_log1m - o.sum_log1m};
  }
};

struct Group {
  std::uint32_t rank;
  Stats stats;
};

bool lexicographically_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

class SplitSearcher {
 public:
  SplitSearcher(const Dataset& data, std::span<const double> outcome, const GrowthConfig& config)
      : data_(data), outcome_(outcome), config_(config) {
    if (outcome.size() != data.num_rows()) {
      throw std::invalid_argument("split search: outcome length differs from the number of rows");
    }
    if (config.criterion == SplitCriterion::beta_loglik) {
      log_y_.resize(outcome.size());
      log1m_y_.resize(outcome.size());
      for (std::size_t i = 0; i < outcome.size(); ++i) {
        const double y = outcome[i];
        if (!(y > 0.0 && y < 1.0)) {
          throw std::domain_error("beta criterion: outcome at row " + std::to_string(i) + " is outside (0,1)");
        }
        log_y_[i] = std::log(y);
        log1m_y_[i] = std::log1p(-y);
      }
    } else {
      for (double y : outcome) {
        if (!std::isfinite(y)) {
          throw std::domain_error("mse criterion: non-finite outcome");
        }
      }
    }
    std::size_t max_unique = 0;
    for (std::size_t j = 0; j < data.num_features(); ++j) {
      max_unique = std::max(max_unique, data.unique_values(j).size());
    }
    bins_.resize(max_unique);
  }

  std::optional<SplitCandidate> search(std::span<const std::size_t> rows, std::span<const std::size_t> features) {
    if (rows.size() < 2) {
      return std::nullopt;
    }
    parent_score_ = own_score(rows);
    Stats parent;
    for (std::size_t r : rows) {
      parent += row_stats(r);
    }
    parent_ = parent;
    best_.reset();

    for (std::size_t feature : features) {
      if (feature >= data_.num_features()) {
        throw std::out_of_range("split search: feature index out of range");
      }
      collect_groups(rows, feature);
      if (groups_.size() < 2) {
        continue;
      }
      if (data_.column_schema(feature).kind == ColumnKind::categorical) {
        search_subsets(feature);
      } else {
        search_thresholds(feature);
      }
    }
    if (best_) {
      // Prefix sums about the parent's shift lose accuracy in small, tight
      // children; report the gain recomputed about each child's own mean.
      left_rows_.clear();
      right_rows_.clear();
      for (std::size_t r : rows) {
        (best_->rule.goes_left(data_.value(r, best_->rule.feature)) ? left_rows_ : right_rows_).push_back(r);
      }
      const double parent_score = own_score(rows);
      best_->gain = own_score(left_rows_) + own_score(right_rows_) - parent_score;
    }
    return best_;
  }

 private:
  void set_shift(std::span<const std::size_t> rows) {
    shift_ = 0.0;
    for (std::size_t r : rows) {
      shift_ += outcome_[r];
    }
    shift_ /= static_cast<double>(rows.size());
    if (!log_y_.empty()) {
      log_shift_ = std::log(shift_);
      log1m_shift_ = std::log1p(-shift_);
    }
  }

  // Score of `rows` with the shift set to their own mean. Leaves the shift
  // there.
  double own_score(std::span<const std::size_t> rows) {
    set_shift(rows);
    Stats s;
    for (std::size_t r : rows) {
      s += row_stats(r);
    }
    return score(s);
  }

  Stats row_stats(std::size_t r) const {
    const double d = outcome_[r] - shift_;
    Stats s{1.0, d, d * d, 0.0, 0.0};
    if (!log_y_.empty()) {
      s.sum_log = log_y_[r] - log_shift_;
      s.sum_log1m = log1m_y_[r] - log1m_shift_;
    }
    return s;
  }

  double score(const Stats& s) const {
    const double centered_ss = s.sum_sq - s.sum * s.sum / s.n;
    if (config_.criterion == SplitCriterion::mse) {
      return -centered_ss;
    }
    const double mean = shift_ + s.sum / s.n;
    const BetaParams params = params_from_moments(mean, centered_ss / (s.n - 1.0), config_.phi_bounds);
    return node_log_likelihood_about(s.n, shift_, s.sum_log, s.sum_log1m, params);
  }

  void collect_groups(std::span<const std::size_t> rows, std::size_t feature) {
    groups_.clear();
    const auto ranks = data_.value_ranks(feature);
    const std::size_t num_unique = data_.unique_values(feature).size();
    if (num_unique <= 4 * rows.size()) {
      std::fill_n(bins_.begin(), num_unique, Stats{});
      for (std::size_t r : rows) {
        bins_[ranks[r]] += row_stats(r);
      }
      for (std::size_t k = 0; k < num_unique; ++k) {
        if (bins_[k].n > 0.0) {
          groups_.push_back({static_cast<std::uint32_t>(k), bins_[k]});
        }
      }
      return;
    }
    order_.clear();
    for (std::size_t r : rows) {
      order_.emplace_back(ranks[r], r);
    }
    std::sort(order_.begin(), order_.end());
    for (const auto& [rank, r] : order_) {
      if (groups_.empty() || groups_.back().rank != rank) {
        groups_.push_back({rank, Stats{}});
      }
      groups_.back().stats += row_stats(r);
    }
  }

  bool feasible(const Stats& left, const Stats& right) const {
    const auto min_child = static_cast<double>(config_.min_child_size);
    return left.n >= min_child && right.n >= min_child;
  }

  void consider(SplitRule rule, double gain) {
    if (!std::isfinite(gain)) {
      return;
    }
    if (best_) {
      const double tol = 1e-10 * std::max(1.0, std::abs(best_->gain));
      if (gain < best_->gain - tol) {
        return;
      }
      if (gain <= best_->gain + tol) {
        // Tie: earlier feature or smaller threshold already wins; for subset
        // rules of the same feature the lexicographically smaller set wins.
        const bool same_feature_subset = rule.kind == SplitKind::subset && best_->rule.feature == rule.feature &&
                                         best_->rule.kind == SplitKind::subset;
        if (!same_feature_subset || !lexicographically_less(rule.left_categories, best_->rule.left_categories)) {
          return;
        }
      }
    }
    best_ = SplitCandidate{std::move(rule), gain};
  }

  void search_thresholds(std::size_t feature) {
    const auto uniq = data_.unique_values(feature);
    Stats left;
    for (std::size_t k = 0; k + 1 < groups_.size(); ++k) {
      left += groups_[k].stats;
      const Stats right = parent_ - left;
      if (!feasible(left, right)) {
        continue;
      }
      const double gain = score(left) + score(right) - parent_score_;
      const double lo = uniq[groups_[k].rank];
      const double hi = uniq[groups_[k + 1].rank];
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) {
        threshold = lo;
      }
      consider(SplitRule{feature, SplitKind::threshold, threshold, {}}, gain);
    }
  }

  void search_subsets(std::size_t feature) {
    const auto uniq = data_.unique_values(feature);
    const std::size_t r = groups_.size();
    auto code_of = [&](const Group& g) { return static_cast<int>(uniq[g.rank]); };

    if (r <= config_.max_categories_exhaustive) {
      // The largest code stays on the right, giving 2^(r-1) - 1 bipartitions.
      const std::uint32_t num_masks = 1u << (r - 1);
      std::vector<int> left_codes;
      for (std::uint32_t mask = 1; mask < num_masks; ++mask) {
        Stats left;
        left_codes.clear();
        for (std::size_t k = 0; k + 1 < r; ++k) {
          if (mask & (1u << k)) {
            left += groups_[k].stats;
            left_codes.push_back(code_of(groups_[k]));
          }
        }
        const Stats right = parent_ - left;
        if (!feasible(left, right)) {
          continue;
        }
        const double gain = score(left) + score(right) - parent_score_;
        consider(SplitRule{feature, SplitKind::subset, 0.0, left_codes}, gain);
      }
      return;
    }

    // Many categories: order by mean outcome and scan like an ordinal feature.
    std::vector<Group> ordered = groups_;
    std::stable_sort(ordered.begin(), ordered.end(), [](const Group& a, const Group& b) {
      return a.stats.sum / a.stats.n < b.stats.sum / b.stats.n;
    });
    Stats left;
    std::vector<int> left_codes;
    for (std::size_t k = 0; k + 1 < r; ++k) {
      left += ordered[k].stats;
      left_codes.push_back(code_of(ordered[k]));
      const Stats right = parent_ - left;
      if (!feasible(left, right)) {
        continue;
      }
      const double gain = score(left) + score(right) - parent_score_;
      std::vector<int> sorted_codes = left_codes;
      std::sort(sorted_codes.begin(), sorted_codes.end());
      consider(SplitRule{feature, SplitKind::subset, 0.0, std::move(sorted_codes)}, gain);
    }
  }

  const Dataset& data_;
  std::span<const double> outcome_;
  const GrowthConfig& config_;
  std::vector<double> log_y_;
  std::vector<double> log1m_y_;
  std::vector<Stats> bins_;
  std::vector<std::pair<std::uint32_t, std::size_t>> order_;
  std::vector<Group> groups_;
  double shift_ = 0.0;
  double log_shift_ = 0.0;
  std::vector<std::size_t> left_rows_;
  std::vector<std::size_t> right_rows_;
  double log1m_shift_ = 0.0;
  Stats parent_;
  double parent_score_ = 0.0;
  std::optional<SplitCandidate> best_;
};

TreeNode make_leaf(std::span<const double> outcome, std::span<const std::size_t> rows, const GrowthConfig& config) {
  TreeNode leaf;
  leaf.n_obs = rows.size();
  std::vector<double> ys;
  ys.reserve(rows.size());
  for (std::size_t r : rows) {
    ys.push_back(outcome[r]);
  }
  if (config.criterion == SplitCriterion::beta_loglik) {
    const BetaParams params = ys.size() >= 2
                                  ? estimate_node_params(ys, config.phi_bounds)
                                  : BetaParams(std::clamp(ys[0], kMuEpsilon, 1.0 - kMuEpsilon), config.phi_bounds.upper);
    leaf.value = params.mu();
    leaf.phi = params.phi();
  } else {
    leaf.value = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  }
  return leaf;
}

}  // namespace

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const double> outcome,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features, const GrowthConfig& config) {
  config.validate(data.num_features());
  SplitSearcher searcher(data, outcome, config);
  return searcher.search(rows, candidate_features);
}

Tree grow_tree(const Dataset& data, std::span<const double> outcome, std::vector<std::size_t> sample_rows,
               const GrowthConfig& config, Rng& rng) {
  config.validate(data.num_features());
  if (sample_rows.empty()) {
    throw std::invalid_argument("grow_tree: no observations");
  }
  for (std::size_t r : sample_rows) {
    if (r >= data.num_rows()) {
      throw std::out_of_range("grow_tree: sample row out of range");
    }
  }
  SplitSearcher searcher(data, outcome, config);

  const std::size_t p = data.num_features();
  std::vector<std::size_t> feature_pool(p);
  std::vector<TreeNode> nodes;
  nodes.emplace_back();

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Pending> stack{{0, 0, sample_rows.size()}};
  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    const std::span<std::size_t> rows(sample_rows.data() + job.begin, job.end - job.begin);

    std::optional<SplitCandidate> split;
    if (rows.size() > config.min_node_size) {
      std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < config.mtry; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(p - i));
        std::swap(feature_pool[i], feature_pool[j]);
      }
      split = searcher.search(rows, std::span<const std::size_t>(feature_pool.data(), config.mtry));
    }
    if (!split) {
      nodes[job.node] = make_leaf(outcome, rows, config);
      continue;
    }

    const auto& rule = split->rule;
    const auto middle = std::stable_partition(rows.begin(), rows.end(), [&](std::size_t r) {
      return rule.goes_left(data.value(r, rule.feature));
    });
    const auto num_left = static_cast<std::size_t>(middle - rows.begin());

    const auto left_id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    TreeNode& node = nodes[job.node];
    node.split = split->rule;
    node.gain = split->gain;
    node.n_obs = rows.size();
    node.left = left_id;
    node.right = left_id + 1;
    stack.push_back({static_cast<std::size_t>(left_id) + 1, job.begin + num_left, job.end});
    stack.push_back({static_cast<std::size_t>(left_id), job.begin, job.begin + num_left});
  }
  return Tree(std::move(nodes));
}

Tree grow_tree(const Dataset& data, const GrowthConfig& config, std::uint64_t seed) {
  std::vector<std::size_t> rows(data.num_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng(seed);
  return grow_tree(data, data.outcome(), std::move(rows), config, rng);
}

}  // namespace betaforest
