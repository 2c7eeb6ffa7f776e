#include "betaforest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "betaforest/parallel.hpp"
#include "betaforest/random.hpp"

namespace betaforest {

namespace {

constexpr double kMinVariance = 1e-12;

std::vector<double> working_outcome(const Dataset& data, const ForestConfig& config) {
  const auto y = data.outcome();
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = transform(y[i], config.transform);
  }
  return out;
}

void require_training_data(const ForestModel& model, const Dataset& data) {
  data.require_schema(model.schema());
  if (data.num_rows() != model.num_training_rows()) {
    throw std::invalid_argument("out-of-bag prediction needs the training data (" +
                                std::to_string(model.num_training_rows()) + " rows), got " +
                                std::to_string(data.num_rows()) + " rows");
  }
  if (!data.has_outcome()) {
    throw std::invalid_argument("training data must carry the outcome column");
  }
}

}  // namespace

void ForestConfig::validate(std::size_t num_features) const {
  growth.validate(num_features);
  if (ntree < 1) {
    throw std::invalid_argument("ForestConfig: ntree must be at least 1");
  }
  if (growth.criterion == SplitCriterion::beta_loglik && transform != TransformKind::identity) {
    throw std::invalid_argument("ForestConfig: the beta criterion works on the original outcome scale; "
                                "transforms require the mse criterion");
  }
}

std::size_t default_mtry(std::size_t num_features) {
  auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_features))));
  while (m * m < num_features) ++m;
  while (m > 1 && (m - 1) * (m - 1) >= num_features) --m;
  return std::max<std::size_t>(1, m);
}

ForestConfig default_forest_config(std::size_t num_features, SplitCriterion criterion, TransformKind transform) {
  ForestConfig config;
  config.growth.criterion = criterion;
  config.growth.mtry = default_mtry(num_features);
  config.growth.min_node_size = 5;
  config.growth.min_child_size = criterion == SplitCriterion::beta_loglik ? 2 : 1;
  config.ntree = 500;
  config.transform = transform;
  return config;
}

ForestModel::ForestModel(ForestConfig config, std::vector<Tree> trees,
                         std::vector<std::vector<std::uint32_t>> inbag_counts, double scale,
                         std::vector<ColumnSchema> schema, std::string outcome_name, std::uint64_t seed)
    : config_(config),
      trees_(std::move(trees)),
      inbag_counts_(std::move(inbag_counts)),
      scale_(scale),
      schema_(std::move(schema)),
      outcome_name_(std::move(outcome_name)),
      seed_(seed) {
  config_.validate(schema_.size());
  if (trees_.size() != config_.ntree || inbag_counts_.size() != config_.ntree) {
    throw std::invalid_argument("ForestModel: expected " + std::to_string(config_.ntree) + " trees and inbag records");
  }
  const std::size_t n = inbag_counts_.front().size();
  for (const auto& counts : inbag_counts_) {
    const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (counts.size() != n || total != n) {
      throw std::invalid_argument("ForestModel: every inbag record must draw n rows out of the same n");
    }
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw std::invalid_argument("ForestModel: scale must be positive and finite");
  }
}

ScoreFamily ForestModel::family() const {
  return family_for(config_.growth.criterion == SplitCriterion::beta_loglik, config_.transform);
}

ForestModel train_forest(const Dataset& data, const ForestConfig& config, std::uint64_t master_seed,
                         std::size_t threads) {
  config.validate(data.num_features());
  const std::size_t n = data.num_rows();
  if (n == 0) {
    throw std::invalid_argument("train_forest: empty data");
  }
  const std::vector<double> outcome = working_outcome(data, config);

  std::vector<Tree> trees(config.ntree);
  std::vector<std::vector<std::uint32_t>> inbag(config.ntree);
  parallel_for(config.ntree, threads, [&](std::size_t t) {
    Rng rng(derive_seed(master_seed, {t}));
    std::vector<std::uint32_t> counts(n, config.bootstrap ? 0 : 1);
    if (config.bootstrap) {
      for (std::size_t k = 0; k < n; ++k) {
        ++counts[rng.uniform_index(n)];
      }
    }
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows.insert(rows.end(), counts[i], i);
    }
    trees[t] = grow_tree(data, outcome, std::move(rows), config.growth, rng);
    inbag[t] = std::move(counts);
  });

  // Provisional scale so the model is valid; replaced by the out-of-bag fit.
  ForestModel provisional(config, std::move(trees), std::move(inbag), 1.0, data.schema(), data.outcome_name(),
                          master_seed);
  const double scale = estimate_scale(provisional, data, threads);
  return ForestModel(config, std::vector<Tree>(provisional.trees()),
                     std::vector<std::vector<std::uint32_t>>(provisional.inbag_counts()), scale, data.schema(),
                     data.outcome_name(), master_seed);
}

namespace {

ForestPrediction aggregate(const ForestModel& model, const Dataset& data, std::size_t threads, bool oob_only) {
  const std::size_t n = data.num_rows();
  ForestPrediction out;
  out.working.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.mean.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.tree_count.assign(n, 0);
  const auto& trees = model.trees();
  const auto& inbag = model.inbag_counts();
  const TransformKind kind = model.config().transform;
  parallel_for(n, threads, [&](std::size_t i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < trees.size(); ++t) {
      if (oob_only && inbag[t][i] != 0) {
        continue;
      }
      sum += trees[t].predict_mean(data, i);
      ++count;
    }
    if (count > 0) {
      out.working[i] = sum / static_cast<double>(count);
      out.mean[i] = inverse_transform(out.working[i], kind);
      out.tree_count[i] = count;
    }
  });
  return out;
}

}  // namespace

ForestPrediction predict(const ForestModel& model, const Dataset& data, std::size_t threads) {
  data.require_schema(model.schema());
  return aggregate(model, data, threads, false);
}

ForestPrediction predict_oob(const ForestModel& model, const Dataset& data, std::size_t threads) {
  require_training_data(model, data);
  return aggregate(model, data, threads, true);
}

double estimate_scale(const ForestModel& model, const Dataset& data, std::size_t threads) {
  require_training_data(model, data);
  const auto y = data.outcome();
  ForestPrediction pred = predict_oob(model, data, threads);
  std::size_t available = 0;
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    available += pred.available(i) ? 1 : 0;
  }
  if (available < 2) {
    pred = predict(model, data, threads);
  }
  std::vector<double> ys;
  std::vector<double> means;
  for (std::size_t i = 0; i < data.num_rows(); ++i) {
    if (pred.available(i)) {
      ys.push_back(y[i]);
      means.push_back(pred.working[i]);
    }
  }
  if (model.config().growth.criterion == SplitCriterion::beta_loglik) {
    return fit_phi_given_means(ys, means, model.config().growth.phi_bounds);
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double r = transform(ys[i], model.config().transform) - means[i];
    ss += r * r;
  }
  return std::max(ss / static_cast<double>(ys.size()), kMinVariance);
}

std::vector<double> variable_importance(const ForestModel& model, const Dataset& data, std::uint64_t seed,
                                        std::size_t threads) {
  require_training_data(model, data);
  const std::size_t p = data.num_features();
  const auto& trees = model.trees();
  const auto y = data.outcome();
  const ScoreFamily family = model.family();
  const double scale = model.scale();

  // per_tree[t][j]: drop for tree t and feature j; used[t] marks trees with
  // out-of-bag rows. Summed in tree order afterwards.
  std::vector<std::vector<double>> per_tree(trees.size(), std::vector<double>(p, 0.0));
  std::vector<char> used(trees.size(), 0);
  parallel_for(trees.size(), threads, [&](std::size_t t) {
    std::vector<std::size_t> oob;
    for (std::size_t i = 0; i < data.num_rows(); ++i) {
      if (model.inbag_counts()[t][i] == 0) {
        oob.push_back(i);
      }
    }
    if (oob.empty()) {
      return;
    }
    used[t] = 1;
    const Tree& tree = trees[t];
    auto score_rows = [&](auto&& value_of) {
      double total = 0.0;
      for (std::size_t k = 0; k < oob.size(); ++k) {
        const std::size_t i = oob[k];
        const std::size_t leaf = tree.leaf_index([&](std::size_t j) { return value_of(k, i, j); });
        total += observation_log_likelihood(y[i], tree.nodes()[leaf].value, scale, family);
      }
      return total;
    };
    const double baseline = score_rows([&](std::size_t, std::size_t i, std::size_t j) { return data.value(i, j); });

    std::vector<double> permuted(oob.size());
    for (std::size_t f = 0; f < p; ++f) {
      for (std::size_t k = 0; k < oob.size(); ++k) {
        permuted[k] = data.value(oob[k], f);
      }
      Rng rng(derive_seed(seed, {t, f}));
      for (std::size_t k = permuted.size(); k > 1; --k) {
        std::swap(permuted[k - 1], permuted[rng.uniform_index(k)]);
      }
      const double shuffled = score_rows([&](std::size_t k, std::size_t i, std::size_t j) {
        return j == f ? permuted[k] : data.value(i, j);
      });
      per_tree[t][f] = baseline - shuffled;
    }
  });

  std::vector<double> importance(p, 0.0);
  std::size_t num_used = 0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (!used[t]) {
      continue;
    }
    ++num_used;
    for (std::size_t f = 0; f < p; ++f) {
      importance[f] += per_tree[t][f];
    }
  }
  if (num_used > 0) {
    for (double& v : importance) {
      v /= static_cast<double>(num_used);
    }
  }
  return importance;
}

}  // namespace betaforest
