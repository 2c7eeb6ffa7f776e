#include "betaforest/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace betaforest {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "betaforest-model";

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json schema_to_json(const std::vector<ColumnSchema>& schema) {
  json out = json::array();
  for (const auto& col : schema) {
    out.push_back({{"name", col.name}, {"kind", std::string(to_string(col.kind))}, {"categories", col.categories}});
  }
  return out;
}

std::vector<ColumnSchema> schema_from_json(const json& j) {
  std::vector<ColumnSchema> schema;
  for (const auto& col : j) {
    schema.push_back({col.at("name").get<std::string>(), parse_column_kind(col.at("kind").get<std::string>()),
                      col.at("categories").get<std::vector<int>>()});
  }
  return schema;
}

json tree_to_json(const Tree& tree) {
  std::vector<long long> feature;
  std::vector<std::string> kind;
  std::vector<double> threshold;
  std::vector<std::vector<int>> subset;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;
  std::vector<double> phi;
  std::vector<std::size_t> n_obs;
  std::vector<double> gain;
  for (const auto& node : tree.nodes()) {
    if (node.split) {
      feature.push_back(static_cast<long long>(node.split->feature));
      kind.emplace_back(node.split->kind == SplitKind::threshold ? "threshold" : "subset");
      threshold.push_back(node.split->threshold);
      subset.push_back(node.split->left_categories);
    } else {
      feature.push_back(-1);
      kind.emplace_back("leaf");
      threshold.push_back(0.0);
      subset.emplace_back();
    }
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
    phi.push_back(node.phi);
    n_obs.push_back(node.n_obs);
    gain.push_back(node.gain);
  }
  return {{"feature", feature}, {"kind", kind}, {"threshold", threshold}, {"left_categories", subset},
          {"left", left},       {"right", right}, {"value", value},       {"phi", phi},
          {"n", n_obs},         {"gain", gain}};
}

Tree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<long long>>();
  const auto kind = j.at("kind").get<std::vector<std::string>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto subset = j.at("left_categories").get<std::vector<std::vector<int>>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto phi = j.at("phi").get<std::vector<double>>();
  const auto n_obs = j.at("n").get<std::vector<std::size_t>>();
  const auto gain = j.at("gain").get<std::vector<double>>();
  const std::size_t m = feature.size();
  for (std::size_t size : {kind.size(), threshold.size(), subset.size(), left.size(), right.size(), value.size(),
                           phi.size(), n_obs.size(), gain.size()}) {
    if (size != m) {
      throw std::runtime_error("tree arrays have inconsistent lengths");
    }
  }
  std::vector<TreeNode> nodes(m);
  for (std::size_t k = 0; k < m; ++k) {
    TreeNode& node = nodes[k];
    if (kind[k] != "leaf") {
      if (feature[k] < 0) {
        throw std::runtime_error("split node without a feature");
      }
      SplitRule rule;
      rule.feature = static_cast<std::size_t>(feature[k]);
      if (kind[k] == "threshold") {
        rule.kind = SplitKind::threshold;
        rule.threshold = threshold[k];
      } else if (kind[k] == "subset") {
        rule.kind = SplitKind::subset;
        rule.left_categories = subset[k];
      } else {
        throw std::runtime_error("unknown node kind '" + kind[k] + "'");
      }
      node.split = rule;
    }
    node.left = left[k];
    node.right = right[k];
    node.value = value[k];
    node.phi = phi[k];
    node.n_obs = n_obs[k];
    node.gain = gain[k];
  }
  return Tree(std::move(nodes));
}

json forest_to_json(const ForestModel& model) {
  const ForestConfig& c = model.config();
  json config = {{"criterion", std::string(to_string(c.growth.criterion))},
                 {"transform", std::string(to_string(c.transform))},
                 {"mtry", c.growth.mtry},
                 {"min_node_size", c.growth.min_node_size},
                 {"min_child_size", c.growth.min_child_size},
                 {"max_categories_exhaustive", c.growth.max_categories_exhaustive},
                 {"phi_lower", c.growth.phi_bounds.lower},
                 {"phi_upper", c.growth.phi_bounds.upper},
                 {"ntree", c.ntree},
                 {"bootstrap", c.bootstrap}};
  json trees = json::array();
  for (const auto& tree : model.trees()) {
    trees.push_back(tree_to_json(tree));
  }
  return {{"kind", "forest"},
          {"config", config},
          {"scale", model.scale()},
          {"seed", model.seed()},
          {"outcome", model.outcome_name()},
          {"schema", schema_to_json(model.schema())},
          {"trees", trees},
          {"inbag", model.inbag_counts()}};
}

ForestModel forest_from_json(const json& j) {
  const json& c = j.at("config");
  ForestConfig config;
  config.growth.criterion = parse_criterion(c.at("criterion").get<std::string>());
  config.transform = parse_transform(c.at("transform").get<std::string>());
  config.growth.mtry = c.at("mtry").get<std::size_t>();
  config.growth.min_node_size = c.at("min_node_size").get<std::size_t>();
  config.growth.min_child_size = c.at("min_child_size").get<std::size_t>();
  config.growth.max_categories_exhaustive = c.at("max_categories_exhaustive").get<std::size_t>();
  config.growth.phi_bounds.lower = c.at("phi_lower").get<double>();
  config.growth.phi_bounds.upper = c.at("phi_upper").get<double>();
  config.ntree = c.at("ntree").get<std::size_t>();
  config.bootstrap = c.at("bootstrap").get<bool>();

  const auto schema = schema_from_json(j.at("schema"));
  std::vector<Tree> trees;
  for (const auto& t : j.at("trees")) {
    trees.push_back(tree_from_json(t));
    for (const auto& node : trees.back().nodes()) {
      if (node.split && node.split->feature >= schema.size()) {
        throw std::runtime_error("tree references feature " + std::to_string(node.split->feature) +
                                 " beyond the schema");
      }
    }
  }
  return ForestModel(config, std::move(trees), j.at("inbag").get<std::vector<std::vector<std::uint32_t>>>(),
                     j.at("scale").get<double>(), schema, j.at("outcome").get<std::string>(),
                     j.at("seed").get<std::uint64_t>());
}

json glm_to_json(const GlmModel& model) {
  const BetaGlmFit& fit = model.fit;
  std::vector<double> beta(fit.beta.data(), fit.beta.data() + fit.beta.size());
  json interactions = json::array();
  for (const auto& [a, b] : fit.design.interactions) {
    interactions.push_back({a, b});
  }
  return {{"kind", "glm"},
          {"design",
           {{"intercept", fit.design.intercept}, {"main_effects", fit.design.main_effects}, {"interactions", interactions}}},
          {"beta", beta},
          {"phi", fit.phi},
          {"converged", fit.converged},
          {"loglik", fit.loglik},
          {"iterations", fit.iterations},
          {"gradient_norm", fit.gradient_norm},
          {"outcome", model.outcome_name},
          {"schema", schema_to_json(model.schema)}};
}

GlmModel glm_from_json(const json& j) {
  GlmModel model;
  const json& d = j.at("design");
  model.fit.design.intercept = d.at("intercept").get<bool>();
  model.fit.design.main_effects = d.at("main_effects").get<std::vector<std::string>>();
  for (const auto& pair : d.at("interactions")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw std::runtime_error("interaction entries must be name pairs");
    }
    model.fit.design.interactions.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
  }
  const auto beta = j.at("beta").get<std::vector<double>>();
  if (beta.size() != model.fit.design.num_columns()) {
    throw std::runtime_error("coefficient count does not match the design");
  }
  model.fit.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  model.fit.phi = j.at("phi").get<double>();
  if (!(model.fit.phi > 0.0)) {
    throw std::runtime_error("phi must be positive");
  }
  model.fit.converged = j.at("converged").get<bool>();
  model.fit.loglik = j.at("loglik").get<double>();
  model.fit.iterations = j.at("iterations").get<std::size_t>();
  model.fit.gradient_norm = j.at("gradient_norm").get<double>();
  model.outcome_name = j.at("outcome").get<std::string>();
  model.schema = schema_from_json(j.at("schema"));
  return model;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_model(const Model& model) {
  const json payload =
      std::visit([](const auto& m) -> json {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ForestModel>) {
          return forest_to_json(m);
        } else {
          return glm_to_json(m);
        }
      }, model);
  const std::string body = payload.dump();
  json doc = {{"format", kFormatName},
              {"version", kModelFormatVersion},
              {"checksum", to_hex(fnv1a64(body))},
              {"model", payload}};
  return doc.dump(1) + "\n";
}

Model deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: parse error: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatName) {
      throw std::runtime_error("not a betaforest model document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw std::runtime_error("unsupported format version " + std::to_string(version) + " (expected " +
                               std::to_string(kModelFormatVersion) + ")");
    }
    const json& payload = doc.at("model");
    if (doc.at("checksum").get<std::string>() != to_hex(fnv1a64(payload.dump()))) {
      throw std::runtime_error("checksum mismatch");
    }
    const std::string kind = payload.at("kind").get<std::string>();
    if (kind == "forest") {
      return forest_from_json(payload);
    }
    if (kind == "glm") {
      return glm_from_json(payload);
    }
    throw std::runtime_error("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    throw std::runtime_error(what.rfind("model file:", 0) == 0 ? what : "model file: " + what);
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("error writing '" + path.string() + "'");
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace betaforest
