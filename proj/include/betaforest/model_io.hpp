#ifndef BETAFOREST_MODEL_IO_HPP
#define BETAFOREST_MODEL_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "betaforest/beta_glm.hpp"
#include "betaforest/dataset.hpp"
#include "betaforest/forest.hpp"

namespace betaforest {

struct GlmModel {
  BetaGlmFit fit;
  std::vector<ColumnSchema> schema;
  std::string outcome_name = "y";
};

using Model = std::variant<ForestModel, GlmModel>;

inline constexpr int kModelFormatVersion = 1;

/// JSON document {format, version, checksum, model}. The checksum is the
/// 64-bit FNV-1a hash of the compact dump of `model`.
std::string serialize_model(const Model& model);

/// Throws std::runtime_error on parse errors, unknown format versions,
/// checksum mismatches or inconsistent content. Never returns a partial
/// model.
Model deserialize_model(std::string_view text);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace betaforest

#endif  // BETAFOREST_MODEL_IO_HPP
