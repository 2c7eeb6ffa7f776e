#ifndef BETAFOREST_SCORING_HPP
#define BETAFOREST_SCORING_HPP

#include <span>
#include <string_view>

#include "betaforest/special_functions.hpp"

namespace betaforest {

/// Outcome distribution a fitted model implies on (0,1).
enum class ScoreFamily { beta, gaussian_identity, logit_normal, arcsine_normal };

std::string_view to_string(ScoreFamily family);

/// Working-scale transform of a family (identity for beta).
TransformKind family_transform(ScoreFamily family);

/// Family implied by a model fitted on the given working scale.
ScoreFamily family_for(bool beta_model, TransformKind transform);

struct ScoringOptions {
  /// Add the change-of-variables term so the normal families are densities
  /// of y on (0,1). Disabling it scores on the working scale instead.
  bool include_jacobian = true;
};

/// Log-density of one outcome. `mean` is on the family's working scale;
/// `scale` is phi for beta and sigma^2 for the normal families.
double observation_log_likelihood(double y, double mean, double scale, ScoreFamily family,
                                  const ScoringOptions& options = {});

/// Sum of observation_log_likelihood over paired ys and means.
double predictive_loglik(std::span<const double> ys, std::span<const double> means, double scale,
                         ScoreFamily family, const ScoringOptions& options = {});

}  // namespace betaforest

#endif  // BETAFOREST_SCORING_HPP
