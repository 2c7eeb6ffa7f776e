#include "betaforest/scoring.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "betaforest/beta_distribution.hpp"

namespace betaforest {

std::string_view to_string(ScoreFamily family) {
  switch (family) {
    case ScoreFamily::beta:
      return "beta";
    case ScoreFamily::gaussian_identity:
      return "gaussian";
    case ScoreFamily::logit_normal:
      return "logit-normal";
    case ScoreFamily::arcsine_normal:
      return "arcsine-normal";
  }
  return "?";
}

TransformKind family_transform(ScoreFamily family) {
  switch (family) {
    case ScoreFamily::beta:
    case ScoreFamily::gaussian_identity:
      return TransformKind::identity;
    case ScoreFamily::logit_normal:
      return TransformKind::logit;
    case ScoreFamily::arcsine_normal:
      return TransformKind::arcsine_sqrt;
  }
  throw std::logic_error("family_transform: unknown family");
}

ScoreFamily family_for(bool beta_model, TransformKind transform) {
  if (beta_model) {
    if (transform != TransformKind::identity) {
      throw std::invalid_argument("beta models are defined on the original outcome scale only");
    }
    return ScoreFamily::beta;
  }
  switch (transform) {
    case TransformKind::identity:
      return ScoreFamily::gaussian_identity;
    case TransformKind::logit:
      return ScoreFamily::logit_normal;
    case TransformKind::arcsine_sqrt:
      return ScoreFamily::arcsine_normal;
  }
  throw std::logic_error("family_for: unknown transform");
}

double observation_log_likelihood(double y, double mean, double scale, ScoreFamily family,
                                  const ScoringOptions& options) {
  if (family == ScoreFamily::beta) {
    return log_density(y, BetaParams(mean, scale));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::domain_error("observation_log_likelihood: variance must be positive, got " + std::to_string(scale));
  }
  const TransformKind kind = family_transform(family);
  const double residual = transform(y, kind) - mean;
  double ll = -0.5 * std::log(2.0 * std::numbers::pi * scale) - residual * residual / (2.0 * scale);
  if (options.include_jacobian) {
    ll += log_jacobian(y, kind);
  }
  return ll;
}

double predictive_loglik(std::span<const double> ys, std::span<const double> means, double scale,
                         ScoreFamily family, const ScoringOptions& options) {
  if (ys.size() != means.size()) {
    throw std::invalid_argument("predictive_loglik: ys and means differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    total += observation_log_likelihood(ys[i], means[i], scale, family, options);
  }
  return total;
}

}  // namespace betaforest
