#ifndef BETAFOREST_SPECIAL_FUNCTIONS_HPP
#define BETAFOREST_SPECIAL_FUNCTIONS_HPP

#include <string_view>

namespace betaforest {

/// Natural logarithm of the gamma function for x > 0.
/// Throws std::domain_error for x <= 0 or non-finite x.
double log_gamma(double x);

/// Remainder of Stirling's formula:
/// ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi) / 2], for x > 0.
double log_gamma_correction(double x);

/// psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

/// Outcome scale on which a model works. Each kind has a forward map from
/// (0,1), its inverse, and the log-Jacobian of the forward map.
enum class TransformKind { identity, logit, arcsine_sqrt };

double transform(double y, TransformKind kind);
double inverse_transform(double t, TransformKind kind);

/// ln |d transform(y) / dy|. Adding this to a density on the transformed
/// scale gives the density of y on (0,1).
double log_jacobian(double y, TransformKind kind);

double inverse_logit(double eta);

std::string_view to_string(TransformKind kind);
TransformKind parse_transform(std::string_view name);

}  // namespace betaforest

#endif  // BETAFOREST_SPECIAL_FUNCTIONS_HPP
