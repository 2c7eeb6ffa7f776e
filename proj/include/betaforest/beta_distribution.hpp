#ifndef BETAFOREST_BETA_DISTRIBUTION_HPP
#define BETAFOREST_BETA_DISTRIBUTION_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "betaforest/random.hpp"

namespace betaforest {

/// Clamp interval for the precision parameter.
struct PhiBounds {
  double lower = 1e-4;
  double upper = 1e6;
};

/// Location/precision parameterization of the beta distribution:
/// shape parameters are (mu * phi, (1 - mu) * phi).
class BetaParams {
 public:
  /// Throws std::domain_error unless 0 < mu < 1 and phi > 0 (both finite).
  BetaParams(double mu, double phi);

  double mu() const { return mu_; }
  double phi() const { return phi_; }
  double shape_a() const { return mu_ * phi_; }
  double shape_b() const { return (1.0 - mu_) * phi_; }

  bool operator==(const BetaParams&) const = default;

 private:
  double mu_;
  double phi_;
};

struct BetaMoments {
  double mean;
  double variance;
};

/// Location clamp applied by the node-wise estimator.
inline constexpr double kMuEpsilon = 1e-10;

/// Replacement for sampler draws that round to exactly 0 or 1.
inline constexpr double kSampleEpsilon = 1e-12;

double log_density(double y, const BetaParams& p);

BetaMoments moments(const BetaParams& p);

/// Method-of-moments parameters from a sample mean and unbiased variance:
/// mu clamped into [kMuEpsilon, 1 - kMuEpsilon], phi = mu(1-mu)/var - 1
/// clamped into the bounds (upper bound when var <= 0).
BetaParams params_from_moments(double mean, double variance, const PhiBounds& bounds = {});

/// Node-wise moment estimator. Requires at least two observations in (0,1).
BetaParams estimate_node_params(std::span<const double> ys, const PhiBounds& bounds = {});

/// Sum of log_density over a node given its sufficient statistics
/// (count, sum ln y, sum ln(1-y)).
double node_log_likelihood(double count, double sum_log_y, double sum_log1m_y, const BetaParams& p);

/// Same quantity from log-sums taken about a reference point s in (0,1):
/// sum ln(y/s) and sum ln((1-y)/(1-s)). With s near the node mean this
/// keeps full accuracy when phi is large.
double node_log_likelihood_about(double count, double shift, double sum_log_ratio, double sum_log1m_ratio,
                                 const BetaParams& p);

/// n i.i.d. draws, each the ratio G_a / (G_a + G_b) of two gamma variates.
std::vector<double> sample(const BetaParams& p, std::size_t n, Rng& rng);

/// One draw from Gamma(shape, 1), returned on the log scale.
double sample_log_gamma(double shape, Rng& rng);

/// Sum of log_density(ys[i]; mus[i], phi).
double plugin_log_likelihood(std::span<const double> ys, std::span<const double> mus, double phi);

/// Maximizes plugin_log_likelihood over phi within the bounds (golden-section
/// search on ln phi, then compared against both endpoints and the pooled
/// moment estimate).
double fit_phi_given_means(std::span<const double> ys, std::span<const double> mus, const PhiBounds& bounds = {});

}  // namespace betaforest

#endif  // BETAFOREST_BETA_DISTRIBUTION_HPP
