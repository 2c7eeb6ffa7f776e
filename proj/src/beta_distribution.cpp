#include "betaforest/beta_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "betaforest/special_functions.hpp"

namespace betaforest {

BetaParams::BetaParams(double mu, double phi) : mu_(mu), phi_(phi) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw std::domain_error("BetaParams: mu must lie in (0,1), got " + std::to_string(mu));
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw std::domain_error("BetaParams: phi must be positive and finite, got " + std::to_string(phi));
  }
}

double log_density(double y, const BetaParams& p) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error("log_density: y must lie in (0,1), got " + std::to_string(y));
  }
  return node_log_likelihood_about(1.0, y, 0.0, 0.0, p);
}

BetaMoments moments(const BetaParams& p) {
  return {p.mu(), p.mu() * (1.0 - p.mu()) / (p.phi() + 1.0)};
}

BetaParams params_from_moments(double mean, double variance, const PhiBounds& bounds) {
  const double mu = std::clamp(mean, kMuEpsilon, 1.0 - kMuEpsilon);
  double phi = bounds.upper;
  if (variance > 0.0) {
    phi = mu * (1.0 - mu) / variance - 1.0;
    if (std::isnan(phi)) {
      phi = bounds.upper;
    }
  }
  phi = std::clamp(phi, bounds.lower, bounds.upper);
  return BetaParams(mu, phi);
}

BetaParams estimate_node_params(std::span<const double> ys, const PhiBounds& bounds) {
  if (ys.size() < 2) {
    throw std::invalid_argument("estimate_node_params: need at least 2 observations, got " +
                                std::to_string(ys.size()));
  }
  double sum = 0.0;
  bool constant = true;
  for (double y : ys) {
    if (!(y > 0.0 && y < 1.0)) {
      throw std::domain_error("estimate_node_params: observation outside (0,1): " + std::to_string(y));
    }
    sum += y;
    constant = constant && y == ys.front();
  }
  if (constant) {
    return params_from_moments(ys.front(), 0.0, bounds);
  }
  const double n = static_cast<double>(ys.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double y : ys) {
    ss += (y - mean) * (y - mean);
  }
  return params_from_moments(mean, ss / (n - 1.0), bounds);
}

double node_log_likelihood(double count, double sum_log_y, double sum_log1m_y, const BetaParams& p) {
  const double a = p.shape_a();
  const double b = p.shape_b();
  return count * (log_gamma(p.phi()) - log_gamma(a) - log_gamma(b)) + (a - 1.0) * sum_log_y +
         (b - 1.0) * sum_log1m_y;
}

double node_log_likelihood_about(double count, double shift, double sum_log_ratio, double sum_log1m_ratio,
                                 const BetaParams& p) {
  if (!(shift > 0.0 && shift < 1.0)) {
    throw std::domain_error("node_log_likelihood_about: shift must lie in (0,1), got " + std::to_string(shift));
  }
  const double mu = p.mu();
  const double phi = p.phi();
  const double a = p.shape_a();
  const double b = p.shape_b();
  // sum ln(y/mu) and sum ln((1-y)/(1-mu)); the n ln Gamma terms cancel
  // against a sum ln y + b sum ln(1-y) analytically, leaving Stirling
  // remainders.
  const double log_y_over_mu = sum_log_ratio - count * std::log1p((mu - shift) / shift);
  const double log1m_y_over_mu = sum_log1m_ratio - count * std::log1p((shift - mu) / (1.0 - shift));
  const double constant = 0.5 * (std::log(mu) + std::log1p(-mu) + std::log(phi) - std::log(2.0 * std::numbers::pi)) +
                          log_gamma_correction(phi) - log_gamma_correction(a) - log_gamma_correction(b) -
                          std::log(shift) - std::log1p(-shift);
  return a * log_y_over_mu + b * log1m_y_over_mu - (sum_log_ratio + sum_log1m_ratio) + count * constant;
}

double sample_log_gamma(double shape, Rng& rng) {
  if (shape < 1.0) {
    // Boost: G(a) = G(a + 1) * U^(1/a).
    return sample_log_gamma(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) {
      return std::log(d * v);
    }
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return std::log(d * v);
    }
  }
}

std::vector<double> sample(const BetaParams& p, std::size_t n, Rng& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_a = sample_log_gamma(p.shape_a(), rng);
    const double log_b = sample_log_gamma(p.shape_b(), rng);
    double y = 1.0 / (1.0 + std::exp(log_b - log_a));
    if (y <= 0.0) {
      y = kSampleEpsilon;
    } else if (y >= 1.0) {
      y = 1.0 - kSampleEpsilon;
    }
    out.push_back(y);
  }
  return out;
}

double plugin_log_likelihood(std::span<const double> ys, std::span<const double> mus, double phi) {
  if (ys.size() != mus.size()) {
    throw std::invalid_argument("plugin_log_likelihood: length mismatch");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ll += log_density(ys[i], BetaParams(mus[i], phi));
  }
  return ll;
}

double fit_phi_given_means(std::span<const double> ys, std::span<const double> mus, const PhiBounds& bounds) {
  if (ys.size() != mus.size()) {
    throw std::invalid_argument("fit_phi_given_means: ys and mus differ in length");
  }
  if (ys.size() < 2) {
    throw std::invalid_argument("fit_phi_given_means: need at least 2 observations");
  }
  auto objective = [&](double log_phi) { return plugin_log_likelihood(ys, mus, std::exp(log_phi)); };

  // Golden-section search for the maximum on ln phi.
  const double inv_golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(bounds.lower);
  double hi = std::log(bounds.upper);
  double x1 = hi - inv_golden * (hi - lo);
  double x2 = lo + inv_golden * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_golden * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_golden * (hi - lo);
      f1 = objective(x1);
    }
  }

  double best_phi = std::exp(f1 >= f2 ? x1 : x2);
  double best_ll = std::max(f1, f2);
  const double candidates[] = {bounds.lower, bounds.upper, estimate_node_params(ys, bounds).phi()};
  for (double phi : candidates) {
    const double ll = plugin_log_likelihood(ys, mus, phi);
    if (ll > best_ll) {
      best_ll = ll;
      best_phi = phi;
    }
  }
  return std::clamp(best_phi, bounds.lower, bounds.upper);
}

}  // namespace betaforest
