#include "betaforest/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace betaforest {

namespace {

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kEulerGamma = 0.57721566490153286060651209;

// Lanczos loses relative accuracy next to the zeros of ln Gamma at 1 and 2,
// so |x - 1| <= kSeriesRadius uses the Taylor series of ln Gamma(1 + z).
constexpr double kSeriesRadius = 0.25;
constexpr int kSeriesTerms = 40;

struct ZetaTable {
  std::array<double, kSeriesTerms + 1> values{};

  ZetaTable() {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    values[2] = pi2 / 6.0;
    values[3] = 1.202056903159594285399738;
    values[4] = pi2 * pi2 / 90.0;
    values[5] = 1.036927755143369926331365;
    values[6] = pi2 * pi2 * pi2 / 945.0;
    values[7] = 1.008349277381922826839798;
    values[8] = pi2 * pi2 * pi2 * pi2 / 9450.0;
    values[9] = 1.002008392826082214417853;
    for (int k = 10; k <= kSeriesTerms; ++k) {
      double sum = 0.0;
      for (int n = 100; n >= 2; --n) {
        sum += std::pow(static_cast<double>(n), -k);
      }
      values[k] = 1.0 + sum;
    }
  }
};

const ZetaTable& zeta_table() {
  static const ZetaTable table;
  return table;
}

// ln Gamma(1 + z) = -gamma z + sum_{k>=2} (-1)^k zeta(k) z^k / k, |z| < 1.
double log_gamma_1p_series(double z) {
  const auto& zeta = zeta_table().values;
  double sum = 0.0;
  double power = z * z;
  for (int k = 2; k <= kSeriesTerms; ++k) {
    const double term = zeta[k] * power / k;
    sum += (k % 2 == 0) ? term : -term;
    power *= z;
  }
  return -kEulerGamma * z + sum;
}

double log_gamma_lanczos(double x) {
  const double z = x - 1.0;
  double a = kLanczosCoef[0];
  for (std::size_t k = 1; k < kLanczosCoef.size(); ++k) {
    a += kLanczosCoef[k] / (z + static_cast<double>(k));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double log_gamma_positive(double x) {
  if (std::abs(x - 1.0) <= kSeriesRadius) {
    return log_gamma_1p_series(x - 1.0);
  }
  if (std::abs(x - 2.0) <= kSeriesRadius) {
    const double z = x - 2.0;
    return std::log1p(z) + log_gamma_1p_series(z);
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma_positive(1.0 - x);
  }
  return log_gamma_lanczos(x);
}

void require_unit_interval(double y, const char* what) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error(std::string(what) + ": value must lie in (0,1), got " + std::to_string(y));
  }
}

}  // namespace

double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("log_gamma: argument must be positive and finite, got " + std::to_string(x));
  }
  return log_gamma_positive(x);
}

double log_gamma_correction(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("log_gamma_correction: argument must be positive and finite, got " + std::to_string(x));
  }
  if (x < 10.0) {
    return log_gamma_positive(x) - ((x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi));
  }
  // Asymptotic series; the first omitted term is below 1e-17 at x = 10.
  constexpr std::array<double, 7> coef = {1.0 / 12.0,  -1.0 / 360.0,          1.0 / 1260.0, -1.0 / 1680.0,
                                          1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0};
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double sum = 0.0;
  for (std::size_t k = coef.size(); k-- > 0;) {
    sum = sum * inv2 + coef[k];
  }
  return sum * inv;
}

double digamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("digamma: argument must be positive and finite, got " + std::to_string(x));
  }
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic expansion with Bernoulli numbers B2..B14.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double inverse_logit(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double transform(double y, TransformKind kind) {
  require_unit_interval(y, "transform");
  switch (kind) {
    case TransformKind::identity:
      return y;
    case TransformKind::logit:
      return std::log(y) - std::log1p(-y);
    case TransformKind::arcsine_sqrt:
      return std::asin(std::sqrt(y));
  }
  throw std::logic_error("transform: unknown kind");
}

double inverse_transform(double t, TransformKind kind) {
  switch (kind) {
    case TransformKind::identity:
      return t;
    case TransformKind::logit:
      return inverse_logit(t);
    case TransformKind::arcsine_sqrt: {
      const double s = std::sin(t);
      return s * s;
    }
  }
  throw std::logic_error("inverse_transform: unknown kind");
}

double log_jacobian(double y, TransformKind kind) {
  require_unit_interval(y, "log_jacobian");
  switch (kind) {
    case TransformKind::identity:
      return 0.0;
    case TransformKind::logit:
      return -(std::log(y) + std::log1p(-y));
    case TransformKind::arcsine_sqrt:
      return -(std::log(2.0) + 0.5 * (std::log(y) + std::log1p(-y)));
  }
  throw std::logic_error("log_jacobian: unknown kind");
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity:
      return "none";
    case TransformKind::logit:
      return "logit";
    case TransformKind::arcsine_sqrt:
      return "asin";
  }
  return "?";
}

TransformKind parse_transform(std::string_view name) {
  if (name == "none" || name == "identity") return TransformKind::identity;
  if (name == "logit") return TransformKind::logit;
  if (name == "asin" || name == "arcsine_sqrt") return TransformKind::arcsine_sqrt;
  throw std::invalid_argument("unknown transform '" + std::string(name) + "' (expected none, logit or asin)");
}

}  // namespace betaforest
