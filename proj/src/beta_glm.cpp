#include "betaforest/beta_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "betaforest/beta_distribution.hpp"
#include "betaforest/special_functions.hpp"

namespace betaforest {

namespace {

// Keeps both shape parameters positive when x'beta is extreme.
constexpr double kMeanGuard = 1e-12;
constexpr double kMinStartPhi = 0.01;

std::size_t require_feature(const Dataset& data, const std::string& name) {
  const auto j = data.find_feature(name);
  if (!j) {
    throw std::invalid_argument("design references unknown column '" + name + "'");
  }
  return *j;
}

}  // namespace

DesignSpec DesignSpec::intercept_only() {
  return DesignSpec{true, {}, {}};
}

DesignSpec DesignSpec::linear(const Dataset& data) {
  DesignSpec spec;
  for (const auto& col : data.schema()) {
    spec.main_effects.push_back(col.name);
  }
  return spec;
}

Eigen::MatrixXd build_design_matrix(const DesignSpec& design, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.num_rows());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(design.num_columns()));
  Eigen::Index c = 0;
  if (design.intercept) {
    x.col(c++).setOnes();
  }
  for (const auto& name : design.main_effects) {
    const auto col = data.column(require_feature(data, name));
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, c) = col[static_cast<std::size_t>(i)];
    }
    ++c;
  }
  for (const auto& [a, b] : design.interactions) {
    const auto col_a = data.column(require_feature(data, a));
    const auto col_b = data.column(require_feature(data, b));
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, c) = col_a[static_cast<std::size_t>(i)] * col_b[static_cast<std::size_t>(i)];
    }
    ++c;
  }
  return x;
}

LogLikGradient loglik_and_gradient(const Eigen::VectorXd& beta, double log_phi, const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& ys) {
  if (design.cols() != beta.size() || design.rows() != ys.size()) {
    throw std::invalid_argument("loglik_and_gradient: dimension mismatch");
  }
  const double phi = std::exp(log_phi);
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw std::domain_error("loglik_and_gradient: phi out of range");
  }
  const Eigen::VectorXd eta = design * beta;
  const double digamma_phi = digamma(phi);

  LogLikGradient out;
  Eigen::VectorXd weight(ys.size());
  double d_log_phi = 0.0;
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    const double y = ys[i];
    if (!(y > 0.0 && y < 1.0)) {
      throw std::domain_error("loglik_and_gradient: outcome outside (0,1)");
    }
    const double mu = std::clamp(inverse_logit(eta[i]), kMeanGuard, 1.0 - kMeanGuard);
    const double log_y = std::log(y);
    const double log_1my = std::log1p(-y);
    const double psi_a = digamma(mu * phi);
    const double psi_b = digamma((1.0 - mu) * phi);
    out.loglik += log_density(y, BetaParams(mu, phi));
    weight[i] = phi * (psi_b - psi_a + log_y - log_1my) * mu * (1.0 - mu);
    d_log_phi += phi * (digamma_phi - mu * psi_a - (1.0 - mu) * psi_b + mu * log_y + (1.0 - mu) * log_1my);
  }
  out.gradient.resize(beta.size() + 1);
  out.gradient.head(beta.size()) = design.transpose() * weight;
  out.gradient[beta.size()] = d_log_phi;
  return out;
}

BetaGlmFit fit_beta_glm(const Dataset& data, const DesignSpec& design, const GlmOptions& options) {
  const auto y_span = data.outcome();
  const Eigen::MatrixXd x = build_design_matrix(design, data);
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (k == 0) {
    throw std::invalid_argument("fit_beta_glm: design has no columns");
  }
  if (n < k + 1) {
    throw std::invalid_argument("fit_beta_glm: " + std::to_string(n) + " rows cannot identify " +
                                std::to_string(k) + " coefficients plus precision");
  }
  const Eigen::VectorXd ys = Eigen::Map<const Eigen::VectorXd>(y_span.data(), n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k) {
    throw std::invalid_argument("fit_beta_glm: rank-deficient design (rank " + std::to_string(qr.rank()) + " < " +
                                std::to_string(k) + " columns); maximum likelihood is not identified");
  }
  Eigen::VectorXd logit_y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    logit_y[i] = transform(ys[i], TransformKind::logit);
  }

  Eigen::VectorXd theta(k + 1);
  theta.head(k) = qr.solve(logit_y);
  theta[k] = std::log(std::max(estimate_node_params(y_span).phi(), kMinStartPhi));

  // Minimize the negative log-likelihood; invalid points count as +inf.
  auto evaluate = [&](const Eigen::VectorXd& t, double& f, Eigen::VectorXd& g) {
    try {
      LogLikGradient lg = loglik_and_gradient(t.head(k), t[k], x, ys);
      if (!std::isfinite(lg.loglik) || !lg.gradient.allFinite()) {
        return false;
      }
      f = -lg.loglik;
      g = -lg.gradient;
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };

  BetaGlmFit fit;
  fit.design = design;
  double f = 0.0;
  Eigen::VectorXd g;
  if (!evaluate(theta, f, g)) {
    throw std::runtime_error("fit_beta_glm: log-likelihood is not finite at the starting point");
  }
  fit.trace.push_back(-f);

  const Eigen::Index dim = k + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  constexpr double kArmijo = 1e-4;
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    bool accepted = false;
    Eigen::VectorXd step;
    double f_new = 0.0;
    Eigen::VectorXd g_new;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd direction = -(h * g);
      double slope = g.dot(direction);
      if (attempt == 1 || !(slope < 0.0)) {
        h.setIdentity();
        scaled = false;
        direction = -g / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        slope = g.dot(direction);
      }
      double t = 1.0;
      for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
        const Eigen::VectorXd candidate = theta + t * direction;
        if (!evaluate(candidate, f_new, g_new)) {
          continue;
        }
        // Near the optimum the change in f drops below its rounding error.
        // There the step is judged by the directional derivative instead:
        // |g_new'd| <= 0.9 |g'd| means the (locally quadratic) objective
        // decreased along the step.
        const bool flat = std::abs(f_new - f) <= 1e-10 * (1.0 + std::abs(f)) &&
                          std::abs(g_new.dot(direction)) <= 0.9 * std::abs(slope);
        if (f_new <= f + kArmijo * t * slope || flat) {
          step = t * direction;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      break;
    }

    const Eigen::VectorXd yk = g_new - g;
    const double sy = step.dot(yk);
    if (sy > 1e-12 * step.norm() * yk.norm()) {
      if (!scaled) {
        h *= sy / yk.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * yk;
      // BFGS inverse-Hessian update.
      h += rho * rho * (yk.dot(hy) + sy) * (step * step.transpose()) - rho * (hy * step.transpose() + step * hy.transpose());
    }
    theta += step;
    f = f_new;
    g = g_new;
    fit.trace.push_back(-f);
  }
  if (!fit.converged && g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
    fit.converged = true;
  }

  fit.beta = theta.head(k);
  fit.phi = std::exp(theta[k]);
  fit.loglik = -f;
  fit.iterations = iter;
  fit.gradient_norm = g.lpNorm<Eigen::Infinity>();
  return fit;
}

std::vector<double> predict_mean_glm(const BetaGlmFit& fit, const Dataset& data) {
  const Eigen::MatrixXd x = build_design_matrix(fit.design, data);
  if (x.cols() != fit.beta.size()) {
    throw std::invalid_argument("predict_mean_glm: design does not match the fitted coefficients");
  }
  const Eigen::VectorXd eta = x * fit.beta;
  std::vector<double> out(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    out[static_cast<std::size_t>(i)] = std::clamp(inverse_logit(eta[i]), kMeanGuard, 1.0 - kMeanGuard);
  }
  return out;
}

}  // namespace betaforest
