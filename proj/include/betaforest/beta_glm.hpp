#ifndef BETAFOREST_BETA_GLM_HPP
#define BETAFOREST_BETA_GLM_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "betaforest/dataset.hpp"

namespace betaforest {

/// Columns of a beta regression design: optional intercept, main effects,
/// and pairwise products of raw feature values. Features are named so a
/// design can be applied to any dataset with matching column names.
struct DesignSpec {
  bool intercept = true;
  std::vector<std::string> main_effects;
  std::vector<std::pair<std::string, std::string>> interactions;

  std::size_t num_columns() const { return (intercept ? 1 : 0) + main_effects.size() + interactions.size(); }
  bool operator==(const DesignSpec&) const = default;

  static DesignSpec intercept_only();
  /// Intercept plus every feature of the dataset as a main effect.
  static DesignSpec linear(const Dataset& data);
};

/// n x k design matrix. Throws std::invalid_argument for unknown columns.
Eigen::MatrixXd build_design_matrix(const DesignSpec& design, const Dataset& data);

struct LogLikGradient {
  double loglik = 0.0;
  /// d loglik / d beta followed by d loglik / d ln(phi).
  Eigen::VectorXd gradient;
};

/// Beta log-likelihood of a logit-link mean model with constant precision,
/// and its analytic gradient in (beta, ln phi).
LogLikGradient loglik_and_gradient(const Eigen::VectorXd& beta, double log_phi, const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& ys);

struct GlmOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

struct BetaGlmFit {
  DesignSpec design;
  Eigen::VectorXd beta;
  double phi = 1.0;
  bool converged = false;
  double loglik = 0.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  /// Log-likelihood after every accepted step, starting with the initial
  /// point.
  std::vector<double> trace;
};

/// Maximum likelihood by BFGS on (beta, ln phi) with backtracking line
/// search. Starts from least squares of logit(y) on the design and the
/// pooled moment estimate of phi (at least 0.01). Throws
/// std::invalid_argument for rank-deficient designs or too few rows.
BetaGlmFit fit_beta_glm(const Dataset& data, const DesignSpec& design, const GlmOptions& options = {});

/// inverse-logit(x' beta) per row, kept 1e-12 away from 0 and 1.
std::vector<double> predict_mean_glm(const BetaGlmFit& fit, const Dataset& data);

}  // namespace betaforest

#endif  // BETAFOREST_BETA_GLM_HPP
