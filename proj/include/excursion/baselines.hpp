#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "excursion/objective.hpp"

namespace excursion {

/// Second-order structure of (X(t), X(T_f)).
struct GaussianSecondOrder {
  Eigen::MatrixXd cov;
  Eigen::VectorXd cross;
  double target_variance = 1.0;

  /// Throws SingularCovariance / DomainError.
  void validate() const;
};

/// Exponential covariance C(t) = exp(-|t| / 2).
GaussianSecondOrder covariances_exp(const ForecastDesign& design);

/// sigma_t * Sigma^{-1} c / sqrt(c' Sigma^{-1} c).
std::vector<double> exact_excursion_weights(const GaussianSecondOrder& so);

/// Sigma^{-1} c.
std::vector<double> simple_kriging_weights(const GaussianSecondOrder& so);

/// lambda' c / sqrt(lambda' Sigma lambda * sigma_t^2).
double predictor_correlation(const GaussianSecondOrder& so, std::span<const double> lambda);

}  // namespace excursion
