#include "excursion/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "excursion/error.hpp"

namespace excursion {

namespace {

Eigen::VectorXd solve_spd(const GaussianSecondOrder& so) {
  so.validate();
  const Eigen::LLT<Eigen::MatrixXd> llt(so.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
  return llt.solve(so.cross);
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void GaussianSecondOrder::validate() const {
  const auto n = cov.rows();
  if (n == 0 || cov.cols() != n || cross.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "covariance and cross-covariance shapes differ");
  }
  if (!cov.allFinite() || !cross.allFinite() || !std::isfinite(target_variance)) {
    throw Error(ErrorCode::NonFiniteInput, "second-order structure is not finite");
  }
  if (!(target_variance > 0)) throw Error(ErrorCode::DomainError, "target variance must be > 0");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::SingularCovariance, "covariance is not symmetric");
  }
}

GaussianSecondOrder covariances_exp(const ForecastDesign& design) {
  const auto n = static_cast<Eigen::Index>(design.size());
  if (n == 0) throw Error(ErrorCode::InvalidGrid, "empty forecast sample");
  GaussianSecondOrder so;
  so.cov.resize(n, n);
  so.cross.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = design.forecast_offsets[static_cast<std::size_t>(i)];
    so.cross(i) = std::exp(-std::abs(design.target - ti) / 2.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      so.cov(i, j) = std::exp(-std::abs(ti - design.forecast_offsets[static_cast<std::size_t>(j)]) / 2.0);
    }
  }
  so.target_variance = 1.0;
  return so;
}

std::vector<double> exact_excursion_weights(const GaussianSecondOrder& so) {
  const Eigen::VectorXd w = solve_spd(so);
  const double quad = so.cross.dot(w);
  if (!(quad > 0)) throw Error(ErrorCode::SingularCovariance, "c' Sigma^{-1} c is not positive");
  return to_vector(w * (std::sqrt(so.target_variance) / std::sqrt(quad)));
}

std::vector<double> simple_kriging_weights(const GaussianSecondOrder& so) { return to_vector(solve_spd(so)); }

double predictor_correlation(const GaussianSecondOrder& so, std::span<const double> lambda) {
  so.validate();
  if (lambda.size() != static_cast<std::size_t>(so.cross.size())) {
    throw Error(ErrorCode::LengthMismatch, "weights have wrong dimension");
  }
  const Eigen::Map<const Eigen::VectorXd> l(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  const double var = l.dot(so.cov * l);
  if (!(var > 0)) throw Error(ErrorCode::DegenerateData, "predictor has zero variance");
  return std::clamp(l.dot(so.cross) / std::sqrt(var * so.target_variance), -1.0, 1.0);
}

}  // namespace excursion
