#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "excursion/rng.hpp"

namespace excursion {

enum class Family { Gaussian, Cauchy, Levy, AlphaStableSymmetric, StudentT };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// Parametric marginal law. Doubles as the weighting measure of the
/// excursion metric (its cdf supplies the excursion-level distribution).
///
/// Parameters by family:
///   Gaussian              mu, sigma > 0
///   Cauchy                mu, sigma > 0
///   Levy                  c > 0, support (0, inf)
///   AlphaStableSymmetric  alpha in (0, 2), sigma > 0
///   StudentT              mu, sigma > 0, nu > 0 (real)
class MarginalModel {
 public:
  static MarginalModel gaussian(double mu, double sigma);
  static MarginalModel cauchy(double mu, double sigma);
  static MarginalModel levy(double c);
  static MarginalModel alpha_stable_symmetric(double alpha, double sigma);
  static MarginalModel student_t(double mu, double sigma, double nu);

  Family family() const noexcept { return family_; }
  /// Parameter vector in the order listed above.
  const std::vector<double>& params() const noexcept { return params_; }
  /// Parameter names matching params().
  std::vector<std::string> param_names() const;

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double p) const;
  std::vector<double> sample(RngStream& rng, std::size_t count) const;
  double sample_one(RngStream& rng) const;

  /// Open support interval (lower, upper); infinite ends are +-inf.
  std::pair<double, double> support() const;

  friend bool operator==(const MarginalModel&, const MarginalModel&) = default;

 private:
  MarginalModel(Family family, std::vector<double> params);
  Family family_;
  std::vector<double> params_;
};

/// Quantile-matching plug-in estimate of `family` from data (length >= 50).
MarginalModel estimate(Family family, std::span<const double> data);

nlohmann::json marginal_to_json(const MarginalModel& model);
/// Parses {"family": "...", "params": {name: number}}; throws ConfigError.
MarginalModel marginal_from_json(const nlohmann::json& j);

}  // namespace excursion

template <>
struct nlohmann::adl_serializer<excursion::MarginalModel> {
  static excursion::MarginalModel from_json(const json& j) { return excursion::marginal_from_json(j); }
  static void to_json(json& j, const excursion::MarginalModel& m) { j = excursion::marginal_to_json(m); }
};
