#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "excursion/distributions.hpp"
#include "excursion/rng.hpp"

namespace excursion {

/// Paired realizations (a_i, b_i) of (Y1, Y2).
struct PairedSample {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t size() const noexcept { return a.size(); }
  /// Throws LengthMismatch / NonFiniteInput.
  void validate() const;
};

/// Grid used for the empirical copula diagonal.
inline constexpr std::size_t kCopulaGridPoints = 512;

/// Mean of |F_U(b_i) - F_U(a_i)| with F_U the weight's cdf.
double excursion_metric_empirical(const PairedSample& s, const MarginalModel& weight);

/// Integral of the empirical delta curve against the weight law, by the
/// midpoint rule on `points` equiprobable levels of the weight.
double excursion_metric_level_integral(const PairedSample& s, const MarginalModel& weight,
                                       std::size_t points = 2000);

/// Fraction of pairs with exactly one coordinate above u, per level.
std::vector<double> delta_curve(const PairedSample& s, std::span<const double> levels);

/// 1 - 2 * integral of the empirical copula diagonal; in [0, 1/2].
double gini_empirical(const PairedSample& s);

/// Empirical copula diagonal C(x, x) on the fixed grid x_k = k / (points - 1).
std::vector<double> empirical_copula_diagonal(const PairedSample& s,
                                              std::size_t points = kCopulaGridPoints);

struct MaxExcursion {
  double value;
  /// Maximizing excursion level in the units of the data.
  double level;
  /// Maximizing copula level x*.
  double probability;
};

/// 2 * max_x (x - C(x, x)) over the copula grid, with the argmax mapped back
/// to the data through the empirical quantile of `a`.
MaxExcursion max_excursion_distance_empirical(const PairedSample& s);

/// Squared 2-Wasserstein distance between the empirical law of y (values in
/// [0, 1]) and U(0, 1), integrated exactly over the order statistics.
double wasserstein2_to_uniform(std::span<const double> y);

/// 1/3 + mean(y^2) - mean(max(y_i, y_J)) with J an independent resample.
double wasserstein2_to_uniform_max_form(std::span<const double> y, RngStream& rng);

/// 1/3 + integral_0^1 F(y) (F(y) - 2y) dy with F the empirical cdf of y, by
/// midpoint quadrature on `points` nodes.
double wasserstein2_to_uniform_cdf_form(std::span<const double> y, std::size_t points = 20000);

/// 2-Wasserstein distance (not squared) between two empirical laws.
double wasserstein2_samples(std::span<const double> a, std::span<const double> b);

/// Diagonal C(x, x) of the bivariate Gaussian copula with correlation rho.
double gaussian_copula_diag(double rho, double x);

/// 1 - 2 * integral of gaussian_copula_diag(rho, .); the Gini metric of a
/// bivariate normal pair.
double gaussian_gini(double rho);

/// CSV exports: "u,delta" and "x,Cxx".
void write_delta_csv(std::ostream& out, std::span<const double> levels, std::span<const double> delta);
void write_diagonal_csv(std::ostream& out, std::span<const double> diagonal);

}  // namespace excursion
