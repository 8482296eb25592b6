#include "excursion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "excursion/error.hpp"

namespace excursion {

namespace {

// Average ranks divided by n; ties share the mean of their positions.
std::vector<double> pseudo_observations(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank / static_cast<double>(n);
    i = j + 1;
  }
  return out;
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void PairedSample::validate() const {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired sample lengths differ");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw Error(ErrorCode::NonFiniteInput, "paired sample has non-finite entries");
    }
  }
}

double excursion_metric_empirical(const PairedSample& s, const MarginalModel& weight) {
  s.validate();
  if (s.size() == 0) throw Error(ErrorCode::InsufficientData, "empty paired sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += std::abs(weight.cdf(s.b[i]) - weight.cdf(s.a[i]));
  return sum / static_cast<double>(s.size());
}

std::vector<double> delta_curve(const PairedSample& s, std::span<const double> levels) {
  s.validate();
  if (s.size() == 0) throw Error(ErrorCode::InsufficientData, "empty paired sample");
  // Exactly one exceeds u  <=>  min <= u < max.
  std::vector<double> lo(s.size()), hi(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    lo[i] = std::min(s.a[i], s.b[i]);
    hi[i] = std::max(s.a[i], s.b[i]);
  }
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  const double n = static_cast<double>(s.size());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double u : levels) {
    const auto below_lo = std::upper_bound(lo.begin(), lo.end(), u) - lo.begin();
    const auto below_hi = std::upper_bound(hi.begin(), hi.end(), u) - hi.begin();
    out.push_back(static_cast<double>(below_lo - below_hi) / n);
  }
  return out;
}

double excursion_metric_level_integral(const PairedSample& s, const MarginalModel& weight,
                                       std::size_t points) {
  if (points == 0) throw Error(ErrorCode::DomainError, "need at least one quadrature point");
  std::vector<double> levels(points);
  for (std::size_t k = 0; k < points; ++k) {
    levels[k] = weight.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(points));
  }
  const auto delta = delta_curve(s, levels);
  return std::accumulate(delta.begin(), delta.end(), 0.0) / static_cast<double>(points);
}

std::vector<double> empirical_copula_diagonal(const PairedSample& s, std::size_t points) {
  s.validate();
  if (points < 2) throw Error(ErrorCode::DomainError, "copula grid needs >= 2 points");
  const auto u = pseudo_observations(s.a);
  const auto v = pseudo_observations(s.b);
  std::vector<double> m(u.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(u[i], v[i]);
  std::sort(m.begin(), m.end());
  const double n = static_cast<double>(m.size());
  std::vector<double> diag(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(points - 1);
    // Small slack so grid points that coincide with rank/n count as <=.
    const auto count = std::upper_bound(m.begin(), m.end(), x + 1e-12) - m.begin();
    diag[k] = static_cast<double>(count) / n;
  }
  return diag;
}

double gini_empirical(const PairedSample& s) {
  s.validate();
  if (s.size() < 10) throw Error(ErrorCode::InsufficientData, "Gini metric needs at least 10 pairs");
  const auto diag = empirical_copula_diagonal(s, kCopulaGridPoints);
  const double dx = 1.0 / static_cast<double>(diag.size() - 1);
  double integral = 0.0;
  for (std::size_t k = 1; k < diag.size(); ++k) integral += 0.5 * (diag[k - 1] + diag[k]) * dx;
  return std::clamp(1.0 - 2.0 * integral, 0.0, 0.5);
}

MaxExcursion max_excursion_distance_empirical(const PairedSample& s) {
  s.validate();
  if (s.size() == 0) throw Error(ErrorCode::InsufficientData, "empty paired sample");
  const auto diag = empirical_copula_diagonal(s, kCopulaGridPoints);
  std::size_t best = 0;
  double best_gap = -1.0;
  for (std::size_t k = 0; k < diag.size(); ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(diag.size() - 1);
    const double gap = x - diag[k];
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  const double x_star = static_cast<double>(best) / static_cast<double>(diag.size() - 1);
  const auto sorted = sorted_copy(s.a);
  // Empirical quantile (inverse of the step cdf) of Y1 at x*.
  const double pos = std::ceil(x_star * static_cast<double>(sorted.size())) - 1.0;
  const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(sorted.size() - 1)));
  return {2.0 * std::max(0.0, best_gap), sorted[idx], x_star};
}

double wasserstein2_to_uniform(std::span<const double> y) {
  if (y.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
  const auto sorted = sorted_copy(y);
  const double n = static_cast<double>(sorted.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    const double v = sorted[i];
    // integral over [lo, hi] of (v - x)^2 dx
    total += ((v - lo) * (v - lo) * (v - lo) - (v - hi) * (v - hi) * (v - hi)) / 3.0;
  }
  return total;
}

double wasserstein2_to_uniform_max_form(std::span<const double> y, RngStream& rng) {
  if (y.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
  double sq = 0.0, mx = 0.0;
  for (double v : y) {
    sq += v * v;
    mx += std::max(v, y[rng.index(y.size())]);
  }
  const double n = static_cast<double>(y.size());
  return 1.0 / 3.0 + sq / n - mx / n;
}

double wasserstein2_to_uniform_cdf_form(std::span<const double> y, std::size_t points) {
  if (y.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
  const auto sorted = sorted_copy(y);
  const double n = static_cast<double>(sorted.size());
  double integral = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(points);
    const double f = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
    integral += f * (f - 2.0 * x);
  }
  return 1.0 / 3.0 + integral / static_cast<double>(points);
}

double wasserstein2_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  double total = 0.0;
  if (sa.size() == sb.size()) {
    for (std::size_t i = 0; i < sa.size(); ++i) total += (sa[i] - sb[i]) * (sa[i] - sb[i]);
    return std::sqrt(total / static_cast<double>(sa.size()));
  }
  // Common refinement of the two quantile step functions.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double x = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    const double d = sa[i] - sb[j];
    total += d * d * (next - x);
    x = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return std::sqrt(total);
}

double gaussian_copula_diag(double rho, double x) {
  if (!(rho >= -1.0 && rho <= 1.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::DomainError, "need rho in [-1, 1] and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double q = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * x);
  const double upper = std::asin(rho);
  if (upper == 0.0) return x * x;
  // (1 - sin t) / cos^2 t = 1 / (1 + sin t)
  auto f = [q](double t) {
    const double denom = 1.0 + std::sin(t);
    if (denom <= 0.0) return 0.0;
    return std::exp(-q * q / denom);
  };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, upper, 15, 1e-13);
  return std::clamp(x * x + integral / (2.0 * std::numbers::pi), std::max(0.0, 2.0 * x - 1.0), x);
}

double gaussian_gini(double rho) {
  auto f = [rho](double x) { return gaussian_copula_diag(rho, x); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 10, 1e-11);
  return 1.0 - 2.0 * integral;
}

void write_delta_csv(std::ostream& out, std::span<const double> levels, std::span<const double> delta) {
  if (levels.size() != delta.size()) throw Error(ErrorCode::LengthMismatch, "levels and delta differ");
  out << "u,delta\n";
  char buf[64];
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", levels[i], delta[i]);
    out << buf;
  }
}

void write_diagonal_csv(std::ostream& out, std::span<const double> diagonal) {
  out << "x,Cxx\n";
  char buf[64];
  for (std::size_t k = 0; k < diagonal.size(); ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(diagonal.size() - 1);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, diagonal[k]);
    out << buf;
  }
}

}  // namespace excursion
