#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "excursion/error.hpp"
#include "excursion/metrics.hpp"

using namespace excursion;

namespace {

PairedSample gaussian_pairs(double rho, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  PairedSample s;
  s.a.resize(n);
  s.b.resize(n);
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    s.a[i] = rng.normal();
    s.b[i] = rho * s.a[i] + c * rng.normal();
  }
  return s;
}

// P(Y1 <= q, Y2 <= q) for a standard bivariate normal, via Owen's T.
double orthant_cdf(double rho, double x) {
  const double q = boost::math::quantile(boost::math::normal(), x);
  return x - 2.0 * boost::math::owens_t(q, std::sqrt((1.0 - rho) / (1.0 + rho)));
}

// Squared W2 to U(0,1) of the empirical law, integrating each quantile step exactly.
double w2_uniform_oracle(std::vector<double> y) {
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(y.size());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    total += (std::pow(hi - y[i], 3) - std::pow(lo - y[i], 3)) / 3.0;
  }
  return total;
}

const auto kStdNormal = MarginalModel::gaussian(0.0, 1.0);

}  // namespace

TEST_CASE("excursion metric examples") {
  auto s = gaussian_pairs(0.3, 5000, 1);
  PairedSample same{s.a, s.a};
  CHECK(excursion_metric_empirical(same, MarginalModel::cauchy(0, 1)) == 0.0);

  const auto ind = gaussian_pairs(0.0, 1000000, 2);
  CHECK(std::abs(excursion_metric_empirical(ind, kStdNormal) - 1.0 / 3.0) < 0.002);

  PairedSample anti;
  anti.a = ind.a;
  for (double v : anti.a) anti.b.push_back(-v);
  CHECK(std::abs(excursion_metric_empirical(anti, kStdNormal) - 0.5) < 0.002);

  PairedSample bad{{1.0, 2.0}, {1.0}};
  CHECK_THROWS_AS(excursion_metric_empirical(bad, kStdNormal), Error);
  PairedSample nan{{1.0, std::nan("")}, {1.0, 2.0}};
  CHECK_THROWS_AS(excursion_metric_empirical(nan, kStdNormal), Error);
}

TEST_CASE("delta curve examples") {
  const auto ind = gaussian_pairs(0.0, 1000000, 3);
  const std::vector<double> zero{0.0};
  CHECK(std::abs(delta_curve(ind, zero)[0] - 0.5) < 0.005);

  PairedSample same{ind.a, ind.a};
  const std::vector<double> levels{-2.0, -0.5, 0.0, 0.7, 3.0};
  for (double d : delta_curve(same, levels)) CHECK(d == 0.0);

  const double below = *std::min_element(ind.a.begin(), ind.a.end()) - 1.0;
  const double lower = std::min(below, *std::min_element(ind.b.begin(), ind.b.end()) - 1.0);
  CHECK(delta_curve(ind, std::vector<double>{lower})[0] == 0.0);

  for (double d : delta_curve(gaussian_pairs(0.4, 2000, 4), levels)) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("gini examples") {
  const std::size_t n = 100000;
  auto s = gaussian_pairs(0.0, n, 5);
  PairedSample como{s.a, {}};
  for (double v : s.a) como.b.push_back(std::exp(v));
  CHECK(gini_empirical(como) < 2.0 / n);

  PairedSample counter{s.a, {}};
  for (double v : s.a) counter.b.push_back(-v * v * v);
  CHECK(std::abs(gini_empirical(counter) - 0.5) < 2.0 / n);

  const auto ind = gaussian_pairs(0.0, 1000000, 6);
  CHECK(std::abs(gini_empirical(ind) - 1.0 / 3.0) < 0.002);

  PairedSample few{{1, 2, 3}, {3, 2, 1}};
  CHECK_THROWS_AS(gini_empirical(few), Error);
}

TEST_CASE("gini on tied data stays in range") {
  PairedSample ties;
  for (int i = 0; i < 200; ++i) {
    ties.a.push_back(i % 3);
    ties.b.push_back((i * 7) % 5);
  }
  const double g = gini_empirical(ties);
  CHECK(g >= 0.0);
  CHECK(g <= 0.5);
}

TEST_CASE("max excursion distance") {
  auto s = gaussian_pairs(0.0, 1000000, 7);
  const auto ind = max_excursion_distance_empirical(s);
  CHECK(std::abs(ind.value - 0.5) < 0.01);
  CHECK(std::abs(ind.probability - 0.5) < 0.05);

  PairedSample como{s.a, s.a};
  CHECK(max_excursion_distance_empirical(como).value < 0.01);

  auto g = gaussian_pairs(0.6, 1000000, 8);
  for (auto& v : g.a) v += 2.0;
  for (auto& v : g.b) v += 2.0;
  CHECK(std::abs(max_excursion_distance_empirical(g).level - 2.0) < 0.1);
}

TEST_CASE("wasserstein distance to uniform") {
  RngStream rng(9, 0);
  std::vector<double> u(1000000);
  for (auto& v : u) v = rng.uniform();
  CHECK(wasserstein2_to_uniform(u) < 1e-5);

  const std::vector<double> zeros(1000, 0.0);
  CHECK(wasserstein2_to_uniform(zeros) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  for (std::size_t n : {1u, 2u, 7u, 50u}) {
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform() * rng.uniform();
    CHECK(wasserstein2_to_uniform(y) == doctest::Approx(w2_uniform_oracle(y)).epsilon(1e-12));
  }

  std::vector<double> y(100000);
  for (auto& v : y) v = std::pow(rng.uniform(), 2.0);
  const double exact = wasserstein2_to_uniform(y);
  RngStream mc(10, 0);
  CHECK(std::abs(wasserstein2_to_uniform_max_form(y, mc) - exact) < 0.005);
  CHECK(std::abs(wasserstein2_to_uniform_cdf_form(y) - exact) < 0.005);
  CHECK_THROWS_AS(wasserstein2_to_uniform(std::vector<double>{}), Error);
}

TEST_CASE("wasserstein distance between samples") {
  RngStream rng(11, 0);
  std::vector<double> a(100000), shifted, wide(100000);
  for (auto& v : a) v = rng.normal();
  for (double v : a) shifted.push_back(v + 1.0);
  for (auto& v : wide) v = 2.0 * rng.normal();
  CHECK(wasserstein2_samples(a, a) == 0.0);
  CHECK(std::abs(wasserstein2_samples(a, shifted) - 1.0) < 0.01);
  CHECK(std::abs(wasserstein2_samples(a, wide) - 1.0) < 0.02);

  const std::vector<double> two{0.0, 1.0}, three{0.0, 0.5, 1.0};
  CHECK(wasserstein2_samples(two, three) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));
  CHECK(wasserstein2_samples(three, two) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));
}

TEST_CASE("gaussian copula diagonal") {
  for (double x : {0.1, 0.3, 0.5, 0.9}) CHECK(gaussian_copula_diag(0.0, x) == doctest::Approx(x * x).epsilon(1e-10));
  CHECK(std::abs(gaussian_copula_diag(1.0, 0.3) - 0.3) < 1e-9);
  CHECK(std::abs(gaussian_copula_diag(0.999999, 0.3) - 0.3) < 1e-3);
  CHECK(gaussian_copula_diag(0.5, 0.5) ==
        doctest::Approx(0.25 + std::asin(0.5) / (2.0 * std::numbers::pi)).epsilon(1e-10));
  for (double rho : {-0.8, -0.3, 0.2, 0.7, 0.95}) {
    for (double x : {0.05, 0.2, 0.5, 0.8, 0.97}) {
      CAPTURE(rho);
      CAPTURE(x);
      CHECK(gaussian_copula_diag(rho, x) == doctest::Approx(orthant_cdf(rho, x)).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(gaussian_copula_diag(1.5, 0.5), Error);
  CHECK_THROWS_AS(gaussian_copula_diag(0.5, -0.1), Error);

  RngStream rng(12, 0);
  std::size_t both = 0;
  const std::size_t n = 10000000;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.normal();
    const double w = 0.5 * z + std::sqrt(0.75) * rng.normal();
    both += (z <= 0.0 && w <= 0.0);
  }
  CHECK(std::abs(static_cast<double>(both) / n - gaussian_copula_diag(0.5, 0.5)) < 0.001);
}

TEST_CASE("gaussian gini oracle") {
  for (double rho : {-0.5, 0.0, 0.5, 0.9}) {
    CAPTURE(rho);
    auto f = [&](double x) { return orthant_cdf(rho, x); };
    const double oracle =
        1.0 - 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-12);
    CHECK(gaussian_gini(rho) == doctest::Approx(oracle).epsilon(1e-7));
    const auto s = gaussian_pairs(rho, 1000000, 13 + static_cast<std::uint64_t>(10 * (rho + 1.0)));
    CHECK(std::abs(gini_empirical(s) - oracle) < 0.003);
  }
  CHECK(gaussian_gini(0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("excursion metric axioms") {
  RngStream rng(20, 0);
  const std::size_t n = 100000;
  const auto weight = MarginalModel::cauchy(0.0, 1.5);
  std::size_t violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double r12 = 2.0 * rng.uniform() - 1.0, r3 = 2.0 * rng.uniform() - 1.0;
    std::vector<double> y1(n), y2(n), y3(n);
    for (std::size_t i = 0; i < n; ++i) {
      y1[i] = rng.normal();
      y2[i] = r12 * y1[i] + std::sqrt(1.0 - r12 * r12) * rng.normal();
      y3[i] = r3 * y2[i] + std::sqrt(1.0 - r3 * r3) * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    }
    const double d12 = excursion_metric_empirical({y1, y2}, weight);
    const double d21 = excursion_metric_empirical({y2, y1}, weight);
    const double d23 = excursion_metric_empirical({y2, y3}, weight);
    const double d13 = excursion_metric_empirical({y1, y3}, weight);
    CHECK(d12 == d21);
    if (d13 > d12 + d23 + 0.01) ++violations;
    CHECK(excursion_metric_empirical({y3, y3}, weight) == 0.0);
    for (double d : {d12, d23, d13}) {
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("pointwise and level-integral forms agree") {
  RngStream rng(21, 0);
  const std::vector<MarginalModel> weights{kStdNormal, MarginalModel::cauchy(0.5, 2.0),
                                           MarginalModel::student_t(0.0, 1.0, 3.0)};
  for (int trial = 0; trial < 10; ++trial) {
    const double rho = 2.0 * rng.uniform() - 1.0;
    auto s = gaussian_pairs(rho, 100000, 100 + static_cast<std::uint64_t>(trial));
    for (auto& v : s.b) v = v * (1.0 + trial * 0.2) + 0.1 * trial;
    const auto& w = weights[static_cast<std::size_t>(trial) % weights.size()];
    CHECK(std::abs(excursion_metric_empirical(s, w) - excursion_metric_level_integral(s, w, 2000)) < 0.005);
  }
}

TEST_CASE("gini is distribution free") {
  const std::size_t n = 100000;
  for (double rho : {-0.7, 0.1, 0.8}) {
    auto s = gaussian_pairs(rho, n, 30);
    const double g = gini_empirical(s);
    PairedSample t;
    for (double v : s.a) t.a.push_back(std::exp(v));
    for (double v : s.b) t.b.push_back(std::atan(v) + v * v * v);
    CHECK(std::abs(gini_empirical(t) - g) <= 2.0 / n);
    CHECK(g >= 0.0);
    CHECK(g <= 0.5 + 2.0 / n);
  }
}

TEST_CASE("copula diagonal and csv exports") {
  const auto s = gaussian_pairs(0.2, 1000, 40);
  const auto diag = empirical_copula_diagonal(s, 11);
  REQUIRE(diag.size() == 11);
  CHECK(diag.front() == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(diag.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < diag.size(); ++i) CHECK(diag[i] >= diag[i - 1]);

  std::ostringstream a, b;
  write_diagonal_csv(a, diag);
  CHECK(a.str().rfind("x,Cxx\n", 0) == 0);
  const std::vector<double> levels{0.0, 1.0};
  write_delta_csv(b, levels, delta_curve(s, levels));
  const std::string text = b.str();
  CHECK(text.rfind("u,delta\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK_THROWS_AS(write_delta_csv(b, levels, std::vector<double>{1.0}), Error);
}
