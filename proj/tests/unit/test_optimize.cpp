#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "excursion/error.hpp"
#include "excursion/optimize.hpp"

using namespace excursion;

namespace {

// f(lambda) = mean_j |lambda - c_j|^2 / 2, minimized at the mean of the c_j.
class Quadratic final : public DescentProblem {
 public:
  Quadratic(std::vector<std::vector<double>> centers) : c_(std::move(centers)) {}
  std::size_t dimension() const override { return c_[0].size(); }
  std::size_t rows() const override { return c_.size(); }
  double value(std::span<const double> w, RngStream&) const override {
    double total = 0.0;
    for (const auto& c : c_) {
      for (std::size_t i = 0; i < w.size(); ++i) total += 0.5 * (w[i] - c[i]) * (w[i] - c[i]);
    }
    return total / static_cast<double>(c_.size());
  }
  std::vector<double> row_subgradient(std::span<const double> w, std::size_t j, RngStream&) const override {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = w[i] - c_[j][i];
    return g;
  }
  std::vector<double> mean_subgradient(std::span<const double> w, RngStream& rng) const override {
    std::vector<double> g(w.size(), 0.0);
    for (std::size_t j = 0; j < c_.size(); ++j) {
      const auto r = row_subgradient(w, j, rng);
      for (std::size_t i = 0; i < w.size(); ++i) g[i] += r[i] / static_cast<double>(c_.size());
    }
    return g;
  }
  std::vector<double> minimizer() const {
    std::vector<double> m(dimension(), 0.0);
    for (const auto& c : c_) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += c[i] / static_cast<double>(c_.size());
    }
    return m;
  }

 private:
  std::vector<std::vector<double>> c_;
};

// Constant subgradient field; value is the first coordinate.
class Constant final : public DescentProblem {
 public:
  Constant(std::vector<double> g) : g_(std::move(g)) {}
  std::size_t dimension() const override { return g_.size(); }
  std::size_t rows() const override { return 5; }
  double value(std::span<const double> w, RngStream&) const override { return w[0]; }
  std::vector<double> row_subgradient(std::span<const double>, std::size_t, RngStream&) const override { return g_; }
  std::vector<double> mean_subgradient(std::span<const double>, RngStream&) const override { return g_; }

 private:
  std::vector<double> g_;
};

class Exploding final : public DescentProblem {
 public:
  std::size_t dimension() const override { return 2; }
  std::size_t rows() const override { return 3; }
  double value(std::span<const double> w, RngStream&) const override { return w[0]; }
  std::vector<double> row_subgradient(std::span<const double> w, std::size_t, RngStream&) const override {
    return {-1e300 * (1.0 + std::abs(w[0])), 0.0};
  }
  std::vector<double> mean_subgradient(std::span<const double> w, RngStream& rng) const override {
    return row_subgradient(w, 0, rng);
  }
};

LearningSamples iid_samples(std::size_t rows, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  LearningSamples s;
  s.dimension = n;
  for (std::size_t j = 0; j < rows; ++j) {
    double y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.normal();
      s.design.push_back(x);
      y += x / static_cast<double>(n);
    }
    s.y.push_back(y + 0.3 * rng.normal());
    s.shifts.push_back(static_cast<double>(j));
  }
  return s;
}

}  // namespace

TEST_CASE("projection examples and idempotence") {
  const std::vector<double> v{3.0, 4.0};
  CHECK(project(Constraint::unconstrained(), v) == v);
  CHECK(project(Constraint::non_negative(), std::vector<double>{-1.0, 2.0}) == std::vector<double>{0.0, 2.0});
  const auto ball = project(Constraint::ball(1.0), v);
  CHECK(ball[0] == doctest::Approx(0.6));
  CHECK(ball[1] == doctest::Approx(0.8));
  CHECK(project(Constraint::ball(10.0), v) == v);

  RngStream rng(1, 0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> w(4);
    for (auto& x : w) x = 5.0 * rng.normal();
    for (const auto& c : {Constraint::unconstrained(), Constraint::non_negative(), Constraint::ball(2.5)}) {
      const auto once = project(c, w);
      CHECK(project(c, once) == once);
    }
  }
}

TEST_CASE("config validation and step schedule") {
  DescentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.step_size(1) == doctest::Approx(10.0 * std::pow(11.0, -0.7)));
  auto bad = cfg;
  bad.beta = 0.4;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("descent.beta"), ConfigError);
  bad = cfg;
  bad.a = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("descent.a"), ConfigError);
  bad = cfg;
  bad.burn_in = 300;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("descent.burn_in"), ConfigError);
  bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.constraint = Constraint::ball(-1.0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(selection_from_string("polyak_ruppert") == Selection::PolyakRuppert);
  CHECK(descent_mode_from_string("batch") == DescentMode::Batch);
  CHECK(constraint_kind_from_string("ball") == Constraint::Kind::Ball);
  CHECK_THROWS_AS(selection_from_string("best"), Error);
}

TEST_CASE("zero subgradient field keeps the start") {
  const Constant zero({0.0, 0.0, 0.0});
  const std::vector<double> start{0.2, -0.4, 1.5};
  for (auto mode : {DescentMode::Online, DescentMode::Batch}) {
    for (auto sel : {Selection::LastIterate, Selection::PolyakRuppert, Selection::BestObjective}) {
      DescentConfig cfg;
      cfg.mode = mode;
      cfg.selection = sel;
      RngStream rng(2, 0);
      const auto w = descend(zero, start, cfg, rng).weights;
      for (std::size_t i = 0; i < start.size(); ++i) CHECK(w[i] == doctest::Approx(start[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("delta stop and polyak-ruppert averaging") {
  const Constant zero({0.0, 0.0});
  DescentConfig cfg;
  cfg.mode = DescentMode::Batch;
  cfg.delta = 1e-9;
  RngStream rng(3, 0);
  const auto stopped = descend(zero, std::vector<double>{1.0, 1.0}, cfg, rng);
  CHECK(stopped.iterations == 1);

  const Constant push({1.0, 0.0});
  cfg = DescentConfig{};
  cfg.mode = DescentMode::Batch;
  cfg.a = 1.0;
  cfg.b = 0.0;
  cfg.beta = 0.0;
  cfg.iterations = 10;
  cfg.burn_in = 4;
  cfg.selection = Selection::PolyakRuppert;
  const auto avg = descend(push, std::vector<double>{0.0, 0.0}, cfg, rng);
  // Iterates are -l; those with 4 <= l < 10 average to -6.5.
  CHECK(avg.weights[0] == doctest::Approx(-6.5));
  cfg.selection = Selection::LastIterate;
  CHECK(descend(push, std::vector<double>{0.0, 0.0}, cfg, rng).weights[0] == doctest::Approx(-10.0));
  cfg.selection = Selection::BestObjective;
  const auto best = descend(push, std::vector<double>{0.0, 0.0}, cfg, rng);
  CHECK(best.weights[0] == doctest::Approx(-10.0));
  CHECK(best.objective == doctest::Approx(-10.0));
  CHECK(best.trace.size() == 2);
  CHECK(best.trace.size() <= cfg.iterations + 1);
}

TEST_CASE("divergence aborts with the last finite iterate") {
  const Exploding boom;
  DescentConfig cfg;
  RngStream rng(4, 0);
  try {
    descend(boom, std::vector<double>{0.0, 0.0}, cfg, rng);
    FAIL("expected divergence");
  } catch (const DivergedError& e) {
    CHECK(e.code() == ErrorCode::DivergedToNonFinite);
    CHECK(std::isfinite(e.last_finite()[0]));
    CHECK(e.iteration() >= 1);
  }
  CHECK_THROWS_AS(descend(boom, std::vector<double>{std::nan(""), 0.0}, cfg, rng), Error);
  CHECK_THROWS_AS(descend(boom, std::vector<double>{0.0}, cfg, rng), Error);
}

TEST_CASE("online descent converges on a quadratic surrogate") {
  RngStream rng(5, 0);
  std::vector<std::vector<double>> centers;
  for (int j = 0; j < 200; ++j) centers.push_back({1.0 + 0.02 * rng.normal(), -2.0 + 0.02 * rng.normal(), 0.5});
  const Quadratic q(centers);
  DescentConfig cfg;
  cfg.a = 1.0;
  cfg.b = 1.0;
  cfg.beta = 1.0;
  cfg.iterations = 10000;
  cfg.selection = Selection::LastIterate;
  cfg.trace_stride = 1000;
  RngStream run(5, 1);
  const auto res = descend(q, std::vector<double>{0.0, 0.0, 0.0}, cfg, run);
  const auto m = q.minimizer();
  double dist = 0.0;
  for (std::size_t i = 0; i < 3; ++i) dist += (res.weights[i] - m[i]) * (res.weights[i] - m[i]);
  CHECK(std::sqrt(dist) < 1e-3);

  cfg.mode = DescentMode::Batch;
  cfg.a = 0.5;
  cfg.beta = 0.0;
  cfg.iterations = 200;
  cfg.delta = 1e-12;
  const auto batch = descend(q, std::vector<double>{0.0, 0.0, 0.0}, cfg, run);
  for (std::size_t i = 0; i < 3; ++i) CHECK(batch.weights[i] == doctest::Approx(m[i]).epsilon(1e-3));

  cfg = DescentConfig{};
  cfg.constraint = Constraint::non_negative();
  const auto clipped = descend(q, std::vector<double>{0.0, 0.0, 0.0}, cfg, run);
  CHECK(clipped.weights[1] == 0.0);
}

TEST_CASE("best objective selection never loses to its start") {
  const auto s = iid_samples(400, 3, 6);
  const ObjectiveSpec spec{Variant::Q2, 0.0, MarginalModel::gaussian(0, 1)};
  RngStream rng(6, 0);
  InitStrategy init;
  const auto candidates = init_candidates(s, spec, PredictorKind::Linear, init, rng);
  const auto& start = candidates.front().weights;
  DescentConfig cfg;
  RngStream solve_rng(6, 1);
  const auto res = solve(spec, s, Predictor{PredictorKind::Linear, start}, cfg, solve_rng);
  RngStream eval(6, 2);
  CHECK(res.objective <= res.trace.front().objective);
  CHECK(objective_value(spec, Predictor{PredictorKind::Linear, res.weights}, s, eval) <=
        objective_value(spec, Predictor{PredictorKind::Linear, start}, s, eval));
  CHECK(res.iterations == 300);
  CHECK(res.trace.size() == 31);
}

TEST_CASE("best objective is nonincreasing in the budget") {
  const auto s = iid_samples(300, 3, 7);
  const ObjectiveSpec spec{Variant::Q3, 5.0, MarginalModel::gaussian(0, 1)};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t budget : {10u, 50u, 100u, 200u, 300u}) {
    DescentConfig cfg;
    cfg.iterations = budget;
    RngStream rng(7, 0);
    const auto res = solve(spec, s, Predictor{PredictorKind::Linear, {1.0, 0.0, 0.0}}, cfg, rng);
    CHECK(res.objective <= previous);
    previous = res.objective;
  }
}

TEST_CASE("solve is deterministic") {
  const auto s = iid_samples(300, 4, 8);
  for (auto variant : {Variant::Q2, Variant::Q3, Variant::Q4}) {
    const ObjectiveSpec spec{variant, 5.0, MarginalModel::gaussian(0, 1)};
    for (auto mode : {DescentMode::Online, DescentMode::Batch}) {
      DescentConfig cfg;
      cfg.mode = mode;
      cfg.iterations = 60;
      RngStream a(8, 1), b(8, 1);
      const Predictor p{PredictorKind::Linear, {0.25, 0.25, 0.25, 0.25}};
      const auto x = solve(spec, s, p, cfg, a);
      const auto y = solve(spec, s, p, cfg, b);
      CHECK(x.weights == y.weights);
      CHECK(x.objective == y.objective);
    }
  }
}

TEST_CASE("init candidates") {
  const auto s = iid_samples(200, 3, 9);
  const ObjectiveSpec spec{Variant::Q2, 0.0, MarginalModel::gaussian(0, 1)};
  RngStream rng(9, 0);
  InitStrategy units;
  const auto u = init_candidates(s, spec, PredictorKind::Linear, units, rng);
  REQUIRE(u.size() == 3);
  std::vector<std::vector<double>> got;
  for (const auto& c : u) got.push_back(c.weights);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::vector<double>>{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  for (std::size_t i = 1; i < u.size(); ++i) CHECK(u[i - 1].objective <= u[i].objective);

  InitStrategy simplex;
  simplex.unit_vectors = false;
  simplex.random_simplex = 25;
  for (auto kind : {PredictorKind::Linear, PredictorKind::SquaredWeightLinear}) {
    const auto r = init_candidates(s, spec, kind, simplex, rng);
    REQUIRE(r.size() == 25);
    for (const auto& c : r) {
      const auto eff = effective_weights(Predictor{kind, c.weights});
      CHECK(std::accumulate(eff.begin(), eff.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::all_of(eff.begin(), eff.end(), [](double v) { return v >= 0.0; }));
    }
  }

  InitStrategy warm;
  warm.warm_start = std::vector<double>{0.123, -0.456, 0.789};
  const auto w = init_candidates(s, spec, PredictorKind::Linear, warm, rng);
  CHECK(w.size() == 4);
  CHECK(std::any_of(w.begin(), w.end(), [&](const Candidate& c) { return c.weights == *warm.warm_start; }));
  warm.warm_start = std::vector<double>{1.0};
  CHECK_THROWS_AS(init_candidates(s, spec, PredictorKind::Linear, warm, rng), Error);
}

TEST_CASE("trace csv") {
  const auto s = iid_samples(100, 2, 10);
  const ObjectiveSpec spec{Variant::Q2, 0.0, MarginalModel::gaussian(0, 1)};
  DescentConfig cfg;
  cfg.iterations = 20;
  cfg.trace_stride = 5;
  RngStream rng(10, 0);
  const auto res = solve(spec, s, Predictor{PredictorKind::Linear, {0.5, 0.5}}, cfg, rng);
  std::ostringstream out;
  write_trace_csv(out, res);
  const std::string text = out.str();
  CHECK(text.rfind("iter,objective,lambda_1,lambda_2\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}
