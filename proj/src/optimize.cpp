#include "excursion/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "excursion/error.hpp"

namespace excursion {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(DescentMode m) { return m == DescentMode::Batch ? "batch" : "online"; }

std::string_view to_string(Selection s) {
  switch (s) {
    case Selection::LastIterate: return "last_iterate";
    case Selection::PolyakRuppert: return "polyak_ruppert";
    case Selection::BestObjective: return "best_objective";
  }
  return "unknown";
}

DescentMode descent_mode_from_string(std::string_view name) {
  if (name == "batch") return DescentMode::Batch;
  if (name == "online") return DescentMode::Online;
  throw Error(ErrorCode::InvalidConfig, "unknown descent mode '" + std::string(name) + "'");
}

Selection selection_from_string(std::string_view name) {
  for (auto s : {Selection::LastIterate, Selection::PolyakRuppert, Selection::BestObjective}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown selection rule '" + std::string(name) + "'");
}

std::string_view to_string(Constraint::Kind k) {
  switch (k) {
    case Constraint::Kind::Unconstrained: return "unconstrained";
    case Constraint::Kind::NonNegativeOrthant: return "non_negative";
    case Constraint::Kind::Ball: return "ball";
  }
  return "unknown";
}

Constraint::Kind constraint_kind_from_string(std::string_view name) {
  for (auto k : {Constraint::Kind::Unconstrained, Constraint::Kind::NonNegativeOrthant, Constraint::Kind::Ball}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown constraint '" + std::string(name) + "'");
}

std::vector<double> project(const Constraint& set, std::span<const double> lambda) {
  std::vector<double> out(lambda.begin(), lambda.end());
  switch (set.kind) {
    case Constraint::Kind::Unconstrained: break;
    case Constraint::Kind::NonNegativeOrthant:
      for (auto& v : out) v = std::max(0.0, v);
      break;
    case Constraint::Kind::Ball: {
      double norm = 0.0;
      for (double v : out) norm += v * v;
      norm = std::sqrt(norm);
      // Slack keeps the projection idempotent on points already on the sphere.
      if (norm > set.radius * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
        for (auto& v : out) v *= set.radius / norm;
      }
      break;
    }
  }
  return out;
}

double DescentConfig::step_size(std::size_t l) const {
  return a * std::pow(b + static_cast<double>(l), -beta);
}

void DescentConfig::validate() const {
  auto fail = [](const char* key, const char* what) { throw ConfigError(std::string("descent.") + key, what); };
  if (!(a > 0)) fail("a", "must be > 0");
  if (!(b >= 0)) fail("b", "must be >= 0");
  if (mode == DescentMode::Online && !(beta > 0.5 && beta <= 1.0)) fail("beta", "must lie in (0.5, 1] for online descent");
  if (mode == DescentMode::Batch && !(beta >= 0.0)) fail("beta", "must be >= 0");
  if (iterations < 1) fail("iterations", "must be >= 1");
  if (burn_in >= iterations) fail("burn_in", "must be smaller than iterations");
  if (!(delta >= 0)) fail("delta", "must be >= 0");
  if (trace_stride < 1) fail("trace_stride", "must be >= 1");
  if (constraint.kind == Constraint::Kind::Ball && !(constraint.radius > 0)) fail("radius", "must be > 0");
}

ExcursionProblem::ExcursionProblem(ObjectiveSpec spec, const LearningSamples& samples, PredictorKind kind)
    : spec_(std::move(spec)), samples_(samples), kind_(kind) {
  spec_.validate();
  if (samples_.rows() == 0) throw Error(ErrorCode::InsufficientData, "no learning rows");
}

Predictor ExcursionProblem::predictor(std::span<const double> lambda) const {
  return Predictor{kind_, std::vector<double>(lambda.begin(), lambda.end())};
}

double ExcursionProblem::value(std::span<const double> lambda, RngStream& rng) const {
  return objective_value(spec_, predictor(lambda), samples_, rng);
}

std::vector<double> ExcursionProblem::row_subgradient(std::span<const double> lambda, std::size_t j,
                                                      RngStream& rng) const {
  std::optional<std::size_t> boot;
  if (spec_.variant == Variant::Q3) boot = rng.index(samples_.rows());
  return subgradient(spec_, predictor(lambda), samples_, j, boot);
}

std::vector<double> ExcursionProblem::mean_subgradient(std::span<const double> lambda, RngStream& rng) const {
  std::vector<std::size_t> boot;
  if (spec_.variant == Variant::Q3) boot = bootstrap_indices(samples_.rows(), rng);
  return excursion::mean_subgradient(spec_, predictor(lambda), samples_, boot);
}

SolveResult descend(const DescentProblem& problem, std::span<const double> start, const DescentConfig& cfg,
                    RngStream& rng) {
  const auto t_begin = std::chrono::steady_clock::now();
  cfg.validate();
  if (start.size() != problem.dimension()) throw Error(ErrorCode::LengthMismatch, "start has wrong dimension");
  if (!all_finite(start)) throw Error(ErrorCode::NonFiniteInput, "start is not finite");

  RngStream row_rng = rng.split(1);
  // Every evaluation replays the same stream: common random numbers.
  const RngStream eval_stream = rng.split(2);

  SolveResult result;
  result.selection = cfg.selection;
  std::vector<double> lambda = project(cfg.constraint, start);
  std::vector<double> best = lambda;
  double best_value = std::numeric_limits<double>::infinity();

  auto value_of = [&](std::span<const double> w) {
    RngStream eval_rng = eval_stream;
    return problem.value(w, eval_rng);
  };
  auto evaluate = [&](std::size_t l) {
    const double v = value_of(lambda);
    result.trace.push_back({l, v, lambda});
    if (v < best_value) {
      best_value = v;
      best = lambda;
    }
  };
  evaluate(0);

  std::vector<double> average(lambda.size(), 0.0);
  std::size_t averaged = 0;
  const std::size_t rows = problem.rows();

  for (std::size_t l = 0; l < cfg.iterations; ++l) {
    if (cfg.selection == Selection::PolyakRuppert && l >= cfg.burn_in) {
      for (std::size_t i = 0; i < lambda.size(); ++i) average[i] += lambda[i];
      ++averaged;
    }
    const double eta = cfg.step_size(l + 1);
    const std::vector<double> g = cfg.mode == DescentMode::Online
                                      ? problem.row_subgradient(lambda, row_rng.index(rows), row_rng)
                                      : problem.mean_subgradient(lambda, row_rng);
    std::vector<double> next(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) next[i] = lambda[i] - eta * g[i];
    next = project(cfg.constraint, next);
    if (!all_finite(next)) {
      throw DivergedError("iterate became non-finite at step " + std::to_string(l + 1), lambda, l + 1);
    }
    const double moved = distance(next, lambda);
    lambda = std::move(next);
    result.iterations = l + 1;
    const bool stop = moved < cfg.delta;
    if ((l + 1) % cfg.trace_stride == 0 || l + 1 == cfg.iterations || stop) evaluate(l + 1);
    if (stop) break;
  }

  switch (cfg.selection) {
    case Selection::LastIterate:
      result.weights = lambda;
      result.objective = result.trace.back().objective;
      break;
    case Selection::PolyakRuppert:
      if (averaged == 0) {
        result.weights = lambda;
      } else {
        for (auto& v : average) v /= static_cast<double>(averaged);
        result.weights = std::move(average);
      }
      result.objective = value_of(result.weights);
      break;
    case Selection::BestObjective:
      result.weights = best;
      result.objective = best_value;
      break;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return result;
}

SolveResult solve(const ObjectiveSpec& spec, const LearningSamples& samples, const Predictor& start,
                  const DescentConfig& cfg, RngStream& rng) {
  const ExcursionProblem problem(spec, samples, start.kind);
  return descend(problem, start.weights, cfg, rng);
}

std::vector<Candidate> init_candidates(const LearningSamples& samples, const ObjectiveSpec& spec,
                                       PredictorKind kind, const InitStrategy& strategy, RngStream& rng) {
  const std::size_t n = samples.dimension;
  std::vector<std::vector<double>> points;
  if (strategy.unit_vectors) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      points.push_back(std::move(e));
    }
  }
  if (strategy.warm_start) {
    if (strategy.warm_start->size() != n) throw Error(ErrorCode::LengthMismatch, "warm start has wrong dimension");
    points.push_back(*strategy.warm_start);
  }
  RngStream simplex_rng = rng.split(3);
  for (std::size_t k = 0; k < strategy.random_simplex; ++k) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = simplex_rng.exponential());
    for (auto& v : w) {
      v /= total;
      if (kind == PredictorKind::SquaredWeightLinear) v = std::sqrt(v);
    }
    points.push_back(std::move(w));
  }
  std::vector<Candidate> out;
  out.reserve(points.size());
  const RngStream eval_stream = rng.split(4);
  for (auto& w : points) {
    RngStream eval_rng = eval_stream;
    const double value = objective_value(spec, Predictor{kind, w}, samples, eval_rng);
    out.push_back({std::move(w), value});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& x, const Candidate& y) { return x.objective < y.objective; });
  return out;
}

void write_trace_csv(std::ostream& out, const SolveResult& result) {
  out << "iter,objective";
  const std::size_t n = result.weights.size();
  for (std::size_t i = 1; i <= n; ++i) out << ",lambda_" << i;
  out << '\n';
  char buf[64];
  for (const auto& point : result.trace) {
    out << point.iteration;
    std::snprintf(buf, sizeof buf, ",%.17g", point.objective);
    out << buf;
    for (double w : point.weights) {
      std::snprintf(buf, sizeof buf, ",%.17g", w);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace excursion
