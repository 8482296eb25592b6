#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "excursion/objective.hpp"
#include "excursion/rng.hpp"

namespace excursion {

enum class DescentMode { Batch, Online };
enum class Selection { LastIterate, PolyakRuppert, BestObjective };

std::string_view to_string(DescentMode m);
std::string_view to_string(Selection s);
DescentMode descent_mode_from_string(std::string_view name);
Selection selection_from_string(std::string_view name);

struct Constraint {
  enum class Kind { Unconstrained, NonNegativeOrthant, Ball };
  Kind kind = Kind::Unconstrained;
  double radius = 1.0;

  static Constraint unconstrained() { return {}; }
  static Constraint non_negative() { return {Kind::NonNegativeOrthant, 1.0}; }
  static Constraint ball(double radius) { return {Kind::Ball, radius}; }

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

std::string_view to_string(Constraint::Kind k);
Constraint::Kind constraint_kind_from_string(std::string_view name);

/// Metric projection onto the constraint set.
std::vector<double> project(const Constraint& set, std::span<const double> lambda);

struct DescentConfig {
  DescentMode mode = DescentMode::Online;
  /// Step schedule eta_l = a * (b + l)^(-beta), l = 1, 2, ...
  double a = 10.0;
  double b = 10.0;
  double beta = 0.7;
  std::size_t iterations = 300;
  /// Stop when |lambda_{l+1} - lambda_l| < delta; 0 runs to the cap.
  double delta = 0.0;
  /// Polyak-Ruppert burn-in.
  std::size_t burn_in = 0;
  Selection selection = Selection::BestObjective;
  Constraint constraint;
  /// Full-objective evaluation period for the trace and BestObjective.
  std::size_t trace_stride = 10;

  double step_size(std::size_t l) const;
  /// Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const DescentConfig&, const DescentConfig&) = default;
};

struct TracePoint {
  std::size_t iteration;
  double objective;
  std::vector<double> weights;
};

struct SolveResult {
  std::vector<double> weights;
  /// Objective of the returned weights (raw mean scale).
  double objective = 0.0;
  std::vector<TracePoint> trace;
  std::size_t iterations = 0;
  Selection selection = Selection::BestObjective;
  double seconds = 0.0;
};

/// Anything the descent loop can minimize: a mean of N per-row terms with
/// row subgradients.
class DescentProblem {
 public:
  virtual ~DescentProblem() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::size_t rows() const = 0;
  virtual double value(std::span<const double> lambda, RngStream& rng) const = 0;
  virtual std::vector<double> row_subgradient(std::span<const double> lambda, std::size_t j,
                                              RngStream& rng) const = 0;
  virtual std::vector<double> mean_subgradient(std::span<const double> lambda, RngStream& rng) const = 0;
};

/// Excursion functional over a set of learning samples.
class ExcursionProblem final : public DescentProblem {
 public:
  ExcursionProblem(ObjectiveSpec spec, const LearningSamples& samples, PredictorKind kind);

  std::size_t dimension() const override { return samples_.dimension; }
  std::size_t rows() const override { return samples_.rows(); }
  double value(std::span<const double> lambda, RngStream& rng) const override;
  std::vector<double> row_subgradient(std::span<const double> lambda, std::size_t j,
                                      RngStream& rng) const override;
  std::vector<double> mean_subgradient(std::span<const double> lambda, RngStream& rng) const override;

 private:
  Predictor predictor(std::span<const double> lambda) const;

  ObjectiveSpec spec_;
  const LearningSamples& samples_;
  PredictorKind kind_;
};

/// Projected subgradient descent (batch or online) from `start`.
SolveResult descend(const DescentProblem& problem, std::span<const double> start, const DescentConfig& cfg,
                    RngStream& rng);

SolveResult solve(const ObjectiveSpec& spec, const LearningSamples& samples, const Predictor& start,
                  const DescentConfig& cfg, RngStream& rng);

struct InitStrategy {
  bool unit_vectors = true;
  std::optional<std::vector<double>> warm_start;
  std::size_t random_simplex = 0;
};

struct Candidate {
  std::vector<double> weights;
  double objective;
};

/// Starting points sorted by objective value, best first. Random simplex
/// draws are uniform on {lambda >= 0, |lambda|_1 = 1}; for squared-weight
/// predictors the square root is stored so the effective weights lie there.
std::vector<Candidate> init_candidates(const LearningSamples& samples, const ObjectiveSpec& spec,
                                       PredictorKind kind, const InitStrategy& strategy, RngStream& rng);

/// CSV "iter,objective,lambda_1..lambda_n".
void write_trace_csv(std::ostream& out, const SolveResult& result);

}  // namespace excursion
