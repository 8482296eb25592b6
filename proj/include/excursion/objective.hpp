#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "excursion/distributions.hpp"
#include "excursion/processes.hpp"
#include "excursion/rng.hpp"

namespace excursion {

/// Geometry of one prediction problem: predict X(target) from X(forecast
/// offsets), learning from a trajectory observed on [window_lo, window_hi].
struct ForecastDesign {
  std::vector<double> forecast_offsets;
  double target = 0.0;
  double step = 1.0;
  double window_lo = 0.0;
  double window_hi = 0.0;

  std::size_t size() const noexcept { return forecast_offsets.size(); }
  /// Throws InvalidGrid / GridMisaligned / DomainError.
  void validate() const;
};

/// N learning rows: y_j = X(t + h_j), row j of `design` = X(T_f + h_j).
struct LearningSamples {
  std::vector<double> y;
  /// Row-major N x n.
  std::vector<double> design;
  std::vector<double> shifts;
  std::size_t dimension = 0;

  std::size_t rows() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t j) const {
    return {design.data() + j * dimension, dimension};
  }
};

/// Enumerates every grid shift s with s + (T_f u {t}) inside the observation
/// window. With `max_rows` set and more shifts available, a uniform subset
/// without replacement is kept (in increasing shift order).
LearningSamples extract_learning_samples(const Trajectory& traj, const ForecastDesign& design,
                                         std::optional<std::size_t> max_rows, RngStream& rng);

enum class PredictorKind { Linear, SquaredWeightLinear, MaxLinear };

std::string_view to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(std::string_view name);

struct Predictor {
  PredictorKind kind = PredictorKind::Linear;
  std::vector<double> weights;
};

double predict(PredictorKind kind, std::span<const double> weights, std::span<const double> x);
inline double predict(const Predictor& p, std::span<const double> x) { return predict(p.kind, p.weights, x); }

/// Subgradient of the predictor with respect to its weights. MaxLinear ties
/// go to the lowest index.
void predictor_gradient(PredictorKind kind, std::span<const double> weights, std::span<const double> x,
                        std::span<double> out);

/// Effective linear weights (lambda^2 for SquaredWeightLinear).
std::vector<double> effective_weights(const Predictor& p);

enum class Variant { Q2, Q3, Q4 };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view name);

struct ObjectiveSpec {
  Variant variant = Variant::Q2;
  /// Penalty weight of the law-preservation term (ignored by Q2).
  double gamma = 0.0;
  MarginalModel marginal = MarginalModel::gaussian(0.0, 1.0);

  void validate() const;
};

/// Per-row functional. For Q3, `bootstrap_row` names the learning row whose
/// predictor value plays the independent copy Y_j.
double q_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
               std::size_t j, std::optional<std::size_t> bootstrap_row = std::nullopt);

/// Mean of q_value over all rows. Q3 draws one bootstrap resample of the
/// rows from `rng` per call.
double objective_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                       RngStream& rng);

/// Mean objective with explicit bootstrap rows (Q3); deterministic.
double objective_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                       std::span<const std::size_t> bootstrap_rows);

/// Shifts a raw objective onto the excursion-distance scale: subtracts the
/// 1/2 contributed by E F(X) and adds back gamma/3 removed from the squared
/// Wasserstein penalty. With a uniform F(X), this is the empirical excursion
/// distance plus gamma times the squared distance of F(prediction) to U(0,1).
double normalized_objective(const ObjectiveSpec& spec, double raw);

/// Subgradient of q_value(spec, p, samples, j, bootstrap_row) in lambda.
std::vector<double> subgradient(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                                std::size_t j, std::optional<std::size_t> bootstrap_row = std::nullopt);

/// (1/N) sum_j subgradient(j), computed in O(N n + N^2) using cached row
/// values. For Q3, `bootstrap_rows[j]` is row j's independent copy.
std::vector<double> mean_subgradient(const ObjectiveSpec& spec, const Predictor& p,
                                     const LearningSamples& samples,
                                     std::span<const std::size_t> bootstrap_rows = {});

/// N uniform draws with replacement from [0, N).
std::vector<std::size_t> bootstrap_indices(std::size_t n, RngStream& rng);

}  // namespace excursion
