#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "excursion/distributions.hpp"
#include "excursion/objective.hpp"
#include "excursion/optimize.hpp"
#include "excursion/processes.hpp"

namespace excursion {

struct MethodSpec {
  std::string name;
  Variant variant = Variant::Q2;
  double gamma = 0.0;
  PredictorKind predictor = PredictorKind::Linear;
  Constraint constraint;

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct InitConfig {
  bool unit_vectors = true;
  /// Seed each point with the solution at the previous point.
  bool warm_start = true;
  std::size_t random_simplex = 0;

  friend bool operator==(const InitConfig&, const InitConfig&) = default;
};

enum class MarginalMode { Known, Estimated };
enum class WassersteinScale { Uniform, Raw };

struct ExperimentSpec {
  std::string name = "experiment";
  ProcessSpec process;
  double grid_step = 0.02;
  double window_lo = 0.0;
  double window_hi = 29.98;
  std::vector<double> forecast_times;
  double eval_lo = 30.0;
  double eval_hi = 35.0;
  /// Empty: every grid point of [eval_lo, eval_hi].
  std::optional<std::vector<double>> prediction_points;
  std::vector<MethodSpec> methods;
  /// Kriging and exact-excursion columns (Gaussian process only).
  bool baselines = false;
  DescentConfig descent;
  InitConfig init;
  MarginalMode marginal_mode = MarginalMode::Known;
  Family estimate_family = Family::Gaussian;
  std::optional<std::size_t> max_learning_rows;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  WassersteinScale wasserstein_scale = WassersteinScale::Uniform;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Sorted prediction points. The default grid contains the forecast times.
  std::vector<double> points() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

/// T_f presets: 10 points spaced 0.1 (extrapolation) or 0.5 (interpolation) from `start`.
std::vector<double> extrapolation_sample(double start = 30.0);
std::vector<double> interpolation_sample(double start = 30.0);

/// Unknown keys and ill-typed values raise ConfigError.
ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment(const std::string& path);

struct FitEntry {
  double t = 0.0;
  std::string method;
  PredictorKind kind = PredictorKind::Linear;
  std::vector<double> weights;
  /// Raw objective of the returned weights; empty for forecast times and baselines.
  std::optional<double> objective;
  /// Set when t is the k-th forecast time: the prediction is X(t_k) itself.
  std::optional<std::size_t> forecast_index;
  std::size_t rows = 0;
  double seconds = 0.0;
  std::vector<TracePoint> trace;
};

struct FitReport {
  MarginalModel marginal = MarginalModel::gaussian(0.0, 1.0);
  std::vector<double> forecast_times;
  std::vector<std::string> methods;
  /// Ordered by t, then by method.
  std::vector<FitEntry> entries;
  Trajectory training;
};

/// Known marginal of the process, if it has one in closed form.
std::optional<MarginalModel> process_marginal(const ProcessSpec& process);

FitReport run_fit(const ExperimentSpec& spec);

struct EvalRow {
  double t;
  std::string method;
  double excursion_metric;
  double wasserstein;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::size_t replicates = 0;
};

/// Replicate r draws from a stream keyed by (seed, r), so results do not
/// depend on `threads`.
EvalReport run_eval(const ExperimentSpec& spec, const FitReport& fit, unsigned threads = 1);

struct BenchmarkResult {
  double t = 0.0;
  std::size_t rows = 0;
  double seconds = 0.0;
  bool ok = false;
  std::string message;
};

/// Times one Online solve of 300 iterations for the first method at `t`
/// (default: first prediction point outside the forecast sample).
BenchmarkResult run_table1_benchmark(const ExperimentSpec& spec, std::optional<double> t = std::nullopt);

/// "t,method,excursion_metric,wasserstein"
void write_eval_csv(std::ostream& out, const EvalReport& report);
/// "t,method,lambda_1..lambda_n,objective"
void write_fit_csv(std::ostream& out, const FitReport& fit);

}  // namespace excursion
