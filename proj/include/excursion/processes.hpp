#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "excursion/distributions.hpp"
#include "excursion/rng.hpp"

namespace excursion {

/// Values of a process on the regular grid t0 + i*h.
struct Trajectory {
  double t0 = 0.0;
  double step = 1.0;
  std::vector<double> values;
  /// Declared law of X(t); empty when the marginal has no closed form (AR).
  std::optional<MarginalModel> marginal;

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * step; }
};

enum class ProcessKind { GaussExpCov, StableMovingAverage, ArStudentT };

std::string_view to_string(ProcessKind kind);

struct StableMaParams {
  double alpha = 1.0;
  /// Kernel taps m(0), m(1), ...; X(i) = sum_k m(k) xi(i - k).
  std::vector<double> kernel;

  friend bool operator==(const StableMaParams&, const StableMaParams&) = default;
};

struct ArParams {
  /// phi_1..phi_p; phi_k multiplies X(t - (p - k + 1) * lag).
  std::vector<double> phi;
  /// Grid steps per autoregressive lag.
  std::size_t lag_stride = 1;
  MarginalModel innovation = MarginalModel::student_t(0.0, 1.0, 0.8);
  std::size_t burn_in = 10000;

  friend bool operator==(const ArParams&, const ArParams&) = default;
};

struct ProcessSpec {
  ProcessKind kind = ProcessKind::GaussExpCov;
  StableMaParams stable;
  ArParams ar;

  static ProcessSpec gauss_exp_cov();
  /// alpha must be 0.5 (Levy innovations) or 1 (Cauchy innovations) for the
  /// default kernel; any kernel is accepted through the struct directly.
  static ProcessSpec stable_moving_average(double alpha);
  static ProcessSpec ar_student_t(std::vector<double> phi, double nu, std::size_t lag_stride);

  /// Validates the kind-specific invariants (kernel norm, AR stationarity).
  void validate() const;

  friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;
};

/// Stationary Gaussian process with unit variance and covariance exp(-|t|/2),
/// sampled exactly through its Markov recursion.
Trajectory simulate_gauss_exp_cov(double t0, double step, std::size_t length, RngStream& rng);

/// Exponential kernel with unit alpha-norm, taps 0..250.
std::vector<double> default_kernel(double alpha);

/// (sum m(k)^alpha)^(1/alpha).
double kernel_norm(std::span<const double> kernel, double alpha);

/// Marginal law of the stable moving average with the given parameters.
MarginalModel stable_ma_marginal(const StableMaParams& params);

Trajectory simulate_stable_ma(const ProcessSpec& spec, double t0, double step, std::size_t length,
                              RngStream& rng);

/// Same convolution with caller-provided innovations on lattice indices
/// [first - (taps - 1), first + length - 1].
std::vector<double> convolve_innovations(std::span<const double> kernel,
                                         std::span<const double> innovations);

/// True when every root of the lag polynomial lies outside the unit circle.
bool ar_is_stationary(std::span<const double> phi);

Trajectory simulate_ar(const ProcessSpec& spec, double t0, double step, std::size_t length,
                       std::size_t burn_in, RngStream& rng);

/// Dispatch on spec.kind; AR uses spec.ar.burn_in.
Trajectory simulate(const ProcessSpec& spec, double t0, double step, std::size_t length,
                    RngStream& rng);

/// CSV with header "t,value", 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace excursion
